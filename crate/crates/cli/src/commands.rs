//! One function per subcommand, each producing a table and a manifest summary.

use crate::config::{parse_psi, ExperimentConfig, PsiChoice, Subcommand};
use crate::error::CliError;
use crate::output::{num, Outcome, Table};
use serde_json::json;
use shearlab::algebra::{IntFormVector, UTBPoint};
use shearlab::eisenstein::{mu_eis, regularized_e1, regularized_e1_fourier, EisensteinEvaluator, Route};
use shearlab::group::GroupSpec;
use shearlab::modular::{delta_qexp, kronecker_check, petersson_norm, second_moment_lhs, second_moment_prediction, sym2_l};
use shearlab::orbit::{coset_disparity, count_orbit, fit_counting_law, identity_coset_ratio, FitModel, OrbitQuery};
use shearlab::shear::{fit_log_linear, fitted_decay_exponent, haar_mean, mu_t, mu_t_strip};
use shearlab::testfn::TestFunction;

pub fn dispatch(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    match c.subcommand {
        Subcommand::Count | Subcommand::CosetCount => count(c),
        Subcommand::Fit => fit(c),
        Subcommand::Shear => shear(c),
        Subcommand::Eisenstein => eisenstein(c),
        Subcommand::Moment => moment(c),
        Subcommand::Kronecker => kronecker(c),
        Subcommand::Selftest => crate::selftest::run(c.seed),
    }
}

fn count(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = c.group_spec()?;
    let mut q = OrbitQuery::new(spec, IntFormVector::new(c.x0[0], c.x0[1], c.x0[2]), c.t.clone());
    q.norm = c.norm;
    q.slack = c.slack;
    q.max_nodes = c.max_nodes;
    if c.subcommand == Subcommand::CosetCount {
        q.q = c.q;
    }
    let r = count_orbit(&q)?;
    let mut headers = vec!["T [norm radius]".to_string(), "count [orbit points with norm < T]".into(), "saturated [search complete]".into()];
    if let Some(b) = &r.breakdown {
        headers.extend(b.labels.iter().map(|l| format!("coset {l} [count in Gamma(q) coset]")));
    }
    let mut table = Table { headers, rows: Vec::new() };
    for (i, t) in r.t_list.iter().enumerate() {
        let mut row = vec![num(*t), r.counts[i].to_string(), r.saturated[i].to_string()];
        if let Some(b) = &r.breakdown {
            row.extend(b.counts[i].iter().map(|n| n.to_string()));
        }
        table.push(row);
    }
    let mut summary = json!({ "nodes": r.nodes, "depth": r.depth });
    if r.breakdown.is_some() && !r.budget_exhausted {
        summary["coset_disparity"] = json!(coset_disparity(&r)?);
        summary["identity_coset_ratio"] = json!(identity_coset_ratio(&r)?);
    }
    Ok(Outcome { table, summary, budget_exhausted: r.budget_exhausted, failure: None })
}

const FIT_MODELS: [FitModel; 5] = [FitModel::TLogTPlusT, FitModel::LinearPlusPower, FitModel::PurePower, FitModel::Linear, FitModel::TLogT];

fn model_name(m: FitModel) -> &'static str {
    match m {
        FitModel::TLogTPlusT => "t_log_t_plus_t",
        FitModel::LinearPlusPower => "linear_plus_power",
        FitModel::PurePower => "pure_power",
        FitModel::Linear => "linear",
        FitModel::TLogT => "t_log_t",
    }
}

/// Reads (T, count) from the saturated rows of a counting CSV.
pub fn read_counts(path: &std::path::Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let (mut ts, mut ns) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Validation(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| CliError::Validation("counting CSV needs T, count, saturated columns".into()));
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| CliError::Validation(format!("not a number: '{s}'")));
        if field(2)?.trim() != "true" {
            continue;
        }
        ts.push(parse(field(0)?)?);
        ns.push(parse(field(1)?)?);
    }
    Ok((ts, ns))
}

fn fit(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (ts, ns) = read_counts(c.input.as_ref().expect("validated"))?;
    if ns.windows(2).any(|w| w[1] < w[0]) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Validation("counts must be nondecreasing in increasing T".into()));
    }
    let keep: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] >= c.min_t).collect();
    let ts: Vec<f64> = keep.iter().map(|&i| ts[i]).collect();
    let ns: Vec<f64> = keep.iter().map(|&i| ns[i]).collect();
    let models: Vec<FitModel> = if c.models.is_empty() { FIT_MODELS.to_vec() } else { c.models.clone() };
    let mut table = Table::new(&[
        "model",
        "c1 [leading coefficient]",
        "c2 [secondary coefficient]",
        "delta [fitted exponent]",
        "residual [rms relative]",
        "top_octave_rel_residual [max relative, T >= Tmax/2]",
    ]);
    let mut summary = serde_json::Map::new();
    for m in models {
        let f = fit_counting_law(&ts, &ns, m)?;
        table.push(vec![
            model_name(m).into(),
            num(f.c1),
            num(f.c2),
            f.delta.map(num).unwrap_or_default(),
            num(f.residual),
            num(f.top_octave_rel_residual),
        ]);
        summary.insert(model_name(m).into(), json!(f.residual));
    }
    Ok(Outcome::ok(table, json!({ "points": ts.len(), "residuals": summary })))
}

fn build_psi(choice: &PsiChoice, spec: &GroupSpec) -> Result<TestFunction, CliError> {
    Ok(match choice {
        PsiChoice::Bump(b) => TestFunction::bump(spec, *b)?,
        PsiChoice::Delta(n) => TestFunction::psi_f(spec, delta_qexp(*n)),
    })
}

fn shear(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = c.group_spec()?;
    let psi = build_psi(&parse_psi(&c.psi, &spec)?, &spec)?.register(c.seed)?;
    // predicted main term a log T + b, when the Eisenstein functional is available
    let main = if !psi.k_invariant {
        None
    } else if spec.lattice {
        Some((haar_mean(&psi)?, mu_eis(&psi, true)?))
    } else if matches!(psi.support, shearlab::testfn::Support::Box { .. }) {
        Some((0.0, mu_eis(&psi, false)?))
    } else {
        None
    };
    let mut table = Table::new(&[
        "T [shear parameter]",
        "mu_T [ray measure of psi]",
        "mu_T_strip [strip measure of psi]",
        "residual [mu_T minus predicted main term]",
    ]);
    let mut values = Vec::new();
    for &t in &c.t {
        let s = mu_t(&psi, t, c.tol)?;
        let strip = if t > 0.0 { num(mu_t_strip(&psi, t, c.tol)?) } else { String::new() };
        let res = main.filter(|_| t > 0.0).map(|(a, b)| num(s.value - a * t.ln() - b)).unwrap_or_default();
        values.push(s.value);
        table.push(vec![num(t), num(s.value), strip, res]);
    }
    let mut summary = json!({ "psi": psi.name, "k_invariant": psi.k_invariant });
    if let Some((a, b)) = main {
        summary["predicted_slope"] = json!(a);
        summary["predicted_intercept"] = json!(b);
    }
    let positive: Vec<usize> = (0..c.t.len()).filter(|&i| c.t[i] > 0.0).collect();
    if positive.len() >= 2 {
        let ts: Vec<f64> = positive.iter().map(|&i| c.t[i]).collect();
        let vs: Vec<f64> = positive.iter().map(|&i| values[i]).collect();
        let (slope, intercept) = fit_log_linear(&ts, &vs)?;
        summary["fitted_slope"] = json!(slope);
        summary["fitted_intercept"] = json!(intercept);
    }
    Ok(Outcome::ok(table, summary))
}

fn eisenstein(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = c.group_spec()?;
    let route = c.route.unwrap_or(if spec.lattice { Route::Fourier } else { Route::CosetSum });
    let mut e = match route {
        Route::Fourier => {
            if spec != GroupSpec::psl2z() {
                return Err(CliError::Validation("the Fourier route is implemented for psl2z".into()));
            }
            EisensteinEvaluator::fourier()
        }
        Route::CosetSum => EisensteinEvaluator::coset(&spec),
    };
    if let Some(h) = c.min_height {
        if !(h > 0.0 && h < 1.0) {
            return Err(CliError::Validation("min_height must lie in (0, 1)".into()));
        }
        e = e.with_min_height(h);
    }
    let mut table = Table::new(&["x [Re z]", "y [Im z]", "s", "value [E(z,s)]", "route", "est_error [absolute]"]);
    for z in &c.z {
        let p = UTBPoint::up(z[0], z[1]);
        for &s in &c.s {
            // at s = 1 on the lattice the pole is removed and the eta formula is reported
            let (value, route_name, err) = if spec.lattice && s == 1.0 {
                let v = regularized_e1(&p);
                (v, "regularized", (v - regularized_e1_fourier(&p)?).abs())
            } else {
                let v = e.eval(&p, s)?;
                (v.value, if v.route == Route::Fourier { "fourier" } else { "coset_sum" }, v.est_error)
            };
            table.push(vec![num(z[0]), num(z[1]), num(s), num(value), route_name.to_string(), num(err)]);
        }
    }
    Ok(Outcome::ok(table, json!({ "group": spec.name })))
}

fn moment(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let f = delta_qexp(c.terms);
    let norm = petersson_norm(&f);
    let l = sym2_l(&f, 1.0, true)?;
    let cld = l.completed_log_derivative.expect("requested");
    let mut table = Table::new(&[
        "T [shear parameter]",
        "lhs [second moment along the sheared ray]",
        "predicted [main term]",
        "residual [lhs minus predicted]",
    ]);
    let mut gaps = Vec::new();
    for &t in &c.t {
        let lhs = second_moment_lhs(&f, t)?;
        let pred = second_moment_prediction(norm, cld, t)?;
        gaps.push(lhs - pred);
        table.push(vec![num(t), num(lhs), num(pred), num(lhs - pred)]);
    }
    let mut summary = json!({ "petersson_norm_sq": norm, "completed_log_derivative_at_1": cld });
    if c.t.len() >= 2 {
        summary["fitted_decay_exponent"] = json!(fitted_decay_exponent(&c.t, &gaps)?);
    }
    Ok(Outcome::ok(table, summary))
}

fn kronecker(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let k = kronecker_check(&delta_qexp(c.terms))?;
    let mut table = Table::new(&["lhs [pairing with log(4y|eta|^4) over norm]", "rhs [gamma minus completed log-derivative]", "gap [absolute]"]);
    table.push(vec![num(k.lhs), num(k.rhs), num(k.gap)]);
    Ok(Outcome::ok(table, json!({ "gap": k.gap })))
}
