//! Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero when any fails.

use num_complex::Complex64;
use serde_json::Value;
use shearlab::algebra::*;
use shearlab::eisenstein::*;
use shearlab::group::GroupSpec;
use shearlab::modular::*;
use shearlab::orbit::*;
use shearlab::shear::*;
use shearlab::special::*;
use shearlab::testfn::{BumpParams, TestFunction};
use std::f64::consts::PI;
use std::time::Instant;

type Check = Result<(bool, String), shearlab::ShearError>;
type Criterion = (&'static str, fn() -> Check);

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn bump(spec: &GroupSpec) -> TestFunction {
    TestFunction::bump(spec, BumpParams::default()).expect("default bump")
}

fn algebra() -> Check {
    let start = Instant::now();
    let out = shearlab_cli::selftest::run(0).map_err(|e| shearlab::ShearError::NonConvergent(e.to_string()))?;
    let algebra_rows: Vec<&Vec<String>> = out.table.rows.iter().take(3).collect();
    let ok = algebra_rows.iter().all(|r| r[4] == "true") && start.elapsed().as_secs_f64() < 10.0;
    let errs: Vec<String> = algebra_rows.iter().map(|r| format!("{}={}", r[0], r[2])).collect();
    Ok((ok, format!("{} in {:.1}s", errs.join(" "), start.elapsed().as_secs_f64())))
}

fn counting_exact() -> Check {
    let start = Instant::now();
    let spec = GroupSpec::psl2z();
    let ts = vec![4.0, 8.0, 12.0];
    let r = count_orbit(&OrbitQuery::new(spec.clone(), IntFormVector::new(0, 1, 0), ts.clone()))?;
    let brute = ts.iter().map(|&t| brute_force_count_xy(&spec, Norm::Sup, t)).collect::<Result<Vec<_>, _>>()?;
    let ok = r.counts == brute && r.saturated.iter().all(|&s| s) && start.elapsed().as_secs() < 120;
    Ok((ok, format!("counts {:?} brute force {:?}", r.counts, brute)))
}

fn fits(spec: GroupSpec, ts: Vec<f64>) -> Result<Vec<FitResult>, shearlab::ShearError> {
    let r = count_orbit(&OrbitQuery::new(spec, IntFormVector::new(0, 1, 0), ts.clone()))?;
    if r.saturated.iter().any(|s| !s) {
        return Err(shearlab::ShearError::BudgetExceeded { nodes: r.nodes, depth: r.depth });
    }
    let ns: Vec<f64> = r.counts.iter().map(|&n| n as f64).collect();
    [FitModel::TLogTPlusT, FitModel::Linear, FitModel::PurePower, FitModel::TLogT]
        .into_iter()
        .map(|m| fit_counting_law(&ts, &ns, m))
        .collect()
}

fn lattice_law() -> Check {
    let f = fits(GroupSpec::psl2z(), vec![50.0, 100.0, 200.0, 400.0])?;
    let (main, lin, pow) = (&f[0], &f[1], &f[2]);
    let ok = main.c1 > 0.0
        && main.top_octave_rel_residual < 0.05
        && lin.residual >= 2.0 * main.residual
        && pow.residual >= 2.0 * main.residual;
    Ok((ok, format!("C1={:.4} top-octave {:.2e} residuals tlogt {:.2e} linear {:.2e} power {:.2e}", main.c1, main.top_octave_rel_residual, main.residual, lin.residual, pow.residual)))
}

fn thin_law() -> Check {
    let f = fits(GroupSpec::thin4(), vec![100.0, 200.0, 400.0, 800.0, 1600.0])?;
    let (lin, tlogt) = (&f[1], &f[3]);
    let ok = lin.top_octave_rel_residual < 0.10 && tlogt.residual >= 2.0 * lin.residual;
    Ok((ok, format!("C={:.4} top-octave {:.2e} residuals linear {:.2e} tlogt {:.2e}", lin.c1, lin.top_octave_rel_residual, lin.residual, tlogt.residual)))
}

fn non_equidistribution() -> Check {
    let mut q = OrbitQuery::new(GroupSpec::thin4(), IntFormVector::new(0, 1, 0), vec![100.0, 200.0, 400.0, 800.0]);
    q.q = Some(3);
    let r = count_orbit(&q)?;
    let d = coset_disparity(&r)?;
    let i = identity_coset_ratio(&r)?;
    Ok((d > 2.0 && i > 2.0, format!("thin group, q=3: disparity {d:.3}, identity coset ratio {i:.3}")))
}

fn lattice_equidistribution() -> Check {
    let psi = bump(&GroupSpec::psl2z());
    let h = haar_mean(&psi)?;
    let e = mu_eis(&psi, true)?;
    let r = equidistribution_regression(&psi, &[10.0, 30.0, 100.0, 300.0, 1000.0], 1e-7, Some((h, e)))?;
    let ok = rel(r.slope, h) < 0.05 && rel(r.intercept, e) < 0.10 && r.decay_exponent > 0.0;
    Ok((ok, format!("slope {:.5} vs {h:.5}, intercept {:.5} vs {e:.5}, decay exponent {:.3}", r.slope, r.intercept, r.decay_exponent)))
}

fn thin_equidistribution() -> Check {
    let psi = bump(&GroupSpec::thin4());
    let e = mu_eis(&psi, false)?;
    let r = equidistribution_regression(&psi, &[10.0, 30.0, 100.0, 300.0, 1000.0], 1e-7, Some((0.0, e)))?;
    let ok = r.slope.abs() < 0.05 * psi.peak && rel(r.intercept, e) < 0.10;
    Ok((ok, format!("slope {:.5} (peak {:.3}), intercept {:.5} vs {e:.5}", r.slope, psi.peak, r.intercept)))
}

fn stage_one() -> Check {
    let psi = bump(&GroupSpec::psl2z());
    let ts = [10.0, 30.0, 100.0, 300.0];
    let gaps = ts.iter().map(|&t| Ok((mu_t(&psi, t, 1e-7)?.value - mu_t_strip(&psi, t, 1e-7)?).abs())).collect::<Result<Vec<f64>, shearlab::ShearError>>()?;
    let eta = fitted_decay_exponent(&ts, &gaps)?;
    let ok = gaps.windows(2).all(|w| w[1] < w[0]) && eta > 0.0;
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
    Ok((ok, format!("gaps [{}], fitted power {eta:.3}", shown.join(", "))))
}

fn eisenstein_identities() -> Check {
    let i = UTBPoint::up(0.0, 1.0);
    let res = residue_limit(&i, 1e-4)?;
    let mut worst = 0.0f64;
    for (x, y) in [(0.0, 1.0), (0.25, 1.2), (-0.45, 2.0), (0.1, 4.5), (0.7, 0.3)] {
        let p = UTBPoint::up(x, y);
        worst = worst.max((regularized_e1(&p) - regularized_e1_limit(&p, 1e-4)?).abs());
    }
    let f = EisensteinEvaluator::fourier().eval(&i, 2.0)?.value;
    let c = EisensteinEvaluator::coset(&GroupSpec::psl2z()).eval(&i, 2.0)?.value;
    let ok = (res - 3.0 / PI).abs() < 1e-3 && worst < 1e-5 && (f - c).abs() < 1e-8;
    Ok((ok, format!("residue gap {:.1e}, regularized gap {worst:.1e}, E(i,2) route gap {:.1e}", (res - 3.0 / PI).abs(), (f - c).abs())))
}

fn kronecker() -> Check {
    let start = Instant::now();
    let k = kronecker_check(&delta_qexp(4000))?;
    Ok((k.gap < 1e-4 && start.elapsed().as_secs() < 600, format!("lhs {:.12} rhs {:.12} gap {:.1e}", k.lhs, k.rhs, k.gap)))
}

fn second_moment() -> Check {
    let f = delta_qexp(4000);
    let norm = petersson_norm(&f);
    let cld = sym2_l(&f, 1.0, true)?.completed_log_derivative.expect("requested");
    let ts = [20.0, 50.0, 100.0, 200.0];
    let mut gaps = Vec::new();
    let mut last_rel = 0.0;
    for &t in &ts {
        let lhs = second_moment_lhs(&f, t)?;
        let pred = second_moment_prediction(norm, cld, t)?;
        gaps.push((lhs - pred).abs());
        last_rel = rel(lhs, pred);
    }
    let eta = fitted_decay_exponent(&ts, &gaps)?;
    let ok = gaps.windows(2).all(|w| w[1] < w[0]) && eta > 0.0 && last_rel < 0.02;
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
    Ok((ok, format!("gaps [{}], fitted power {eta:.3}, relative gap at 200 {last_rel:.1e}", shown.join(", "))))
}

fn special_functions() -> Check {
    let o: Value = serde_json::from_str(include_str!("../../core/tests/data/special_oracle.json")).expect("oracle");
    let rows = |key: &str| -> Vec<Vec<f64>> { o[key].as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()).collect() };
    let mut fails = Vec::new();
    if rows("gamma").iter().any(|r| !(rel(gamma(r[0]).unwrap_or(f64::NAN), r[1]) < 1e-12)) {
        fails.push("gamma");
    }
    if rows("zeta").iter().any(|r| !(rel(zeta(r[0]).unwrap_or(f64::NAN), r[1]) < 1e-12)) {
        fails.push("zeta");
    }
    if rows("zeta_prime").iter().any(|r| !(rel(zeta_prime(r[0]).unwrap_or(f64::NAN), r[1]) < 1e-12)) {
        fails.push("zeta_prime");
    }
    if rows("bessel_k").iter().any(|r| !(rel(bessel_k(r[0], r[1]).unwrap_or(f64::NAN), r[2]) < 1e-10)) {
        fails.push("bessel_k");
    }
    if rows("eta").iter().any(|r| {
        let want = Complex64::new(r[2], r[3]);
        !((dedekind_eta(Complex64::new(r[0], r[1])) - want).norm() / want.norm() < 1e-10)
    }) {
        fails.push("eta");
    }
    let (a, b) = residue_identity(&delta_qexp(4000))?;
    let ok = fails.is_empty() && rel(a, b) < 1e-5;
    Ok((ok, format!("grid failures {fails:?}, residue identity {a:.12e} vs {b:.12e}")))
}

fn horocycle_properties() -> Check {
    let psi = bump(&GroupSpec::psl2z());
    let h = haar_mean(&psi)?;
    let ys = [0.1, 0.03, 0.01, 0.003, 0.001];
    let inv: Vec<f64> = ys.iter().map(|y| 1.0 / y).collect();
    let coeffs = ys.iter().map(|&y| Ok(fourier_coefficient(&psi, 1, y, 0.0)?.norm())).collect::<Result<Vec<f64>, shearlab::ShearError>>()?;
    let gaps = ys.iter().map(|&y| Ok((horocycle_average(&psi, y, (0.0, 1.0))? - h).abs())).collect::<Result<Vec<f64>, shearlab::ShearError>>()?;
    let (ec, eg) = (fitted_decay_exponent(&inv, &coeffs)?, fitted_decay_exponent(&inv, &gaps)?);
    let thin = bump(&GroupSpec::thin4());
    let omega = thin.spec.omega();
    let avg = horocycle_average(&thin, 1e-3, (0.0, omega))?;
    let ok = ec > 0.0 && eg > 0.0 && avg.abs() < 0.05 * thin.peak;
    Ok((ok, format!("coefficient decay {ec:.3}, horocycle decay {eg:.3}, thin average {avg:.2e} (peak {:.3})", thin.peak)))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("algebra suite", algebra),
        ("counting exactness", counting_exact),
        ("lattice counting law", lattice_law),
        ("thin counting law", thin_law),
        ("non-equidistribution in congruence cosets", non_equidistribution),
        ("lattice equidistribution regression", lattice_equidistribution),
        ("thin equidistribution", thin_equidistribution),
        ("ray versus strip measure", stage_one),
        ("Eisenstein identities", eisenstein_identities),
        ("Kronecker-type limit formula", kronecker),
        ("second moment", second_moment),
        ("special functions", special_functions),
        ("Fourier and horocycle properties", horocycle_properties),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} C{} {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
