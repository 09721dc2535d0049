//! Seeded invariant suites run by the `selftest` subcommand.

use crate::error::CliError;
use crate::output::{num, Outcome, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use shearlab::algebra::*;
use shearlab::eisenstein::EisensteinEvaluator;
use shearlab::group::GroupSpec;
use shearlab::orbit::{brute_force_count_xy, count_orbit, Norm, OrbitQuery};
use shearlab::special::log_4y_eta4;
use std::f64::consts::PI;

struct Suite {
    name: &'static str,
    cases: usize,
    max_error: f64,
    threshold: f64,
}

fn random_element(rng: &mut ChaCha8Rng) -> GroupElement {
    let x = rng.gen_range(-5.0..5.0);
    let y = rng.gen_range(-3.0f64..3.0).exp();
    let th = rng.gen_range(-PI..PI);
    compose(&compose(&GroupElement::n(x), &GroupElement::a(y)), &GroupElement::k(th))
}

fn random_word(rng: &mut ChaCha8Rng, omega: i64) -> IntGroupElement {
    let mut g = IntGroupElement::identity();
    for _ in 0..rng.gen_range(1..5) {
        g = g.mul(&IntGroupElement::t_power(omega * rng.gen_range(-3..4))).mul(&IntGroupElement::s());
    }
    g
}

fn scale(g: &GroupElement) -> f64 {
    g.a.abs() + g.b.abs() + g.c.abs() + g.d.abs()
}

fn algebra(rng: &mut ChaCha8Rng) -> [Suite; 3] {
    let n = 10_000;
    let (mut iw, mut qp, mut ra) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let g = random_element(rng);
        let h = random_element(rng);
        iw = iw.max(iwasawa_decompose(&g).recompose().dist_mod_sign(&g) / (1.0 + scale(&g)));
        let v = FormVector::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let w = spin_cover(&g, &v);
        let sv = 1.0 + v.p.abs().max(v.q.abs()).max(v.r.abs()) * scale(&g).powi(2);
        qp = qp.max((w.q_value() - v.q_value()).abs() / (sv * sv));
        let a = spin_cover(&h, &w);
        let b = spin_cover(&compose(&g, &h), &v);
        let s2 = (scale(&g) * scale(&h)).powi(2);
        ra = ra.max([(a.p - b.p).abs(), (a.q - b.q).abs(), (a.r - b.r).abs()].into_iter().fold(0.0, f64::max) / (s2 * sv));
    }
    [
        Suite { name: "iwasawa_round_trip", cases: n, max_error: iw, threshold: 1e-12 },
        Suite { name: "spin_cover_preserves_q", cases: n, max_error: qp, threshold: 1e-9 },
        Suite { name: "spin_cover_right_action", cases: n, max_error: ra, threshold: 1e-9 },
    ]
}

fn counting() -> Result<Suite, CliError> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for spec in [GroupSpec::psl2z(), GroupSpec::thin4()] {
        let ts = vec![4.0, 8.0, 12.0];
        let r = count_orbit(&OrbitQuery::new(spec.clone(), IntFormVector::new(0, 1, 0), ts.clone()))?;
        for (i, t) in ts.iter().enumerate() {
            let b = brute_force_count_xy(&spec, Norm::Sup, *t)?;
            worst = worst.max((r.counts[i] as f64 - b as f64).abs());
            cases += 1;
        }
    }
    Ok(Suite { name: "orbit_count_vs_brute_force", cases, max_error: worst, threshold: 0.5 })
}

fn eta_invariance(rng: &mut ChaCha8Rng) -> Result<Suite, CliError> {
    let n = 500;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let z = UTBPoint::up(rng.gen_range(-0.5..0.5), rng.gen_range(0.0f64..1.5).exp());
        let g = random_word(rng, 1);
        let gz = mobius_act(&GroupElement::from_int(&g), &z)?;
        worst = worst.max((log_4y_eta4(&z) - log_4y_eta4(&gz)).abs());
    }
    Ok(Suite { name: "y_eta4_invariance", cases: n, max_error: worst, threshold: 1e-9 })
}

fn eisenstein_automorphy(rng: &mut ChaCha8Rng) -> Result<Suite, CliError> {
    let n = 100;
    let e = EisensteinEvaluator::fourier();
    let mut worst = 0.0f64;
    for _ in 0..n {
        let z = UTBPoint::up(rng.gen_range(-0.5..0.5), rng.gen_range(0.9f64..3.0));
        let s = rng.gen_range(1.2..4.0);
        let g = random_word(rng, 1);
        let gz = mobius_act(&GroupElement::from_int(&g), &z)?;
        if gz.y < 1e-4 {
            continue;
        }
        let a = e.eval(&z, s)?.value;
        let b = e.eval(&gz, s)?.value;
        worst = worst.max((a / b - 1.0).abs());
    }
    Ok(Suite { name: "eisenstein_automorphy", cases: n, max_error: worst, threshold: 1e-9 })
}

/// Runs every suite; fails when any suite exceeds its threshold.
pub fn run(seed: u64) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suites: Vec<Suite> = algebra(&mut rng).into_iter().collect();
    suites.push(counting()?);
    suites.push(eta_invariance(&mut rng)?);
    suites.push(eisenstein_automorphy(&mut rng)?);
    let mut table = Table::new(&["suite", "cases", "max_error [scaled]", "threshold", "passed"]);
    let mut failed = Vec::new();
    for s in &suites {
        let ok = s.max_error <= s.threshold;
        if !ok {
            failed.push(s.name);
        }
        table.push(vec![s.name.into(), s.cases.to_string(), num(s.max_error), num(s.threshold), ok.to_string()]);
    }
    let mut outcome = Outcome::ok(table, json!({ "suites": suites.len(), "seed": seed, "failed": failed }));
    if !failed.is_empty() {
        outcome.failure = Some(format!("self-test suites failed: {}", failed.join(", ")));
    }
    Ok(outcome)
}
