use proptest::prelude::*;
use shearlab::algebra::{IntFormVector, IntGroupElement};
use shearlab::group::GroupSpec;
use shearlab::orbit::*;

fn xy() -> IntFormVector {
    IntFormVector::new(0, 1, 0)
}

fn groups() -> [GroupSpec; 2] {
    [GroupSpec::psl2z(), GroupSpec::thin4()]
}

#[test]
fn counts_match_brute_force_enumeration() {
    for spec in groups() {
        for norm in [Norm::Sup, Norm::Euclidean] {
            let mut q = OrbitQuery::new(spec.clone(), xy(), vec![4.0, 8.0, 12.0]);
            q.norm = norm;
            let r = count_orbit(&q).unwrap();
            assert!(r.saturated.iter().all(|s| *s));
            for (i, &t) in [4.0, 8.0, 12.0].iter().enumerate() {
                let want = brute_force_count_xy(&spec, norm, t).unwrap();
                assert_eq!(r.counts[i], want, "{} {:?} T={t}", spec.name, norm);
            }
        }
    }
}

#[test]
fn counts_are_monotone_in_t() {
    for spec in groups() {
        let ts: Vec<f64> = (1..=20).map(|i| 5.0 * i as f64).collect();
        let r = count_orbit(&OrbitQuery::new(spec, xy(), ts)).unwrap();
        assert!(r.counts.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.counts.last().unwrap() > r.counts.first().unwrap());
    }
}

#[test]
fn coset_breakdown_partitions_the_count() {
    for spec in groups() {
        for q in [2, 3, 5] {
            let mut query = OrbitQuery::new(spec.clone(), xy(), vec![20.0, 40.0, 80.0]);
            query.q = Some(q);
            let r = count_orbit(&query).unwrap();
            let b = r.breakdown.as_ref().unwrap();
            assert_eq!(b.labels.len(), shearlab::group::image_mod_q(&spec, q).len());
            for (i, c) in b.counts.iter().enumerate() {
                assert_eq!(c.iter().sum::<u64>(), r.counts[i], "{} q={q}", spec.name);
            }
            let plain = count_orbit(&OrbitQuery::new(spec.clone(), xy(), vec![20.0, 40.0, 80.0])).unwrap();
            assert_eq!(plain.counts, r.counts);
        }
    }
}

#[test]
fn coset_filter_selects_one_label() {
    let mut query = OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![30.0]);
    query.q = Some(3);
    let full = count_orbit(&query).unwrap();
    let b = full.breakdown.unwrap();
    for (j, lab) in b.labels.iter().enumerate() {
        let mut f = OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![30.0]);
        f.q = Some(3);
        f.coset_filter = Some(*lab);
        assert_eq!(count_orbit(&f).unwrap().counts[0], b.counts[0][j]);
    }
}

#[test]
fn orbit_is_invariant_under_change_of_base_point() {
    let words: [&[i64]; 3] = [&[1, -2], &[3], &[-1, 2, 1]];
    for spec in groups() {
        let omega = spec.omega() as i64;
        for w in words {
            let mut g = IntGroupElement::identity();
            for &k in w {
                g = g.mul(&IntGroupElement::t_power(k * omega)).mul(&IntGroupElement::s());
            }
            assert!(spec.contains(&g).unwrap());
            let x1 = xy().act(&g).unwrap();
            let ts = vec![10.0, 25.0, 60.0];
            let a = count_orbit(&OrbitQuery::new(spec.clone(), xy(), ts.clone())).unwrap();
            let b = count_orbit(&OrbitQuery::new(spec.clone(), x1, ts)).unwrap();
            assert_eq!(a.counts, b.counts, "{} word {w:?}", spec.name);
        }
    }
}

#[test]
fn budget_exhaustion_is_reported() {
    let mut q = OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![200.0]);
    q.max_nodes = 100;
    let r = count_orbit(&q).unwrap();
    assert!(r.budget_exhausted);
    assert!(r.saturated.iter().all(|s| !s));
}

#[test]
fn invalid_queries_are_rejected() {
    assert!(count_orbit(&OrbitQuery::new(GroupSpec::psl2z(), IntFormVector::new(0, 0, 0), vec![5.0])).is_err());
    assert!(count_orbit(&OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![5.0, 4.0])).is_err());
    assert!(count_orbit(&OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![])).is_err());
    let mut q = OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![5.0]);
    q.q = Some(0);
    assert!(count_orbit(&q).is_err());
}

#[test]
fn counts_are_reproducible() {
    let q = OrbitQuery::new(GroupSpec::thin4(), xy(), vec![50.0, 100.0, 200.0]);
    let a = count_orbit(&q).unwrap();
    let b = count_orbit(&q).unwrap();
    assert_eq!(a.counts, b.counts);
    assert_eq!(a.nodes, b.nodes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_t_log_t_plus_t(c1 in 0.1f64..5.0, c2 in -2.0f64..5.0) {
        let ts = [20.0, 40.0, 80.0, 160.0, 320.0];
        let ns: Vec<f64> = ts.iter().map(|t: &f64| c1 * t * t.ln() + c2 * t).collect();
        prop_assume!(ns.iter().all(|n| *n > 0.0));
        let f = fit_counting_law(&ts, &ns, FitModel::TLogTPlusT).unwrap();
        prop_assert!((f.c1 - c1).abs() < 1e-8 * (1.0 + c1.abs()));
        prop_assert!((f.c2 - c2).abs() < 1e-7 * (1.0 + c2.abs()));
        prop_assert!(f.residual < 1e-10);
    }

    #[test]
    fn fit_recovers_linear_plus_power(c1 in 0.5f64..5.0, c2 in 1.0f64..10.0, delta in 0.3f64..0.9) {
        let ts: Vec<f64> = (0..8).map(|i| 10.0 * 2f64.powi(i)).collect();
        let ns: Vec<f64> = ts.iter().map(|t| c1 * t + c2 * t.powf(delta)).collect();
        let f = fit_counting_law(&ts, &ns, FitModel::LinearPlusPower).unwrap();
        prop_assert!((f.delta.unwrap() - delta).abs() < 1e-3, "{:?}", f);
        prop_assert!((f.c1 - c1).abs() < 1e-2 * c1);
    }

    #[test]
    fn fit_recovers_pure_power(c in 0.5f64..5.0, delta in 0.5f64..2.5) {
        let ts: Vec<f64> = (0..6).map(|i| 10.0 * 2f64.powi(i)).collect();
        let ns: Vec<f64> = ts.iter().map(|t| c * t.powf(delta)).collect();
        let f = fit_counting_law(&ts, &ns, FitModel::PurePower).unwrap();
        prop_assert!((f.delta.unwrap() - delta).abs() < 1e-6);
        prop_assert!((f.c1 / c - 1.0).abs() < 1e-5);
    }
}

#[test]
fn lattice_doubling_ratio_exceeds_linear_growth() {
    let r = count_orbit(&OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![100.0, 200.0, 400.0])).unwrap();
    let ratio = r.counts[2] as f64 / r.counts[1] as f64;
    assert!(ratio - 2.0 > 0.15, "{ratio}");
}

#[test]
fn per_coset_counts_are_monotone() {
    let mut q = OrbitQuery::new(GroupSpec::thin4(), xy(), vec![20.0, 40.0, 80.0, 160.0]);
    q.q = Some(3);
    let b = count_orbit(&q).unwrap().breakdown.unwrap();
    for j in 0..b.labels.len() {
        assert!(b.counts.windows(2).all(|w| w[0][j] <= w[1][j]));
    }
}

#[test]
fn disparity_of_uniform_and_single_coset() {
    assert_eq!(disparity_of(&[4, 4, 4, 4]), 1.0);
    let mut q = OrbitQuery::new(GroupSpec::psl2z(), xy(), vec![30.0]);
    q.q = Some(1);
    assert_eq!(coset_disparity(&count_orbit(&q).unwrap()).unwrap(), 1.0);
}
