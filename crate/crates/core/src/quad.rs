//! Quadrature: adaptive Gauss–Kronrod (7/15), Gauss–Legendre rules, periodic trapezoid,
//! and a deterministic pairwise summation used by the parallel panel integrators.

use rayon::prelude::*;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Sums a slice by recursive halving, which keeps the result independent of thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let m = v.len() / 2;
    pairwise_sum(&v[..m]) + pairwise_sum(&v[m..])
}

/// One Gauss–Kronrod 15-point panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Adaptive bisection on [a, b] with GK15 panels until the summed error estimate is below
/// max(abs_tol, rel_tol·|value|) or `max_panels` is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_panels: usize) -> QuadResult {
    integrate_from(f, &[a, b], abs_tol, rel_tol, max_panels)
}

/// Same as [`integrate`] but starting from a user partition of the interval.
pub fn integrate_from<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], abs_tol: f64, rel_tol: f64, max_panels: usize) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in breaks.windows(2) {
        let (val, err) = gk15(f, w[0], w[1]);
        evals += 15;
        heap.push(Panel { a: w[0], b: w[1], val, err });
    }
    loop {
        let total: f64 = heap.iter().map(|p| p.val).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol || heap.len() >= max_panels {
            let mut vals: Vec<(f64, f64)> = heap.iter().map(|p| (p.a, p.val)).collect();
            vals.sort_by(|x, y| x.0.total_cmp(&y.0));
            let v: Vec<f64> = vals.into_iter().map(|x| x.1).collect();
            return QuadResult { value: pairwise_sum(&v), error: err, evaluations: evals, converged: err <= tol };
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(Panel { err: 0.0, ..p });
            continue;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        evals += 30;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
    }
}

/// Integrates over consecutive panels in parallel. Each panel is refined adaptively to
/// a share of the tolerance proportional to its length; the panel sums are combined pairwise.
pub fn integrate_panels_par<F: Fn(f64) -> f64 + Sync>(f: &F, breaks: &[f64], abs_tol: f64, max_panels_each: usize) -> QuadResult {
    let len = breaks[breaks.len() - 1] - breaks[0];
    let parts: Vec<QuadResult> = breaks
        .par_windows(2)
        .map(|w| {
            let share = abs_tol * (w[1] - w[0]) / len;
            integrate(f, w[0], w[1], share, 0.0, max_panels_each)
        })
        .collect();
    let vals: Vec<f64> = parts.iter().map(|r| r.value).collect();
    QuadResult {
        value: pairwise_sum(&vals),
        error: parts.iter().map(|r| r.error).sum(),
        evaluations: parts.iter().map(|r| r.evaluations).sum(),
        converged: parts.iter().all(|r| r.converged),
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre on [a, b] with `panels` equal panels of `n` nodes each.
pub fn gl_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = (b - a) / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    for k in 0..panels {
        let c = a + (k as f64 + 0.5) * h;
        let mut s = 0.0;
        for (xi, wi) in rule.0.iter().zip(rule.1.iter()) {
            s += wi * f(c + 0.5 * h * xi);
        }
        parts.push(0.5 * h * s);
    }
    pairwise_sum(&parts)
}

/// Trapezoid rule for a periodic integrand: (1/(b−a)) ∫_a^b f, with n equispaced nodes.
pub fn periodic_mean<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let v: Vec<f64> = (0..n).map(|j| f(a + (j as f64 + 0.5) * h)).collect();
    pairwise_sum(&v) / n as f64
}

/// Parallel version of [`periodic_mean`].
pub fn periodic_mean_par<F: Fn(f64) -> f64 + Sync>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let v: Vec<f64> = (0..n).into_par_iter().map(|j| f(a + (j as f64 + 0.5) * h)).collect();
    pairwise_sum(&v) / n as f64
}
