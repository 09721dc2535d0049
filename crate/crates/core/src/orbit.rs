//! Orbit counting on the quadric Q = q^2 - 4pr, the fitted counting laws, and
//! congruence-coset breakdowns of orbit counts.

use crate::algebra::{IntFormVector, IntGroupElement};
use crate::error::{Result, ShearError};
use crate::group::{coset_label, image_mod_q, CosetLabel, GroupSpec};
use dashmap::DashSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Sup,
    Euclidean,
}

impl Norm {
    pub fn of(&self, v: &IntFormVector) -> f64 {
        match self {
            Norm::Sup => v.sup_norm(),
            Norm::Euclidean => v.euclidean_norm(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrbitQuery {
    pub spec: GroupSpec,
    pub x0: IntFormVector,
    pub norm: Norm,
    pub t_list: Vec<f64>,
    pub q: Option<i64>,
    pub coset_filter: Option<CosetLabel>,
    /// Nodes whose norm is at least `slack · max(max T, |x0|)` are not expanded.
    pub slack: f64,
    pub max_nodes: usize,
}

impl OrbitQuery {
    pub fn new(spec: GroupSpec, x0: IntFormVector, t_list: Vec<f64>) -> Self {
        OrbitQuery { spec, x0, norm: Norm::Sup, t_list, q: None, coset_filter: None, slack: 2.0, max_nodes: 50_000_000 }
    }

    fn validate(&self) -> Result<()> {
        if self.x0 == IntFormVector::new(0, 0, 0) {
            return Err(ShearError::InvalidArgument("x0 must be nonzero".into()));
        }
        if self.t_list.is_empty() || self.t_list.windows(2).any(|w| w[0] >= w[1]) || self.t_list[0] <= 0.0 {
            return Err(ShearError::InvalidArgument("T list must be positive and strictly increasing".into()));
        }
        if let Some(q) = self.q {
            if q < 1 {
                return Err(ShearError::InvalidArgument("q must be at least 1".into()));
            }
        }
        if !(self.slack >= 1.0) {
            return Err(ShearError::InvalidArgument("slack must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-label counts at each radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosetBreakdown {
    pub q: i64,
    /// Every label in the image of the group mod q, sorted.
    pub labels: Vec<CosetLabel>,
    /// counts[t_index][label_index]
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub t_list: Vec<f64>,
    pub counts: Vec<u64>,
    pub saturated: Vec<bool>,
    pub wall_time_s: f64,
    pub breakdown: Option<CosetBreakdown>,
    pub nodes: usize,
    pub depth: usize,
    pub budget_exhausted: bool,
}

/// Counts distinct orbit points x0·γ with norm < T for each T of the query.
///
/// The search walks the orbit breadth-first, applying generators on the right, and
/// deduplicates exactly on (vector, label). A node is expanded only while its norm stays
/// below `slack · max(max T, |x0|)`; exactness of this pruning is checked against brute force in tests.
pub fn count_orbit(query: &OrbitQuery) -> Result<CountResult> {
    query.validate()?;
    let start = Instant::now();
    let q = query.q.unwrap_or(1);
    let gens = query.spec.symmetric_generators();
    let gen_labels: Vec<CosetLabel> = gens.iter().map(|g| coset_label(g, q)).collect();
    let t_max = *query.t_list.last().unwrap();
    let norm = query.norm;
    let cut = query.slack * t_max.max(norm.of(&query.x0));

    let id_label = coset_label(&IntGroupElement::identity(), q);
    let seen: DashSet<(IntFormVector, CosetLabel)> = DashSet::new();
    seen.insert((query.x0, id_label));
    let mut inball: Vec<(f64, CosetLabel, IntFormVector)> = Vec::new();
    let n0 = norm.of(&query.x0);
    if n0 < t_max {
        inball.push((n0, id_label, query.x0));
    }
    let mut frontier = if n0 < cut { vec![(query.x0, id_label)] } else { vec![] };
    let mut nodes = 1usize;
    let mut depth = 0usize;
    let mut exhausted = false;
    while !frontier.is_empty() {
        depth += 1;
        let next: Vec<(IntFormVector, CosetLabel, f64)> = frontier
            .par_iter()
            .flat_map_iter(|(v, lab)| {
                let mut out = Vec::with_capacity(gens.len());
                for (g, gl) in gens.iter().zip(gen_labels.iter()) {
                    if let Some(w) = v.act(g) {
                        let wl = lab.mul(gl);
                        if seen.insert((w, wl)) {
                            out.push((w, wl, norm.of(&w)));
                        }
                    }
                }
                out
            })
            .collect();
        nodes += next.len();
        for (w, wl, n) in &next {
            if *n < t_max {
                inball.push((*n, *wl, *w));
            }
        }
        if nodes > query.max_nodes {
            exhausted = true;
            break;
        }
        frontier = next.into_iter().filter(|t| t.2 < cut).map(|t| (t.0, t.1)).collect();
    }

    if let Some(f) = &query.coset_filter {
        inball.retain(|t| t.1 == *f);
    }
    inball.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut counts = Vec::new();
    let mut distinct: Vec<f64> = {
        let mut byvec: HashMap<IntFormVector, f64> = HashMap::new();
        for (n, _, v) in &inball {
            byvec.insert(*v, *n);
        }
        byvec.into_values().collect()
    };
    distinct.sort_by(|a, b| a.total_cmp(b));
    for &t in &query.t_list {
        counts.push(distinct.partition_point(|n| *n < t) as u64);
    }
    let breakdown = query.q.map(|q| {
        let labels = image_mod_q(&query.spec, q);
        let index: HashMap<CosetLabel, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let counts = query
            .t_list
            .iter()
            .map(|&t| {
                let mut c = vec![0u64; labels.len()];
                for (n, l, _) in &inball {
                    if *n < t {
                        c[index[l]] += 1;
                    }
                }
                c
            })
            .collect();
        CosetBreakdown { q, labels, counts }
    });
    Ok(CountResult {
        t_list: query.t_list.clone(),
        counts,
        saturated: vec![!exhausted; query.t_list.len()],
        wall_time_s: start.elapsed().as_secs_f64(),
        breakdown,
        nodes,
        depth,
        budget_exhausted: exhausted,
    })
}

/// Recovers the unique γ in PSL(2,Z) with (0,1,0)·γ = v, when it exists.
pub fn preimage_of_xy(v: &IntFormVector) -> Option<IntGroupElement> {
    if v.q_value() != 1 {
        return None;
    }
    // (0,1,0)·γ = (ac, ad + bc, bd) with ad - bc = 1
    let ad = (v.q + 1) / 2;
    let bc = (v.q - 1) / 2;
    let g = gcd(v.p, ad);
    let (a, b, c, d);
    if g == 0 {
        a = 0;
        c = 1;
        b = -1;
        d = -v.r;
    } else {
        a = g;
        c = v.p / g;
        d = ad / g;
        b = if d != 0 { v.r / d } else if c != 0 { bc / c } else { return None };
    }
    let m = IntGroupElement::new(a, b, c, d).ok()?;
    (IntFormVector::new(0, 1, 0).act(&m)? == *v).then_some(m)
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Independent oracle for x0 = (0,1,0): scans the integer box for vectors with Q = 1 and
/// norm < T, keeping those whose recovered γ lies in the group.
pub fn brute_force_count_xy(spec: &GroupSpec, norm: Norm, t: f64) -> Result<u64> {
    let m = t.ceil() as i64;
    let mut count = 0;
    for q in -m..=m {
        if q % 2 == 0 {
            continue;
        }
        for p in -m..=m {
            for r in -m..=m {
                let v = IntFormVector::new(p, q, r);
                if v.q_value() != 1 || norm.of(&v) >= t {
                    continue;
                }
                if let Some(g) = preimage_of_xy(&v) {
                    if spec.contains(&g)? {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// C1 T log T + C2 T
    TLogTPlusT,
    /// C1 T + C2 T^delta
    LinearPlusPower,
    /// C T^delta
    PurePower,
    /// C T
    Linear,
    /// C T log T
    TLogT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub c1: f64,
    pub c2: f64,
    pub delta: Option<f64>,
    /// Root of the summed squared relative residuals (N - fit)/N.
    pub residual: f64,
    /// Largest relative residual over the points with T >= max(T)/2.
    pub top_octave_rel_residual: f64,
}

impl FitResult {
    pub fn predict(&self, t: f64) -> f64 {
        match self.model {
            FitModel::TLogTPlusT => self.c1 * t * t.ln() + self.c2 * t,
            FitModel::LinearPlusPower => self.c1 * t + self.c2 * t.powf(self.delta.unwrap()),
            FitModel::PurePower => self.c1 * t.powf(self.delta.unwrap()),
            FitModel::Linear => self.c1 * t,
            FitModel::TLogT => self.c1 * t * t.ln(),
        }
    }
}

/// Weighted linear least squares with at most two basis functions; weights 1/y.
fn lsq(basis: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let k = basis.len();
    let w: Vec<f64> = y.iter().map(|v| 1.0 / v.abs().max(1e-300)).collect();
    let mut a = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for i in 0..y.len() {
        for r in 0..k {
            rhs[r] += basis[r][i] * w[i] * w[i] * y[i];
            for c in 0..k {
                a[r][c] += basis[r][i] * basis[c][i] * w[i] * w[i];
            }
        }
    }
    let coef = if k == 1 {
        vec![rhs[0] / a[0][0]]
    } else {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        vec![(rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det, (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det]
    };
    let res: f64 = (0..y.len())
        .map(|i| {
            let f: f64 = (0..k).map(|r| coef[r] * basis[r][i]).sum();
            ((y[i] - f) * w[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    (coef, res)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let n = 200;
    let mut best = lo;
    let mut bv = f64::INFINITY;
    for i in 0..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if v < bv {
            bv = v;
            best = x;
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fits one of the counting laws to (T, N) data by relative least squares.
pub fn fit_counting_law(ts: &[f64], ns: &[f64], model: FitModel) -> Result<FitResult> {
    if ts.len() < 4 || ts.len() != ns.len() {
        return Err(ShearError::InsufficientData { need: 4, got: ts.len().min(ns.len()) });
    }
    let tlog: Vec<f64> = ts.iter().map(|t| t * t.ln()).collect();
    let lin: Vec<f64> = ts.to_vec();
    let (c1, c2, delta, residual) = match model {
        FitModel::TLogTPlusT => {
            let (c, r) = lsq(&[tlog, lin], ns);
            (c[0], c[1], None, r)
        }
        FitModel::Linear => {
            let (c, r) = lsq(&[lin], ns);
            (c[0], 0.0, None, r)
        }
        FitModel::TLogT => {
            let (c, r) = lsq(&[tlog], ns);
            (c[0], 0.0, None, r)
        }
        FitModel::LinearPlusPower => {
            let obj = |d: f64| lsq(&[lin.clone(), ts.iter().map(|t| t.powf(d)).collect()], ns).1;
            let d = golden_min(&obj, 0.01, 0.99);
            let (c, r) = lsq(&[lin.clone(), ts.iter().map(|t| t.powf(d)).collect()], ns);
            (c[0], c[1], Some(d), r)
        }
        FitModel::PurePower => {
            let obj = |d: f64| lsq(&[ts.iter().map(|t| t.powf(d)).collect()], ns).1;
            let d = golden_min(&obj, 0.1, 3.0);
            let (c, r) = lsq(&[ts.iter().map(|t| t.powf(d)).collect()], ns);
            (c[0], 0.0, Some(d), r)
        }
    };
    let mut fit = FitResult { model, c1, c2, delta, residual, top_octave_rel_residual: 0.0 };
    let tmax = ts.iter().cloned().fold(f64::MIN, f64::max);
    fit.top_octave_rel_residual = ts
        .iter()
        .zip(ns)
        .filter(|(t, _)| **t >= 0.5 * tmax)
        .map(|(t, n)| ((n - fit.predict(*t)) / n).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

/// Index of the largest saturated radius.
fn top_saturated(r: &CountResult) -> Option<usize> {
    r.saturated.iter().rposition(|s| *s)
}

/// Max over labels of the coset count divided by the mean over all labels in the image,
/// at the largest saturated T.
pub fn coset_disparity(r: &CountResult) -> Result<f64> {
    let b = r.breakdown.as_ref().ok_or_else(|| ShearError::InvalidArgument("no coset breakdown".into()))?;
    let i = top_saturated(r).ok_or_else(|| ShearError::InvalidArgument("no saturated radius".into()))?;
    let c = &b.counts[i];
    let mean = c.iter().sum::<u64>() as f64 / c.len() as f64;
    Ok(*c.iter().max().unwrap() as f64 / mean)
}

/// Count of the identity coset (which holds the x0·Γ_{∞,q} translates) over the coset mean.
pub fn identity_coset_ratio(r: &CountResult) -> Result<f64> {
    let b = r.breakdown.as_ref().ok_or_else(|| ShearError::InvalidArgument("no coset breakdown".into()))?;
    let i = top_saturated(r).ok_or_else(|| ShearError::InvalidArgument("no saturated radius".into()))?;
    let id = coset_label(&IntGroupElement::identity(), b.q);
    let j = b.labels.iter().position(|l| *l == id).unwrap();
    let c = &b.counts[i];
    let mean = c.iter().sum::<u64>() as f64 / c.len() as f64;
    Ok(c[j] as f64 / mean)
}

/// Disparity of a bare per-label count vector.
pub fn disparity_of(counts: &[u64]) -> f64 {
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    *counts.iter().max().unwrap() as f64 / mean
}
