//! Weight-0 Eisenstein series at the cusp ∞: the Fourier expansion for PSL(2,Z), coset
//! sums for PSL(2,Z) and for thin groups generated by a translation and S, the regularized
//! value Ẽ(z,1), and the pairings ⟨Ψ, Ẽ(·,1)⟩ and ⟨Ψ, E(·,1)⟩.

use crate::algebra::UTBPoint;
use crate::error::{Result, ShearError};
use crate::group::{reduce_to_fundamental_domain, GroupSpec, Reducer};
use crate::quad::{gauss_legendre, integrate, pairwise_sum};
use crate::special::{bessel_k, divisor_sigma, gamma, log_4y_eta4, zeta, EULER_GAMMA, ZETA_LOG_DERIV_2};
use crate::testfn::{Support, TestFunction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Fourier expansion with K-Bessel terms (PSL(2,Z) only).
    Fourier,
    /// Sum of Im(γz)^s over Γ_∞\Γ, truncated at a minimum height.
    CosetSum,
}

/// Frozen configuration for evaluating E(z, s).
#[derive(Debug, Clone, PartialEq)]
pub struct EisensteinEvaluator {
    pub spec: GroupSpec,
    pub cusp: usize,
    pub route: Route,
    /// Number of Fourier modes; `None` picks enough for the first omitted term to be < 1e−16.
    pub max_mode: Option<usize>,
    /// Coset sums keep terms with Im(γz) >= min_height.
    pub min_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EisensteinValue {
    pub value: f64,
    pub est_error: f64,
    pub route: Route,
    pub terms: usize,
    /// Estimated contribution of the omitted cosets (coset route).
    pub tail: f64,
}

impl EisensteinEvaluator {
    pub fn fourier() -> Self {
        EisensteinEvaluator { spec: GroupSpec::psl2z(), cusp: 0, route: Route::Fourier, max_mode: None, min_height: 0.0 }
    }

    /// Coset-sum evaluator; the default cutoff is 4^−16 for thin groups and 1e−6 for PSL(2,Z).
    pub fn coset(spec: &GroupSpec) -> Self {
        let h = if spec.lattice { 1e-6 } else { 4f64.powi(-16) };
        EisensteinEvaluator { spec: spec.clone(), cusp: 0, route: Route::CosetSum, max_mode: None, min_height: h }
    }

    pub fn with_min_height(mut self, h: f64) -> Self {
        self.min_height = h;
        self
    }

    pub fn eval(&self, z: &UTBPoint, s: f64) -> Result<EisensteinValue> {
        eisenstein_value(self, z, s)
    }
}

/// Completed zeta ξ(s) = π^{−s/2} Γ(s/2) ζ(s).
pub fn completed_zeta(s: f64) -> Result<f64> {
    Ok(PI.powf(-s / 2.0) * gamma(s / 2.0)? * zeta(s)?)
}

/// Scattering coefficient φ(s) = ξ(2s−1)/ξ(2s).
pub fn scattering_phi(s: f64) -> Result<f64> {
    Ok(completed_zeta(2.0 * s - 1.0)? / completed_zeta(2.0 * s)?)
}

fn omega_of(spec: &GroupSpec) -> Result<i64> {
    match spec.reducer() {
        Some(Reducer::TranslationInversion { omega }) => Ok(omega),
        None => Err(ShearError::InvalidGroup(format!("no coset enumeration for group '{}'", spec.name))),
    }
}

/// E(z, s) for the configured route.
pub fn eisenstein_value(e: &EisensteinEvaluator, z: &UTBPoint, s: f64) -> Result<EisensteinValue> {
    if e.cusp != 0 {
        return Err(ShearError::InvalidArgument("Eisenstein series are implemented at the cusp at infinity only".into()));
    }
    match e.route {
        Route::Fourier => {
            if !e.spec.lattice || omega_of(&e.spec)? != 1 {
                return Err(ShearError::NonConvergent("the Fourier route needs PSL(2,Z)".into()));
            }
            if s <= 0.5 || (s - 1.0).abs() < 1e-12 {
                return Err(ShearError::NonConvergent(format!("Fourier route needs s > 1/2, s != 1; got {s}")));
            }
            fourier_route(z, s, e.max_mode)
        }
        Route::CosetSum => {
            if e.spec.lattice {
                if omega_of(&e.spec)? != 1 {
                    return Err(ShearError::InvalidGroup("lattice coset sums are implemented for PSL(2,Z)".into()));
                }
                if s <= 1.0 {
                    return Err(ShearError::NonConvergent(format!("lattice coset sum needs s > 1; got {s}")));
                }
                lattice_coset_route(z, s, e.min_height)
            } else {
                let dh = thin_delta_hat(&e.spec)?;
                if s < dh + 0.1 {
                    return Err(ShearError::NonConvergent(format!("thin coset sum needs s > δ̂ + 0.1 = {:.3}; got {s}", dh + 0.1)));
                }
                thin_coset_route(&e.spec, z, s, e.min_height)
            }
        }
    }
}

fn fourier_route(z: &UTBPoint, s: f64, max_mode: Option<usize>) -> Result<EisensteinValue> {
    let (w, _) = reduce_to_fundamental_domain(z)?;
    let (x, y) = (w.x, w.y);
    let nu = s - 0.5;
    let m = max_mode.unwrap_or(((40.0 + 2.0 * s.abs()) / (2.0 * PI * y)).ceil() as usize + 2);
    let pref = 4.0 * y.sqrt() / completed_zeta(2.0 * s)?;
    let mut terms = Vec::with_capacity(m);
    for n in 1..=m {
        let nf = n as f64;
        let k = bessel_k(nu, 2.0 * PI * nf * y)?;
        terms.push(nf.powf(nu) * divisor_sigma(1.0 - 2.0 * s, n as u64) * k * (2.0 * PI * nf * x).cos());
    }
    let last = terms.last().copied().unwrap_or(0.0).abs() * pref;
    let value = y.powf(s) + scattering_phi(s)? * y.powf(1.0 - s) + pref * pairwise_sum(&terms);
    Ok(EisensteinValue { value, est_error: last + 1e-15 * value.abs(), route: Route::Fourier, terms: m, tail: 0.0 })
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Σ Im(γz)^s over coprime (c, d) up to sign with Im(γz) >= h, plus the area-law tail
/// (3/π) h^{s−1}/(s−1). The error estimate compares cutoffs h and 4h.
fn lattice_coset_route(z: &UTBPoint, s: f64, h: f64) -> Result<EisensteinValue> {
    let (w, _) = reduce_to_fundamental_domain(z)?;
    let partial = |h: f64| -> (f64, usize) {
        let r2 = w.y / h;
        let cmax = (r2.sqrt() / w.y).floor() as i64;
        let rows: Vec<(f64, usize)> = (1..=cmax)
            .into_par_iter()
            .map(|c| {
                let cf = c as f64;
                let rem = r2 - cf * cf * w.y * w.y;
                if rem < 0.0 {
                    return (0.0, 0);
                }
                let half = rem.sqrt();
                let lo = (-cf * w.x - half).ceil() as i64;
                let hi = (-cf * w.x + half).floor() as i64;
                let mut v = Vec::new();
                for d in lo..=hi {
                    if gcd(c, d) == 1 {
                        let re = cf * w.x + d as f64;
                        let m2 = re * re + cf * cf * w.y * w.y;
                        v.push((w.y / m2).powf(s));
                    }
                }
                (pairwise_sum(&v), v.len())
            })
            .collect();
        let sums: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let n: usize = rows.iter().map(|r| r.1).sum();
        (w.y.powf(s) + pairwise_sum(&sums) + 3.0 / PI * h.powf(s - 1.0) / (s - 1.0), n + 1)
    };
    let (v1, n1) = partial(h);
    let (v2, _) = partial(4.0 * h);
    Ok(EisensteinValue { value: v1, est_error: (v1 - v2).abs(), route: Route::CosetSum, terms: n1, tail: 3.0 / PI * h.powf(s - 1.0) / (s - 1.0) })
}

const BANDS: usize = 64;

/// Per-band sums of Im(γz)^s and counts, band j holding heights in [4^{−j−1}, 4^{−j}).
#[derive(Debug, Clone)]
struct Bands {
    sum: Vec<f64>,
    count: Vec<u64>,
}

impl Bands {
    fn new() -> Self {
        Bands { sum: vec![0.0; BANDS], count: vec![0; BANDS] }
    }
    fn add(&mut self, im: f64, s: f64) {
        let j = if im >= 1.0 { 0 } else { ((-im.log(4.0)).floor() as usize).min(BANDS - 1) };
        self.sum[j] += im.powf(s);
        self.count[j] += 1;
    }
    fn merge(&mut self, o: &Bands) {
        for j in 0..BANDS {
            self.sum[j] += o.sum[j];
            self.count[j] += o.count[j];
        }
    }
}

/// Enumerates Γ_∞\Γ for Γ = ⟨z ↦ z+ω, S⟩ with ω >= 3 as the words S T^{ωk_1} S T^{ωk_2} ⋯ S
/// acting on z, keeping Im >= h. Starting from a reduced z every child is at most a
/// quarter of its parent's height, so the pruning is exact.
fn thin_bands(omega: i64, z: &UTBPoint, s: f64, h: f64) -> Result<Bands> {
    let om = omega as f64;
    let children = |wx: f64, wy: f64, skip_zero: bool| -> Vec<(f64, f64)> {
        let rr = wy / h - wy * wy;
        if rr < 0.0 {
            return Vec::new();
        }
        let r = rr.sqrt();
        let lo = ((-wx - r) / om).ceil() as i64;
        let hi = ((-wx + r) / om).floor() as i64;
        let mut out = Vec::new();
        for k in lo..=hi {
            if skip_zero && k == 0 {
                continue;
            }
            let ux = wx + om * k as f64;
            let m2 = ux * ux + wy * wy;
            out.push((-ux / m2, wy / m2));
        }
        out
    };
    let mut total = Bands::new();
    total.add(z.y, s);
    let roots = children(z.x, z.y, false);
    let parts: Vec<Bands> = roots
        .par_iter()
        .map(|&(rx, ry)| {
            let mut b = Bands::new();
            let mut stack = vec![(rx, ry)];
            while let Some((wx, wy)) = stack.pop() {
                b.add(wy, s);
                stack.extend(children(wx, wy, true));
            }
            b
        })
        .collect();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Partial sum through band `last` plus a geometric tail fitted to the two preceding band ratios.
fn band_extrapolation(b: &Bands, last: usize) -> (f64, f64) {
    let partial: f64 = b.sum[..=last].iter().sum();
    let r1 = b.sum[last] / b.sum[last - 1];
    let r2 = b.sum[last - 1] / b.sum[last - 2];
    let r = (r1 * r2).sqrt().min(0.99);
    let tail = b.sum[last] * r / (1.0 - r);
    (partial + tail, tail)
}

fn thin_coset_route(spec: &GroupSpec, z: &UTBPoint, s: f64, h: f64) -> Result<EisensteinValue> {
    let omega = omega_of(spec)?;
    if omega < 3 {
        return Err(ShearError::InvalidGroup("thin coset enumeration needs translation length >= 3".into()));
    }
    let (w, _) = spec.reduce(z)?;
    let levels = (-h.log(4.0)).floor() as usize;
    if levels < 5 {
        return Err(ShearError::InvalidArgument("coset cutoff must be below 4^-5".into()));
    }
    let h = 4f64.powi(-(levels as i32));
    let b = thin_bands(omega, &w, s, h)?;
    let (v1, tail) = band_extrapolation(&b, levels - 1);
    let (v0, _) = band_extrapolation(&b, levels - 2);
    let terms = b.count.iter().sum::<u64>() as usize;
    let omega_f = omega as f64;
    Ok(EisensteinValue {
        value: v1 / omega_f,
        est_error: (v1 - v0).abs() / omega_f,
        route: Route::CosetSum,
        terms,
        tail: tail / omega_f,
    })
}

/// Empirical critical exponent from the growth of the number of cosets with Im(γz) >= h
/// at z = 2i: counts per band grow like 4^δ.
pub fn estimate_delta_hat(spec: &GroupSpec) -> Result<f64> {
    let omega = omega_of(spec)?;
    if spec.lattice {
        return Ok(1.0);
    }
    let levels = 14;
    let b = thin_bands(omega, &UTBPoint::up(0.0, 2.0), 1.0, 4f64.powi(-levels))?;
    let l = levels as usize;
    let ratio = (b.count[l - 1] as f64 / b.count[l - 4] as f64).powf(1.0 / 3.0);
    Ok(ratio.ln() / 4f64.ln())
}

static THIN4_DELTA: OnceLock<f64> = OnceLock::new();

/// δ̂ for a group, cached for the thin built-in.
pub fn thin_delta_hat(spec: &GroupSpec) -> Result<f64> {
    if spec.generators == GroupSpec::thin4().generators {
        if let Some(v) = THIN4_DELTA.get() {
            return Ok(*v);
        }
        let v = estimate_delta_hat(spec)?;
        Ok(*THIN4_DELTA.get_or_init(|| v))
    } else {
        estimate_delta_hat(spec)
    }
}

/// Ẽ(z, 1) = (3/π)(2γ − 2ζ'/ζ(2) − log(4y|η(z)|⁴)).
pub fn regularized_e1(z: &UTBPoint) -> f64 {
    3.0 / PI * (2.0 * EULER_GAMMA - 2.0 * ZETA_LOG_DERIV_2 - log_4y_eta4(z))
}

/// Ẽ(z, 1) from the Laurent expansion of the Fourier route at s = 1.
pub fn regularized_e1_fourier(z: &UTBPoint) -> Result<f64> {
    let (w, _) = reduce_to_fundamental_domain(z)?;
    let (x, y) = (w.x, w.y);
    let m = (40.0 / (2.0 * PI * y)).ceil() as usize + 2;
    let xi2 = completed_zeta(2.0)?;
    let terms: Vec<f64> = (1..=m)
        .map(|n| {
            let nf = n as f64;
            Ok(nf.sqrt() * divisor_sigma(-1.0, n as u64) * bessel_k(0.5, 2.0 * PI * nf * y)? * (2.0 * PI * nf * x).cos())
        })
        .collect::<Result<_>>()?;
    let constant = y + 3.0 / PI * (2.0 * EULER_GAMMA - 2.0 * ZETA_LOG_DERIV_2 - (4.0 * y).ln());
    Ok(constant + 4.0 * y.sqrt() / xi2 * pairwise_sum(&terms))
}

/// Richardson-accelerated ε·E(z, 1+ε) from ε and ε/2.
pub fn residue_limit(z: &UTBPoint, eps: f64) -> Result<f64> {
    let e = EisensteinEvaluator::fourier();
    let g = |t: f64| -> Result<f64> { Ok(t * e.eval(z, 1.0 + t)?.value) };
    Ok(2.0 * g(eps / 2.0)? - g(eps)?)
}

/// Richardson-accelerated E(z, 1+ε) − (3/π)/ε from ε and ε/2.
pub fn regularized_e1_limit(z: &UTBPoint, eps: f64) -> Result<f64> {
    let e = EisensteinEvaluator::fourier();
    let g = |t: f64| -> Result<f64> { Ok(e.eval(z, 1.0 + t)?.value - 3.0 / PI / t) };
    Ok(2.0 * g(eps / 2.0)? - g(eps)?)
}

/// ∫ Ψ·g dx dy/y² over the support of Ψ (box) or the standard fundamental domain (cusp
/// decaying). Ψ is averaged over the tangent angle when it is not K-invariant.
pub fn pair_with<G: Fn(&UTBPoint) -> Result<f64> + Sync>(psi: &TestFunction, g: &G, tol: f64) -> Result<f64> {
    let psi_avg = |x: f64, y: f64| -> Result<f64> {
        if psi.k_invariant {
            return psi.eval(&UTBPoint::up(x, y));
        }
        let n = 32;
        let mut acc = 0.0;
        for j in 0..n {
            let th = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
            acc += psi.eval(&UTBPoint::new(x, y, th))?;
        }
        Ok(acc / n as f64)
    };
    match psi.support {
        Support::Box { x0, x1, y0, y1 } => {
            if x1 <= x0 || y1 <= y0 {
                return Ok(0.0);
            }
            let rule = gauss_legendre(20);
            let tensor = |panels: usize| -> Result<f64> {
                let hx = (x1 - x0) / panels as f64;
                let hy = (y1 - y0) / panels as f64;
                let axis = |lo: f64, h: f64| -> Vec<(f64, f64)> {
                    (0..panels)
                        .flat_map(|p| rule.0.iter().zip(&rule.1).map(move |(t, w)| (lo + h * (p as f64 + 0.5 + 0.5 * t), 0.5 * h * w)))
                        .collect()
                };
                let (xs, ys) = (axis(x0, hx), axis(y0, hy));
                let vals: Vec<f64> = xs
                    .par_iter()
                    .flat_map_iter(|&(x, wx)| ys.iter().map(move |&(y, wy)| (x, y, wx * wy)))
                    .map(|(x, y, wt)| {
                        let p = psi_avg(x, y)?;
                        if p == 0.0 {
                            return Ok(0.0);
                        }
                        Ok(wt * p * g(&UTBPoint::up(x, y))? / (y * y))
                    })
                    .collect::<Result<_>>()?;
                Ok(pairwise_sum(&vals))
            };
            // double the panel count until consecutive grids agree to tol
            let mut panels = 3;
            let mut prev = tensor(panels)?;
            loop {
                panels *= 2;
                let next = tensor(panels)?;
                if (next - prev).abs() <= tol * next.abs().max(1.0) {
                    return Ok(next);
                }
                if panels >= 48 {
                    return Err(ShearError::ToleranceNotMet { estimate: next, achieved: (next - prev).abs(), requested: tol });
                }
                prev = next;
            }
        }
        Support::CuspDecaying => {
            if !psi.spec.lattice || omega_of(&psi.spec)? != 1 {
                return Err(ShearError::InvalidArgument("cusp-decaying pairings are implemented on PSL(2,Z)".into()));
            }
            let top = psi.upper_cutoff(tol)?;
            let inner = |x: f64| -> f64 {
                let y0 = (1.0 - x * x).sqrt();
                let h = |y: f64| psi_avg(x, y).unwrap_or(f64::NAN) * g(&UTBPoint::up(x, y)).unwrap_or(f64::NAN) / (y * y);
                integrate(&h, y0, top, tol * 0.01, 1e-11, 4000).value
            };
            let breaks: Vec<f64> = (0..=16).map(|i| -0.5 + i as f64 / 16.0).collect();
            let parts: Vec<f64> = breaks.par_windows(2).map(|w| integrate(&inner, w[0], w[1], tol * 0.01, 1e-11, 2000).value).collect();
            let v = pairwise_sum(&parts);
            if v.is_nan() {
                return Err(ShearError::NonConvergent("evaluation failed inside the pairing".into()));
            }
            Ok(v)
        }
    }
}

/// μ_Ẽis(Ψ) = ⟨Ψ, Ẽ(·,1)⟩ on PSL(2,Z) (`regularized`), or μ_Eis(Ψ) = ⟨Ψ, E(·,1)⟩ on a thin group.
pub fn mu_eis(psi: &TestFunction, regularized: bool) -> Result<f64> {
    if !psi.k_invariant {
        return Err(ShearError::InvalidArgument("Eisenstein functionals are implemented for K-invariant test functions".into()));
    }
    if psi.support == Support::CuspDecaying && psi.decay_alpha <= 1.0 {
        return Err(ShearError::DivergentPairing(format!("decay exponent {} <= 1", psi.decay_alpha)));
    }
    if regularized {
        if !psi.spec.lattice {
            return Err(ShearError::InvalidArgument("the regularized functional needs PSL(2,Z)".into()));
        }
        pair_with(psi, &|p| Ok(regularized_e1(p)), 1e-12)
    } else {
        if psi.spec.lattice {
            return Err(ShearError::NonConvergent("E(z,1) has a pole for a lattice; use the regularized functional".into()));
        }
        let e = EisensteinEvaluator::coset(&psi.spec).with_min_height(4f64.powi(-11));
        pair_with(psi, &|p| Ok(e.eval(p, 1.0)?.value), 1e-6)
    }
}
