//! The discriminant form Δ and its symmetric-square L-function: q-expansion, evaluation,
//! Petersson norm, L(sym²Δ, s) with its completed log-derivative, the archimedean weight
//! of the shifted Hecke integral, the second-moment ray integral, and the Kronecker check.

use crate::algebra::UTBPoint;
use crate::error::{Result, ShearError};
use crate::group::reduce_to_fundamental_domain;
use crate::quad::{integrate, integrate_panels_par, pairwise_sum};
use crate::special::{digamma, digamma_c, gamma_c, ln_gamma, log_4y_eta4, zeta, zeta_prime, EULER_GAMMA};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Truncated q-expansion sum_{n>=1} a(n) q^n of a weight-k form; `coeffs[n]` is a(n),
/// with `coeffs[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QExpansion {
    pub weight: u32,
    pub coeffs: Vec<i128>,
}

impl QExpansion {
    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn a(&self, n: usize) -> i128 {
        self.coeffs[n]
    }

    /// Normalized coefficient a(n)/n^{(k-1)/2}.
    pub fn lambda(&self, n: usize) -> f64 {
        self.coeffs[n] as f64 / (n as f64).powf((self.weight as f64 - 1.0) / 2.0)
    }

    pub fn scaled(&self, c: i128) -> QExpansion {
        QExpansion { weight: self.weight, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }
}

/// tau(1..=N) from Δ = q prod (1 - q^n)^24, via the recurrence
/// m c(m) = -24 sum_{j=1}^m sigma_1(j) c(m - j) for the coefficients of prod (1 - q^n)^24.
pub fn delta_qexp(n: usize) -> QExpansion {
    assert!(n >= 1);
    let mut sigma = vec![0i128; n];
    for d in 1..n {
        let mut m = d;
        while m < n {
            sigma[m] += d as i128;
            m += d;
        }
    }
    let mut c = vec![0i128; n];
    c[0] = 1;
    for m in 1..n {
        let s: i128 = (1..=m).map(|j| sigma[j] * c[m - j]).sum();
        let num = -24 * s;
        debug_assert_eq!(num % m as i128, 0);
        c[m] = num / m as i128;
    }
    let mut coeffs = vec![0i128; n + 1];
    coeffs[1..].copy_from_slice(&c);
    QExpansion { weight: 12, coeffs }
}

fn q_series(f: &QExpansion, w: Complex64) -> Complex64 {
    let q = (Complex64::new(0.0, 2.0 * PI) * w).exp();
    let mut qn = q;
    let mut s = Complex64::new(0.0, 0.0);
    let qa = q.norm();
    for n in 1..=f.len() {
        s += f.coeffs[n] as f64 * qn;
        // |a(n)| <= d(n) n^{(k-1)/2}; stop once the envelope is negligible.
        if qa.powi(n as i32) * (n as f64).powf(f.weight as f64 / 2.0 + 1.0) < 1e-17 * s.norm().max(1e-300) {
            break;
        }
        qn *= q;
    }
    s
}

/// f(z), routed through domain reduction and the weight-k transformation law.
pub fn eval_form(f: &QExpansion, z: &UTBPoint) -> Result<Complex64> {
    let (w, g) = reduce_to_fundamental_domain(z)?;
    let fw = q_series(f, Complex64::new(w.x, w.y));
    // z = g^{-1} w with g^{-1} = (d -b; -c a), so f(z) = (-c w + a)^k f(w).
    let j = Complex64::new(-(g.c as f64) * w.x + g.a as f64, -(g.c as f64) * w.y);
    Ok(j.powi(f.weight as i32) * fw)
}

/// |f(z)|^2 y^k, evaluated at the reduced point.
pub fn eval_psi_f(f: &QExpansion, z: &UTBPoint) -> Result<f64> {
    let (w, _) = reduce_to_fundamental_domain(z)?;
    Ok(psi_f_reduced(f, w.x, w.y))
}

/// |f|^2 y^k at a point assumed to be in the fundamental domain already.
pub fn psi_f_reduced(f: &QExpansion, x: f64, y: f64) -> f64 {
    q_series(f, Complex64::new(x, y)).norm_sqr() * y.powi(f.weight as i32)
}

/// Upper integration height for fundamental-domain integrals of |f|^2 y^k.
const Y_TOP: f64 = 12.0;

/// Integrates g(x, y)·|f|^2 y^{k-2} over the standard fundamental domain, using the
/// symmetry x -> -x of the integrand class (g must share it).
pub fn fd_integral<G: Fn(f64, f64) -> f64 + Sync>(f: &QExpansion, g: &G, rel_tol: f64) -> f64 {
    let k = f.weight as i32;
    let inner = |x: f64| {
        let y0 = (1.0 - x * x).sqrt();
        let h = |y: f64| g(x, y) * q_series(f, Complex64::new(x, y)).norm_sqr() * y.powi(k - 2);
        integrate(&h, y0, Y_TOP, 0.0, rel_tol * 0.1, 4000).value
    };
    let breaks: Vec<f64> = (0..=8).map(|i| 0.5 * i as f64 / 8.0).collect();
    let parts: Vec<f64> = breaks
        .par_windows(2)
        .map(|w| integrate(&inner, w[0], w[1], 0.0, rel_tol, 2000).value)
        .collect();
    2.0 * pairwise_sum(&parts)
}

/// Petersson norm squared, integral of |f|^2 y^k dx dy / y^2 over the fundamental domain.
pub fn petersson_norm(f: &QExpansion) -> f64 {
    fd_integral(f, &|_, _| 1.0, 1e-12)
}

/// Coefficients c(1..=n) of L(sym² f, s), from zeta(2s)/zeta(s) · sum lambda(n)^2 n^{-s}.
pub fn sym2_coefficients(f: &QExpansion, n: usize) -> Vec<f64> {
    assert!(n <= f.len());
    let mut mu = vec![1i32; n + 1];
    let mut is_comp = vec![false; n + 1];
    let mut primes = Vec::new();
    mu[0] = 0;
    for i in 2..=n {
        if !is_comp[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            if i * p > n {
                break;
            }
            is_comp[i * p] = true;
            if i % p == 0 {
                mu[i * p] = 0;
                break;
            }
            mu[i * p] = -mu[i];
        }
    }
    let b: Vec<f64> = (0..=n).map(|i| if i == 0 { 0.0 } else { f.lambda(i).powi(2) }).collect();
    // h = mu * b
    let mut h = vec![0.0; n + 1];
    for d in 1..=n {
        if mu[d] == 0 {
            continue;
        }
        let mut m = d;
        while m <= n {
            h[m] += mu[d] as f64 * b[m / d];
            m += d;
        }
    }
    // c = 1_square * h
    let mut c = vec![0.0; n + 1];
    let mut r = 1;
    while r * r <= n {
        let sq = r * r;
        let mut m = sq;
        while m <= n {
            c[m] += h[m / sq];
            m += sq;
        }
        r += 1;
    }
    c
}

/// Value of L(sym² f, s) with its completions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LSeriesValue {
    pub s: f64,
    /// L(sym² f, s)
    pub value: f64,
    /// Λ(s) = (4π)^{-(s+k-1)} Γ(s+k-1) L(s)
    pub completed: f64,
    /// L'(s), when requested.
    pub derivative: Option<f64>,
    /// Λ'/Λ(s), when requested.
    pub completed_log_derivative: Option<f64>,
    /// Estimated absolute error of `value`.
    pub error: f64,
    /// Number of Dirichlet coefficients used.
    pub terms: usize,
}

/// Gamma factor of the full completion: Γ_R(s+1) Γ_C(s+k-1), with Γ_R(s) = π^{-s/2}Γ(s/2)
/// and Γ_C(s) = 2(2π)^{-s}Γ(s).
fn full_gamma_c(k: u32, s: Complex64) -> Complex64 {
    let kk = k as f64 - 1.0;
    let a = (s + 1.0) * 0.5;
    let b = s + kk;
    (-a * PI.ln()).exp() * gamma_c(a) * 2.0 * (-b * (2.0 * PI).ln()).exp() * gamma_c(b)
}

fn full_gamma_logderiv_c(k: u32, s: Complex64) -> Complex64 {
    let kk = k as f64 - 1.0;
    -0.5 * PI.ln() + 0.5 * digamma_c((s + 1.0) * 0.5) - (2.0 * PI).ln() + digamma_c(s + kk)
}

/// Smoothing weight family for the approximate functional equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeWeight {
    /// G(w) = exp(w^2 / scale).
    pub scale: f64,
    /// Real part of the integration line.
    pub line: f64,
}

impl Default for AfeWeight {
    fn default() -> Self {
        AfeWeight { scale: 64.0, line: 2.0 }
    }
}

/// Completed value Λ_full(s) = Γ_R(s+1)Γ_C(s+k-1)L(sym² f, s) and its s-derivative from
/// the smoothed approximate functional equation
/// Λ_full(s) = Σ c(n)[W(s, n) + W(1-s, n)], W(s, n) = (1/2πi)∫ γ(s+w) n^{-s-w} G(w) dw/w.
pub fn sym2_completed_afe(f: &QExpansion, s: f64, weight: AfeWeight) -> (f64, f64, usize) {
    let nmax = f.len().min(4000);
    let c = sym2_coefficients(f, nmax);
    let h = 0.05;
    let umax = (6.0 * weight.scale.sqrt() + 8.0).min(48.0);
    let nodes: Vec<f64> = (0..=((umax / h) as usize)).map(|j| j as f64 * h).collect();
    // each Mellin line must sit where the Dirichlet series converges absolutely
    let prep = |sv: f64| -> Vec<(Complex64, Complex64, Complex64)> {
        let line = weight.line.max(1.5 - sv);
        nodes
            .iter()
            .map(|&u| {
                let w = Complex64::new(line, u);
                let arg = sv + w;
                let g = full_gamma_c(f.weight, arg) * (w * w / weight.scale).exp() / w;
                (arg, g, full_gamma_logderiv_c(f.weight, arg))
            })
            .collect()
    };
    let p1 = prep(s);
    let p2 = prep(1.0 - s);
    let w_of = |p: &[(Complex64, Complex64, Complex64)], ln_n: f64| -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        for (j, (arg, g, lg)) in p.iter().enumerate() {
            let wt = if j == 0 { 0.5 } else { 1.0 };
            let t = g * (-arg * ln_n).exp();
            v += wt * t.re;
            dv += wt * (t * (lg - ln_n)).re;
        }
        (v * h / PI, dv * h / PI)
    };
    let mut terms = Vec::new();
    let mut dterms = Vec::new();
    let mut used = 0;
    let mut small = 0;
    for n in 1..=nmax {
        if c[n] == 0.0 {
            continue;
        }
        let ln_n = (n as f64).ln();
        let (a, da) = w_of(&p1, ln_n);
        let (b, db) = w_of(&p2, ln_n);
        let t = c[n] * (a + b);
        terms.push(t);
        dterms.push(c[n] * (da - db));
        used = n;
        if t.abs() < 1e-22 {
            small += 1;
            if small > 20 {
                break;
            }
        } else {
            small = 0;
        }
    }
    (pairwise_sum(&terms), pairwise_sum(&dterms), used)
}

/// L(sym² f, s) with optional derivative, via the approximate functional equation.
/// The error is estimated by comparing two smoothing weights.
pub fn sym2_l(f: &QExpansion, s: f64, want_derivative: bool) -> Result<LSeriesValue> {
    if s < 0.0 {
        return Err(ShearError::InvalidArgument("sym2_l implemented for s >= 0".into()));
    }
    let (lam, dlam, terms) = sym2_completed_afe(f, s, AfeWeight::default());
    let (lam2, _, _) = sym2_completed_afe(f, s, AfeWeight { scale: 256.0, line: 2.5 });
    let gam = full_gamma_c(f.weight, Complex64::new(s, 0.0)).re;
    let lg = full_gamma_logderiv_c(f.weight, Complex64::new(s, 0.0)).re;
    let value = lam / gam;
    let rel = ((lam - lam2) / lam).abs();
    if rel > 1e-4 {
        return Err(ShearError::InsufficientConvergence(rel));
    }
    let kk = f.weight as f64 - 1.0;
    let pfac = (-(s + kk) * (4.0 * PI).ln() + ln_gamma(s + kk)).exp();
    let (derivative, cld) = if want_derivative {
        let ll = dlam / lam - lg;
        (Some(ll * value), Some(-(4.0 * PI).ln() + digamma(s + kk) + ll))
    } else {
        (None, None)
    };
    Ok(LSeriesValue {
        s,
        value,
        completed: pfac * value,
        derivative,
        completed_log_derivative: cld,
        error: rel * value.abs(),
        terms,
    })
}

/// Smoothed Dirichlet sum Σ c(n) n^{-s} e^{-n/X}, and its s-derivative.
pub fn sym2_smoothed_sum(f: &QExpansion, s: f64, x: f64) -> (f64, f64) {
    let n = f.len().min((40.0 * x).ceil() as usize);
    let c = sym2_coefficients(f, n);
    let t: Vec<f64> = (1..=n).map(|m| c[m] * (m as f64).powf(-s) * (-(m as f64) / x).exp()).collect();
    let d: Vec<f64> = (1..=n).map(|m| -(m as f64).ln() * c[m] * (m as f64).powf(-s) * (-(m as f64) / x).exp()).collect();
    (pairwise_sum(&t), pairwise_sum(&d))
}

/// Plain partial sum Σ_{n<=N} c(n) n^{-s}.
pub fn sym2_plain_sum(f: &QExpansion, s: f64, n: usize) -> f64 {
    let c = sym2_coefficients(f, n);
    let t: Vec<f64> = (1..=n).map(|m| c[m] * (m as f64).powf(-s)).collect();
    pairwise_sum(&t)
}

/// 𝒲_k(s, T) = (2π)^{-u} Γ(u) (1 - iT)^{-u}, u = s + (k-1)/2.
pub fn weight_w(k: u32, s: Complex64, t: f64) -> Result<Complex64> {
    let u = s + (k as f64 - 1.0) / 2.0;
    if u.re <= 0.0 {
        return Err(ShearError::InvalidArgument("Re(s + (k-1)/2) must be positive".into()));
    }
    let base = Complex64::new(1.0, -t);
    Ok((-u * (2.0 * PI).ln()).exp() * gamma_c(u) * (-u * base.ln()).exp())
}

/// L(f, s) = Σ λ(n) n^{-s} for Re s > 1, summed to the stored length.
pub fn hecke_l(f: &QExpansion, s: f64) -> f64 {
    let t: Vec<f64> = (1..=f.len()).map(|n| f.lambda(n) * (n as f64).powf(-s)).collect();
    pairwise_sum(&t)
}

/// ∫_0^∞ f(Ty + iy) y^{s+(k-1)/2} dy/y by quadrature in log y.
pub fn hecke_integral(f: &QExpansion, s: f64, t: f64) -> Result<Complex64> {
    let u = s + (f.weight as f64 - 1.0) / 2.0;
    let g = |v: f64, part: usize| {
        let y = v.exp();
        let val = eval_form(f, &UTBPoint::up(t * y, y)).expect("evaluation");
        let w = val * y.powf(u);
        if part == 0 {
            w.re
        } else {
            w.im
        }
    };
    let breaks: Vec<f64> = (0..=64).map(|i| -6.0 + 9.0 * i as f64 / 64.0).collect();
    let re = integrate_panels_par(&|v| g(v, 0), &breaks, 1e-16, 200);
    let im = integrate_panels_par(&|v| g(v, 1), &breaks, 1e-16, 200);
    Ok(Complex64::new(re.value, im.value))
}

/// ∫_0^∞ |f(Ty + iy)|^2 y^k dy/y, split at y = 1/sqrt(T^2+1).
pub fn second_moment_lhs(f: &QExpansion, t: f64) -> Result<f64> {
    if t <= 1.0 {
        return Err(ShearError::InvalidArgument("second_moment_lhs requires T > 1".into()));
    }
    let tt = (t * t + 1.0).sqrt();
    let g = |v: f64| {
        let y = v.exp();
        eval_psi_f(f, &UTBPoint::up(t * y, y)).expect("evaluation")
    };
    let split = -tt.ln();
    let lo = (1.0 / (20.0 * tt * tt)).ln();
    let hi = 20f64.ln();
    // panels of hyperbolic length about 0.1 along the ray
    let width = 0.1 / tt;
    let mk = |a: f64, b: f64| -> Vec<f64> {
        let n = ((b - a) / width).ceil() as usize;
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    };
    let scale = 1e-6;
    let r1 = integrate_panels_par(&g, &mk(lo, split), 1e-10 * scale, 100);
    let r2 = integrate_panels_par(&g, &mk(split, hi), 1e-10 * scale, 100);
    Ok(r1.value + r2.value)
}

/// Predicted main term 2(‖f‖²/vol)(log T + Λ'/Λ(sym² f, 1) + γ - 2ζ'/ζ(2)).
pub fn second_moment_prediction(norm_sq: f64, lambda_log_deriv: f64, t: f64) -> Result<f64> {
    let zl = zeta_prime(2.0)? / zeta(2.0)?;
    Ok(2.0 * norm_sq / (PI / 3.0) * (t.ln() + lambda_log_deriv + EULER_GAMMA - 2.0 * zl))
}

/// Both sides of ⟨log(4y|η|⁴), |f|²y^k⟩/‖f‖² = γ − Λ'/Λ(sym² f, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KroneckerCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

pub fn kronecker_check(f: &QExpansion) -> Result<KroneckerCheck> {
    let norm = petersson_norm(f);
    let pairing = fd_integral(f, &|x, y| log_4y_eta4(&UTBPoint::up(x, y)), 1e-12);
    let lhs = pairing / norm;
    let l = sym2_l(f, 1.0, true)?;
    let rhs = EULER_GAMMA - l.completed_log_derivative.unwrap();
    Ok(KroneckerCheck { lhs, rhs, gap: (lhs - rhs).abs() })
}

/// Residue identity sides: (‖f‖²/vol, Λ(sym² f, 1)/ζ(2)).
pub fn residue_identity(f: &QExpansion) -> Result<(f64, f64)> {
    let norm = petersson_norm(f);
    let l = sym2_l(f, 1.0, false)?;
    Ok((norm / (PI / 3.0), l.completed / zeta(2.0)?))
}
