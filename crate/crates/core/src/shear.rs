//! Measures along sheared cuspidal rays: μ_T(Ψ), the strip measure, horocycle averages,
//! Fourier coefficients along horocycles, the Haar mean, and the log-linear regression of
//! μ_T against log T.

use crate::algebra::UTBPoint;
use crate::eisenstein::pair_with;
use crate::error::{Result, ShearError};
use crate::quad::{gauss_legendre, gl_composite, integrate_from, integrate_panels_par, pairwise_sum, periodic_mean_par};
use crate::testfn::TestFunction;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One evaluation of μ_T(Ψ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearSample {
    pub t: f64,
    pub value: f64,
    /// Quadrature error estimate plus the declared cusp-tail bound.
    pub error: f64,
    /// Number of integrand evaluations along the ray.
    pub nodes: usize,
}

/// Hyperbolic length of the initial quadrature panels along a ray.
const PANEL_LENGTH: f64 = 0.2;

fn checked(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ShearError::NonConvergent("test function evaluation failed inside a quadrature".into()))
    }
}

/// μ_T(Ψ) = ∫_1^∞ Ψ(yT/√(T²+1) + iy/√(T²+1), ↑) dy/y, integrated in log-height along the
/// ray with panels of fixed hyperbolic length, truncated where the declared decay bounds
/// the tail by tol/2.
pub fn mu_t(psi: &TestFunction, t: f64, tol: f64) -> Result<ShearSample> {
    if !(tol > 0.0) || !t.is_finite() {
        return Err(ShearError::InvalidArgument("mu_T needs finite T and tol > 0".into()));
    }
    let tt = (t * t + 1.0).sqrt();
    let top = psi.upper_cutoff(tol)?;
    let lo = -tt.ln();
    let hi = top.ln();
    if hi <= lo {
        return Ok(ShearSample { t, value: 0.0, error: 0.0, nodes: 0 });
    }
    let du = PANEL_LENGTH / tt;
    let n = ((hi - lo) / du).ceil() as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let f = |u: f64| {
        let v = u.exp();
        psi.eval(&UTBPoint::up(t * v, v)).unwrap_or(f64::NAN)
    };
    let r = integrate_panels_par(&f, &breaks, 0.5 * tol, 64);
    let value = checked(r.value)?;
    let error = r.error + if matches!(psi.support, crate::testfn::Support::Box { .. }) { 0.0 } else { 0.5 * tol };
    if !r.converged || error > tol {
        return Err(ShearError::ToleranceNotMet { estimate: value, achieved: error, requested: tol });
    }
    Ok(ShearSample { t, value, error, nodes: r.evaluations })
}

/// Number of trapezoid nodes for a full horocycle at height y.
fn horocycle_nodes(omega: f64, y: f64) -> usize {
    ((100.0 * omega / y).ceil() as usize).max(1024)
}

/// (1/|I|)∫_I Ψ(x+iy, ↑) dx. Full periods use the trapezoid rule; other intervals use
/// composite Gauss–Legendre with panels shorter than y/4.
pub fn horocycle_average(psi: &TestFunction, y: f64, interval: (f64, f64)) -> Result<f64> {
    let (x0, x1) = interval;
    if !(x0 < x1) || !(y > 0.0) {
        return Err(ShearError::InvalidArgument("horocycle average needs x0 < x1 and y > 0".into()));
    }
    let omega = psi.spec.omega();
    let periods = (x1 - x0) / omega;
    let f = |x: f64| psi.eval(&UTBPoint::up(x, y)).unwrap_or(f64::NAN);
    if (periods - periods.round()).abs() < 1e-12 && periods.round() >= 1.0 {
        return checked(periodic_mean_par(&f, x0, x0 + omega, horocycle_nodes(omega, y)));
    }
    let rule = gauss_legendre(10);
    let panels = (((x1 - x0) * 4.0 / y).ceil() as usize).max(128);
    let chunks = 64.min(panels);
    let per = panels.div_ceil(chunks);
    let parts: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let a = x0 + (x1 - x0) * c as f64 / chunks as f64;
            let b = x0 + (x1 - x0) * (c + 1) as f64 / chunks as f64;
            gl_composite(&f, a, b, per, &rule)
        })
        .collect();
    checked(pairwise_sum(&parts) / (x1 - x0))
}

/// a_Ψ(m; y, θ) = (1/ω)∫_0^ω Ψ(x+iy, θ) e(−mx/ω) dx by the trapezoid rule.
pub fn fourier_coefficient(psi: &TestFunction, m: i64, y: f64, theta: f64) -> Result<Complex64> {
    if !(y > 0.0) {
        return Err(ShearError::InvalidArgument("fourier coefficient needs y > 0".into()));
    }
    let omega = psi.spec.omega();
    let n = horocycle_nodes(omega, y).max(8 * m.unsigned_abs() as usize);
    let vals: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = omega * j as f64 / n as f64;
            let v = psi.eval(&UTBPoint::new(x, y, theta)).unwrap_or(f64::NAN);
            let ph = -2.0 * PI * m as f64 * j as f64 / n as f64;
            (v * ph.cos(), v * ph.sin())
        })
        .collect();
    let re: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let im: Vec<f64> = vals.iter().map(|v| v.1).collect();
    Ok(Complex64::new(checked(pairwise_sum(&re))? / n as f64, checked(pairwise_sum(&im))? / n as f64))
}

/// μ_{T,strip}(Ψ) = (1/ω)∫_0^ω ∫_{1/T}^∞ Ψ(x+iy, ↑) dy/y dx, as an adaptive integral in
/// log y of full horocycle averages.
pub fn mu_t_strip(psi: &TestFunction, t: f64, tol: f64) -> Result<f64> {
    if !(t > 0.0) || !(tol > 0.0) {
        return Err(ShearError::InvalidArgument("strip measure needs T > 0 and tol > 0".into()));
    }
    let top = psi.upper_cutoff(tol)?;
    let lo = -t.ln();
    let hi = top.ln();
    if hi <= lo {
        return Ok(0.0);
    }
    let omega = psi.spec.omega();
    let f = |u: f64| horocycle_average(psi, u.exp(), (0.0, omega)).unwrap_or(f64::NAN);
    let n = ((hi - lo) / 0.25).ceil() as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let r = integrate_from(&f, &breaks, 0.5 * tol, 0.0, 4000);
    let v = checked(r.value)?;
    if !r.converged {
        return Err(ShearError::ToleranceNotMet { estimate: v, achieved: r.error, requested: tol });
    }
    Ok(v)
}

/// Haar mean (3/π)∫_F Ψ dx dy/y² (dθ/π) on PSL(2,Z).
pub fn haar_mean(psi: &TestFunction) -> Result<f64> {
    if !psi.spec.lattice {
        return Err(ShearError::InvalidArgument("the Haar mean is a probability average on a lattice quotient".into()));
    }
    Ok(3.0 / PI * pair_with(psi, &|_| Ok(1.0), 1e-12)?)
}

/// Least-squares fit v ≈ a·log T + b.
pub fn fit_log_linear(ts: &[f64], vs: &[f64]) -> Result<(f64, f64)> {
    if ts.len() < 2 || ts.len() != vs.len() {
        return Err(ShearError::InsufficientData { need: 2, got: ts.len().min(vs.len()) });
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = vs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(vs).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    Ok((a, my - a * mx))
}

/// Exponent η in |r| ≈ C x^{−η}, fitted in log-log coordinates.
pub fn fitted_decay_exponent(xs: &[f64], rs: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(rs).filter(|(_, r)| r.abs() > 0.0).map(|(x, r)| (*x, r.abs().ln())).collect();
    if pts.len() < 2 {
        return Err(ShearError::InsufficientData { need: 2, got: pts.len() });
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ls: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, _) = fit_log_linear(&ts, &ls)?;
    Ok(-slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub samples: Vec<ShearSample>,
    pub slope: f64,
    pub intercept: f64,
    /// Fitted η in |μ_T − main term| ≈ C T^{−η}.
    pub decay_exponent: f64,
    pub residuals: Vec<f64>,
}

/// Fits μ_T(Ψ) ≈ a log T + b over `t_list` (at least 1.5 decades). Residuals are taken
/// against `main` = (a, b) when supplied (the predicted main terms), else against the fit.
pub fn equidistribution_regression(psi: &TestFunction, t_list: &[f64], tol: f64, main: Option<(f64, f64)>) -> Result<Regression> {
    if t_list.len() < 3 {
        return Err(ShearError::InsufficientData { need: 3, got: t_list.len() });
    }
    let tmin = t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = t_list.iter().cloned().fold(0.0, f64::max);
    let span = (tmax / tmin).log10();
    if !(tmin > 0.0) || span < 1.5 {
        return Err(ShearError::InsufficientSpan(span));
    }
    let samples = t_list.iter().map(|&t| mu_t(psi, t, tol)).collect::<Result<Vec<_>>>()?;
    let vs: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let (slope, intercept) = fit_log_linear(t_list, &vs)?;
    let (a, b) = main.unwrap_or((slope, intercept));
    let residuals: Vec<f64> = t_list.iter().zip(&vs).map(|(t, v)| v - a * t.ln() - b).collect();
    let decay_exponent = fitted_decay_exponent(t_list, &residuals)?;
    Ok(Regression { samples, slope, intercept, decay_exponent, residuals })
}
