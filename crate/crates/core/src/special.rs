//! Special functions: Gamma and digamma (real and complex), Riemann zeta and its
//! derivative, modified Bessel K of real order, the Dedekind eta function with its
//! modular transformation, Dedekind sums and divisor sums.

use crate::algebra::UTBPoint;
use crate::error::{Result, ShearError};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
/// zeta'(2)/zeta(2).
pub const ZETA_LOG_DERIV_2: f64 = -0.569_960_993_094_532_806_4;

/// Relative tolerance targets per function family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    pub rel_tol: f64,
}

impl Precision {
    pub const GAMMA_ZETA_ETA: Precision = Precision { rel_tol: 1e-12 };
    pub const BESSEL: Precision = Precision { rel_tol: 1e-10 };
}

// B_2, B_4, ..., B_22
const BERNOULLI: [f64; 11] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
];

const STIRLING_MIN: f64 = 16.0;

fn stirling_ln_gamma(z: Complex64) -> Complex64 {
    let mut s = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln();
    let z2 = z * z;
    let mut zp = z;
    for (k, b) in BERNOULLI.iter().take(10).enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        s += *b / (n * (n - 1.0) * zp);
        zp *= z2;
    }
    s
}

fn stirling_digamma(z: Complex64) -> Complex64 {
    let mut s = z.ln() - 0.5 / z;
    let z2 = z * z;
    let mut zp = z2;
    for (k, b) in BERNOULLI.iter().take(10).enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        s -= *b / (n * zp);
        zp *= z2;
    }
    s
}

/// Complex Gamma for Re z > 0 (reflection is used otherwise).
pub fn gamma_c(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (PI * z).sin();
        return PI / (s * gamma_c(1.0 - z));
    }
    let mut w = z;
    let mut prod = Complex64::new(1.0, 0.0);
    while w.norm() < STIRLING_MIN {
        prod *= w;
        w += 1.0;
    }
    stirling_ln_gamma(w).exp() / prod
}

/// log Gamma(z), continuous along shifts (not necessarily the principal branch in Im).
pub fn ln_gamma_c(z: Complex64) -> Complex64 {
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.norm() < STIRLING_MIN {
        acc += w.ln();
        w += 1.0;
    }
    stirling_ln_gamma(w) - acc
}

/// Real Gamma. Poles at non-positive integers return an error.
pub fn gamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(ShearError::Pole(x));
    }
    Ok(gamma_c(Complex64::new(x, 0.0)).re)
}

/// Real log|Gamma(x)| for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    ln_gamma_c(Complex64::new(x, 0.0)).re
}

pub fn digamma_c(z: Complex64) -> Complex64 {
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.norm() < STIRLING_MIN {
        acc += 1.0 / w;
        w += 1.0;
    }
    stirling_digamma(w) - acc
}

pub fn digamma(x: f64) -> f64 {
    digamma_c(Complex64::new(x, 0.0)).re
}

const EM_N: usize = 20;
const EM_TERMS: usize = 10;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Euler–Maclaurin pieces: (finite part without the pole term, its derivative, last remainder term).
fn zeta_em(s: f64) -> (f64, f64, f64) {
    let nf = EM_N as f64;
    let ln_n = nf.ln();
    let mut v = 0.0;
    let mut dv = 0.0;
    for n in 1..EM_N {
        let t = (n as f64).powf(-s);
        v += t;
        dv -= (n as f64).ln() * t;
    }
    let ns = nf.powf(-s);
    v += 0.5 * ns;
    dv -= 0.5 * ln_n * ns;
    // P(s) = s(s+1)...(s+2k-2) and its derivative, built incrementally.
    let mut p = s;
    let mut dp = 1.0;
    let mut last = 0.0;
    for k in 1..=EM_TERMS {
        if k > 1 {
            for j in [2 * k - 3, 2 * k - 2] {
                let f = s + j as f64;
                dp = dp * f + p;
                p *= f;
            }
        }
        let c = BERNOULLI[k - 1] / factorial(2 * k);
        let e = nf.powf(-s - 2.0 * k as f64 + 1.0);
        let term = c * p * e;
        v += term;
        dv += c * (dp * e - ln_n * p * e);
        last = term.abs();
    }
    (v, dv, last)
}

/// zeta(s) − 1/(s−1), continuous through s = 1 where it equals Euler's constant.
pub fn zeta_minus_pole(s: f64) -> f64 {
    let (v, _, _) = zeta_em(s);
    let ln_n = (EM_N as f64).ln();
    let u = (1.0 - s) * ln_n;
    // (N^{1-s} - 1)/(s - 1)
    let pole_part = if u.abs() < 1e-300 { -ln_n } else { -ln_n * u.exp_m1() / u };
    v + pole_part
}

/// Riemann zeta for real s > 0, s != 1.
pub fn zeta(s: f64) -> Result<f64> {
    if s == 1.0 {
        return Err(ShearError::Pole(1.0));
    }
    if s <= 0.0 {
        return Err(ShearError::InvalidArgument(format!("zeta implemented for s > 0, got {s}")));
    }
    let (v, _, _) = zeta_em(s);
    Ok(v + (EM_N as f64).powf(1.0 - s) / (s - 1.0))
}

/// zeta'(s) by differentiating the Euler–Maclaurin formula term by term.
pub fn zeta_prime(s: f64) -> Result<f64> {
    if s == 1.0 {
        return Err(ShearError::Pole(1.0));
    }
    if s <= 0.0 {
        return Err(ShearError::InvalidArgument(format!("zeta' implemented for s > 0, got {s}")));
    }
    let (_, dv, _) = zeta_em(s);
    let nf = EM_N as f64;
    let e = nf.powf(1.0 - s);
    Ok(dv - nf.ln() * e / (s - 1.0) - e / ((s - 1.0) * (s - 1.0)))
}

/// Size of the last Euler–Maclaurin correction term, a proxy for the remainder.
pub fn zeta_remainder_estimate(s: f64) -> f64 {
    zeta_em(s).2
}

// Taylor coefficients c_k of 1/Gamma(z) = sum c_k z^k.
const RGAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Returns (gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) for |mu| <= 1/2, where
/// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu))/(2 mu) and gam2 = the average of the two.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // The coefficient of mu^{k-1} in 1/Gamma(1+mu) is c_k.
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut pw = 1.0;
    for k in (1..=26).step_by(2) {
        gam2 += RGAMMA[k - 1] * pw;
        gam1 -= RGAMMA[k] * pw;
        pw *= mu * mu;
    }
    let odd = gam2;
    // even part of 1/Gamma(1+mu) is sum_{k even} c_k mu^{k-1} = -mu*gam1
    let gp = odd - mu * gam1;
    let gm = odd + mu * gam1;
    (gam1, gam2, gp, gm)
}

/// Modified Bessel function K_nu(x) for real nu and x > 0 (K is even in nu). Temme's series below
/// x = 2, Steed's continued fraction above, and forward recurrence in the order.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !nu.is_finite() {
        return Err(ShearError::InvalidArgument(format!("bessel_k needs finite nu and x > 0; got nu={nu}, x={x}")));
    }
    if x > 705.0 {
        return Ok(0.0);
    }
    let (k, _) = bessel_k_pair(nu.abs(), x);
    Ok(k)
}

/// (K_nu(x), K_{nu+1}(x)).
pub fn bessel_k_pair(nu: f64, x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-16;
    let nl = (nu + 0.5).floor() as usize;
    let mu = nu - nl as f64;
    let mu2 = mu * mu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let (mut kmu, mut k1);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut i = 1.0;
        loop {
            ff = (i * ff + p + q) / (i * i - mu2);
            c *= dd / i;
            p /= i - mu;
            q /= i + mu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - i * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS || i > 500.0 {
                break;
            }
            i += 1.0;
        }
        kmu = sum;
        k1 = sum1 * xi2;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut i = 2.0;
        loop {
            a -= 2.0 * (i - 1.0);
            c = -a * c / i;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS || i > 10000.0 {
                break;
            }
            i += 1.0;
        }
        h *= a1;
        kmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        k1 = kmu * (mu + x + 0.5 - h) * xi;
    }
    for i in 1..=nl {
        let t = (mu + i as f64) * xi2 * k1 + kmu;
        kmu = k1;
        k1 = t;
    }
    (kmu, k1)
}

/// Dedekind sum s(h, k) for k >= 1, computed with the reciprocity law.
pub fn dedekind_sum(h: i64, k: i64) -> f64 {
    assert!(k >= 1);
    let mut sign = 1.0;
    let mut total = 0.0;
    let mut h = h.rem_euclid(k);
    let mut k = k;
    while k > 1 && h != 0 {
        // s(h,k) = -s(k,h) - 1/4 + (h/k + k/h + 1/(hk))/12
        let (hf, kf) = (h as f64, k as f64);
        total += sign * (-0.25 + (hf / kf + kf / hf + 1.0 / (hf * kf)) / 12.0);
        sign = -sign;
        let nh = k.rem_euclid(h);
        k = h;
        h = nh;
    }
    total
}

/// Exact divisor sum sigma_s(n) = sum_{d | n} d^s.
pub fn divisor_sigma(s: f64, n: u64) -> f64 {
    assert!(n >= 1);
    let mut tot = 0.0;
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            tot += (d as f64).powf(s);
            let e = n / d;
            if e != d {
                tot += (e as f64).powf(s);
            }
        }
        d += 1;
    }
    tot
}

fn q_of(z: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI) * z).exp()
}

/// Eta as the truncated product q^{1/24} prod (1 - q^n).
pub fn eta_product(z: Complex64) -> Complex64 {
    let q = q_of(z);
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qn = q;
    let mut n = 0;
    while qn.norm() > 1e-18 && n < 1_000_000 {
        prod *= 1.0 - qn;
        qn *= q;
        n += 1;
    }
    (Complex64::new(0.0, 2.0 * PI / 24.0) * z).exp() * prod
}

/// Eta by Euler's pentagonal series q^{1/24} sum (-1)^n q^{n(3n-1)/2}.
pub fn eta_pentagonal(z: Complex64) -> Complex64 {
    let mut s = Complex64::new(1.0, 0.0);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    for n in 1i64.. {
        let sg = if n % 2 == 0 { 1.0 } else { -1.0 };
        let e1 = (n * (3 * n - 1) / 2) as f64;
        let e2 = (n * (3 * n + 1) / 2) as f64;
        let t = (two_pi_i * z * e1).exp() + (two_pi_i * z * e2).exp();
        s += sg * t;
        if (two_pi_i * z * e1).exp().norm() < 1e-20 {
            break;
        }
    }
    (Complex64::new(0.0, 2.0 * PI / 24.0) * z).exp() * s
}

/// Standard PSL(2,Z) reduction on complex numbers, returning the reduced point and the
/// integer matrix (a, b, c, d) with reduced = (az+b)/(cz+d).
fn reduce_complex(z: Complex64) -> (Complex64, [i64; 4]) {
    let mut w = z;
    let mut m = [1i64, 0, 0, 1];
    for _ in 0..10_000 {
        let n = (w.re + 0.5).floor();
        if n != 0.0 {
            w -= n;
            let k = n as i64;
            m = [m[0] - k * m[2], m[1] - k * m[3], m[2], m[3]];
        }
        if w.norm_sqr() < 1.0 {
            w = -1.0 / w;
            m = [-m[2], -m[3], m[0], m[1]];
        } else {
            break;
        }
    }
    (w, m)
}

/// Dedekind eta. For Im z >= 0.5 the q-product is used directly; otherwise z is reduced
/// and the value is transported back with the exact eta multiplier (Dedekind sums).
pub fn dedekind_eta(z: Complex64) -> Complex64 {
    if z.im >= 0.5 {
        return eta_product(z);
    }
    let (w, [a, b, c, d]) = reduce_complex(z);
    let ew = eta_product(w);
    // w = gamma z, eta(w) = eps * sqrt(-i(cz+d)) * eta(z)
    let (a, b, c, d) = if c < 0 || (c == 0 && a < 0) { (-a, -b, -c, -d) } else { (a, b, c, d) };
    let (eps, factor) = if c == 0 {
        (Complex64::from_polar(1.0, PI * b as f64 / 12.0), Complex64::new(1.0, 0.0))
    } else {
        let phase = PI * ((a + d) as f64 / (12.0 * c as f64) - dedekind_sum(d, c));
        let cz = Complex64::new(c as f64, 0.0) * z + d as f64;
        (Complex64::from_polar(1.0, phase), (Complex64::new(0.0, -1.0) * cz).sqrt())
    };
    ew / (eps * factor)
}

/// log(4 y |eta(z)|^4), the PSL(2,Z)-invariant combination, computed after reduction.
pub fn log_4y_eta4(p: &UTBPoint) -> f64 {
    let (w, _) = reduce_complex(Complex64::new(p.x, p.y));
    let q = q_of(w);
    let mut s = 0.0;
    let mut qn = q;
    while qn.norm() > 1e-18 {
        s += (1.0 - qn).norm().ln();
        qn *= q;
    }
    (4.0 * w.im).ln() - PI * w.im / 3.0 + 4.0 * s
}

/// |eta(z)| via the invariance of y |eta|^4.
pub fn eta_abs(p: &UTBPoint) -> f64 {
    ((log_4y_eta4(p) - (4.0 * p.y).ln()) / 4.0).exp()
}
