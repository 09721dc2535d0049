//! Automorphic test functions on Γ\G: smooth compact bumps defined on a fundamental
//! domain and extended by reduction, |f|²y^k for a cusp form, and linear combinations.
//! Registration spot-checks automorphy and the declared cusp decay.

use crate::algebra::{mobius_act, GroupElement, IntGroupElement, UTBPoint};
use crate::error::{Result, ShearError};
use crate::group::{GroupSpec, Reducer};
use crate::modular::{eval_psi_f, QExpansion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Where a test function lives, in fundamental-domain coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    /// Vanishes outside x0 < x < x1, y0 < y < y1 (after reduction).
    Box { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Not compactly supported; decays into the cusp at the declared rate.
    CuspDecaying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    /// Infinitely differentiable, not analytic (bump functions).
    Smooth,
    /// Real analytic.
    Analytic,
}

/// Shape of a smooth bump φ((x−cx)/rx)·φ((y−cy)/ry)·(1 + β cos θ), φ(u) = exp(1 − 1/(1−u²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    /// Angular modulation; 0 gives a right-K-invariant function.
    pub beta: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        BumpParams { cx: 0.0, cy: 2.0, rx: 0.3, ry: 0.7, beta: 0.0 }
    }
}

type Evaluator = Arc<dyn Fn(&UTBPoint) -> Result<f64> + Send + Sync>;

/// A function on the unit tangent bundle, automorphic under `spec`.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub spec: GroupSpec,
    /// |Ψ(n_x a_y k)| <= decay_c · y^(−decay_alpha) for y > decay_c.
    pub decay_c: f64,
    pub decay_alpha: f64,
    pub support: Support,
    pub smoothness: Smoothness,
    pub k_invariant: bool,
    /// Upper bound for |Ψ|.
    pub peak: f64,
    eval: Evaluator,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("group", &self.spec.name)
            .field("decay_c", &self.decay_c)
            .field("decay_alpha", &self.decay_alpha)
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .field("k_invariant", &self.k_invariant)
            .finish()
    }
}

/// Smooth profile supported on (−1, 1) with value 1 at 0.
pub fn bump_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

fn translation_omega(spec: &GroupSpec) -> Result<f64> {
    match spec.reducer() {
        Some(Reducer::TranslationInversion { omega }) => Ok(omega as f64),
        None => Err(ShearError::InvalidGroup(format!("no reduction algorithm for group '{}'", spec.name))),
    }
}

impl TestFunction {
    /// Evaluates Ψ at an arbitrary point.
    pub fn eval(&self, p: &UTBPoint) -> Result<f64> {
        (self.eval)(p)
    }

    /// Builds a test function from an evaluator without any checks.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        name: &str,
        spec: GroupSpec,
        decay_c: f64,
        decay_alpha: f64,
        support: Support,
        smoothness: Smoothness,
        k_invariant: bool,
        peak: f64,
        eval: impl Fn(&UTBPoint) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        TestFunction { name: name.into(), spec, decay_c, decay_alpha, support, smoothness, k_invariant, peak, eval: Arc::new(eval) }
    }

    /// Extends a function given on the fundamental domain of `spec` by reduction.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fundamental_domain(
        name: &str,
        spec: GroupSpec,
        decay_c: f64,
        decay_alpha: f64,
        support: Support,
        smoothness: Smoothness,
        k_invariant: bool,
        peak: f64,
        inner: impl Fn(&UTBPoint) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        translation_omega(&spec)?;
        let s2 = spec.clone();
        Ok(Self::from_parts(name, spec, decay_c, decay_alpha, support, smoothness, k_invariant, peak, move |p| {
            let (w, _) = s2.reduce(p)?;
            Ok(inner(&w))
        }))
    }

    /// Smooth compact bump; the support box must lie in the interior of the fundamental domain.
    pub fn bump(spec: &GroupSpec, b: BumpParams) -> Result<Self> {
        let omega = translation_omega(spec)?;
        let (x0, x1, y0, y1) = (b.cx - b.rx, b.cx + b.rx, b.cy - b.ry, b.cy + b.ry);
        if b.rx <= 0.0 || b.ry <= 0.0 || y0 <= 0.0 {
            return Err(ShearError::InvalidArgument("bump radii must be positive with y0 > 0".into()));
        }
        let min_x = x0.abs().min(x1.abs());
        let near_x = if x0 < 0.0 && x1 > 0.0 { 0.0 } else { min_x };
        if x0 <= -omega / 2.0 || x1 >= omega / 2.0 || near_x * near_x + y0 * y0 <= 1.0 {
            return Err(ShearError::InvalidArgument("bump support must lie inside the fundamental domain".into()));
        }
        Self::from_fundamental_domain(
            "bump",
            spec.clone(),
            y1,
            2.0,
            Support::Box { x0, x1, y0, y1 },
            Smoothness::Smooth,
            b.beta == 0.0,
            1.0 + b.beta.abs(),
            move |w| bump_profile((w.x - b.cx) / b.rx) * bump_profile((w.y - b.cy) / b.ry) * (1.0 + b.beta * w.theta.cos()),
        )
    }

    /// Ψ_f = |f|² y^k, automorphic under PSL(2,Z) and hence under any subgroup.
    pub fn psi_f(spec: &GroupSpec, f: QExpansion) -> Self {
        let k = f.weight as f64;
        // |f(z)|² y^k <= y^k e^{-4π y}·(1.01)² for y >= 1 and a normalized cusp form with a(1) = 1
        let peak = (k / (4.0 * std::f64::consts::PI)).powf(k) * (-k).exp() * 1.1;
        Self::from_parts("psi_f", spec.clone(), 4.0, 6.0, Support::CuspDecaying, Smoothness::Analytic, true, peak, move |p| {
            eval_psi_f(&f, p)
        })
    }

    pub fn zero(spec: &GroupSpec) -> Self {
        Self::from_parts("zero", spec.clone(), 1.0, 1.0, Support::Box { x0: 0.0, x1: 0.0, y0: 1.0, y1: 1.0 }, Smoothness::Analytic, true, 0.0, |_| Ok(0.0))
    }

    /// The constant function; it does not decay, so ray integrals of it are rejected.
    pub fn constant(spec: &GroupSpec, c: f64) -> Self {
        Self::from_parts("constant", spec.clone(), 1.0, 0.0, Support::CuspDecaying, Smoothness::Analytic, true, c.abs(), move |_| Ok(c))
    }

    /// a·Ψ1 + b·Ψ2 for test functions on the same group.
    pub fn combine(a: f64, p1: &TestFunction, b: f64, p2: &TestFunction) -> Result<Self> {
        if p1.spec != p2.spec {
            return Err(ShearError::InvalidArgument("test functions live on different groups".into()));
        }
        let support = match (p1.support, p2.support) {
            (Support::Box { x0, x1, y0, y1 }, Support::Box { x0: u0, x1: u1, y0: v0, y1: v1 }) => {
                Support::Box { x0: x0.min(u0), x1: x1.max(u1), y0: y0.min(v0), y1: y1.max(v1) }
            }
            _ => Support::CuspDecaying,
        };
        let smoothness = if p1.smoothness == Smoothness::Analytic && p2.smoothness == Smoothness::Analytic {
            Smoothness::Analytic
        } else {
            Smoothness::Smooth
        };
        let alpha = p1.decay_alpha.min(p2.decay_alpha);
        let c = (a.abs() + b.abs()).max(1.0) * p1.decay_c.max(p2.decay_c);
        let (e1, e2) = (p1.eval.clone(), p2.eval.clone());
        Ok(Self::from_parts(
            &format!("{a}*{}+{b}*{}", p1.name, p2.name),
            p1.spec.clone(),
            c,
            alpha,
            support,
            smoothness,
            p1.k_invariant && p2.k_invariant,
            a.abs() * p1.peak + b.abs() * p2.peak,
            move |p| Ok(a * e1(p)? + b * e2(p)?),
        ))
    }

    /// Height above which the cusp tail of a ray integral is below `tol`/2.
    pub fn upper_cutoff(&self, tol: f64) -> Result<f64> {
        match self.support {
            Support::Box { y1, .. } => Ok(y1),
            Support::CuspDecaying => {
                if self.decay_alpha <= 0.0 {
                    return Err(ShearError::InvalidArgument(format!("test function '{}' does not decay in the cusp", self.name)));
                }
                let u = (2.0 * self.decay_c / (self.decay_alpha * tol)).powf(1.0 / self.decay_alpha);
                Ok(u.max(self.decay_c))
            }
        }
    }

    /// Largest |Ψ(γp) − Ψ(p)| over `samples` random group words γ and points p.
    pub fn automorphy_violation(&self, samples: usize, seed: u64) -> Result<f64> {
        let omega = translation_omega(&self.spec)?;
        let gens = self.spec.symmetric_generators();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let len = rng.gen_range(1..=6);
            let mut g = IntGroupElement::identity();
            for _ in 0..len {
                g = g.mul(&gens[rng.gen_range(0..gens.len())]);
            }
            let p = UTBPoint::new(
                rng.gen_range(-omega / 2.0..omega / 2.0),
                (rng.gen_range(0.2f64.ln()..4.0f64.ln())).exp(),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            );
            let gp = mobius_act(&GroupElement::from_int(&g), &p)?;
            worst = worst.max((self.eval(&gp)? - self.eval(&p)?).abs());
        }
        Ok(worst)
    }

    /// Largest ratio |Ψ(x+iy)| / (C y^(−α)) over sampled y in (C, 100C]; at most 1 when honored.
    pub fn decay_ratio(&self, samples: usize, seed: u64) -> Result<f64> {
        let omega = self.spec.omega();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let y = self.decay_c * (rng.gen_range(0.0..100f64.ln())).exp();
            let p = UTBPoint::new(rng.gen_range(-omega / 2.0..omega / 2.0), y, rng.gen_range(-3.0..3.0));
            let bound = self.decay_c * y.powf(-self.decay_alpha);
            worst = worst.max(self.eval(&p)?.abs() / bound);
        }
        Ok(worst)
    }

    /// Spot-checks automorphy (10³ samples, threshold 1e−7) and the declared decay.
    pub fn register(self, seed: u64) -> Result<Self> {
        let v = self.automorphy_violation(1000, seed)?;
        if v > 1e-7 {
            return Err(ShearError::NotAutomorphic(v));
        }
        let d = self.decay_ratio(200, seed ^ 0x5eed)?;
        if d > 1.0 {
            return Err(ShearError::InvalidArgument(format!("declared cusp decay violated by a factor {d:.3}")));
        }
        Ok(self)
    }
}
