//! PSL(2,R) arithmetic, the unit tangent bundle action, Iwasawa coordinates,
//! shear elements and the spin cover acting on binary quadratic forms.

use crate::error::{Result, ShearError};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const DET_TOL: f64 = 1e-12;

/// Normalizes an angle into the half-open interval [-pi, pi).
pub fn wrap_angle(t: f64) -> f64 {
    let mut r = (t + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r -= 2.0 * PI;
    }
    r
}

/// An element of PSL(2,R), stored with the canonical sign (c > 0, or c = 0 and a > 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GroupElement {
    /// Builds an element from entries, canonicalizing the sign and renormalizing the
    /// determinant when it drifts by more than 1e-12.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        let mut g = GroupElement { a, b, c, d };
        let det = g.det();
        if (det - 1.0).abs() > DET_TOL && det > 0.0 {
            let s = det.sqrt();
            g = GroupElement { a: a / s, b: b / s, c: c / s, d: d / s };
        }
        g.canonical()
    }

    fn canonical(self) -> Self {
        if self.c < 0.0 || (self.c == 0.0 && self.a < 0.0) {
            GroupElement { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
        } else {
            self
        }
    }

    pub fn identity() -> Self {
        GroupElement { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        GroupElement::new(self.d, -self.b, -self.c, self.a)
    }

    /// Unipotent n_x = (1 x; 0 1).
    pub fn n(x: f64) -> Self {
        GroupElement { a: 1.0, b: x, c: 0.0, d: 1.0 }
    }

    /// Diagonal a_y = (sqrt y, 0; 0, 1/sqrt y).
    pub fn a(y: f64) -> Self {
        let s = y.sqrt();
        GroupElement { a: s, b: 0.0, c: 0.0, d: 1.0 / s }
    }

    /// Rotation k_theta = (cos, sin; -sin, cos). It turns the vertical tangent at i by 2 theta.
    pub fn k(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        GroupElement::new(c, s, -s, c)
    }

    /// Max-entry distance between two elements modulo the global sign.
    pub fn dist_mod_sign(&self, o: &GroupElement) -> f64 {
        let p = (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs());
        let m = (self.a + o.a)
            .abs()
            .max((self.b + o.b).abs())
            .max((self.c + o.c).abs())
            .max((self.d + o.d).abs());
        p.min(m)
    }

    pub fn from_int(g: &IntGroupElement) -> Self {
        GroupElement::new(g.a as f64, g.b as f64, g.c as f64, g.d as f64)
    }
}

/// Matrix product g·h with the sign canonicalized.
pub fn compose(g: &GroupElement, h: &GroupElement) -> GroupElement {
    GroupElement::new(
        g.a * h.a + g.b * h.c,
        g.a * h.b + g.b * h.d,
        g.c * h.a + g.d * h.c,
        g.c * h.b + g.d * h.d,
    )
}

/// The shear element a_{1/sqrt(T^2+1)} n_T.
pub fn shear_element(t: f64) -> GroupElement {
    compose(&GroupElement::a(1.0 / (t * t + 1.0).sqrt()), &GroupElement::n(t))
}

/// Integer element of PSL(2,Z) with the same sign convention as [`GroupElement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntGroupElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl IntGroupElement {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a as i128 * d as i128 - b as i128 * c as i128 != 1 {
            return Err(ShearError::InvalidArgument(format!(
                "integer matrix ({a} {b}; {c} {d}) does not have determinant 1"
            )));
        }
        Ok(IntGroupElement { a, b, c, d }.canonical())
    }

    pub const fn identity() -> Self {
        IntGroupElement { a: 1, b: 0, c: 0, d: 1 }
    }

    pub fn t_power(k: i64) -> Self {
        IntGroupElement { a: 1, b: k, c: 0, d: 1 }
    }

    pub fn s() -> Self {
        IntGroupElement { a: 0, b: -1, c: 1, d: 0 }
    }

    fn canonical(self) -> Self {
        if self.c < 0 || (self.c == 0 && self.a < 0) {
            IntGroupElement { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
        } else {
            self
        }
    }

    /// Product with overflow detection; `None` when an entry leaves the i64 range.
    pub fn checked_mul(&self, h: &IntGroupElement) -> Option<IntGroupElement> {
        let e = |x: i64, y: i64, z: i64, w: i64| -> Option<i64> {
            x.checked_mul(y)?.checked_add(z.checked_mul(w)?)
        };
        Some(
            IntGroupElement {
                a: e(self.a, h.a, self.b, h.c)?,
                b: e(self.a, h.b, self.b, h.d)?,
                c: e(self.c, h.a, self.d, h.c)?,
                d: e(self.c, h.b, self.d, h.d)?,
            }
            .canonical(),
        )
    }

    pub fn mul(&self, h: &IntGroupElement) -> IntGroupElement {
        self.checked_mul(h).expect("integer matrix product overflow")
    }

    pub fn inverse(&self) -> IntGroupElement {
        IntGroupElement { a: self.d, b: -self.b, c: -self.c, d: self.a }.canonical()
    }

    pub fn is_identity(&self) -> bool {
        *self == IntGroupElement::identity()
    }

    pub fn frobenius_sq(&self) -> i128 {
        [self.a, self.b, self.c, self.d].iter().map(|&x| x as i128 * x as i128).sum()
    }
}

/// A point of the unit tangent bundle: base point x + iy and the tangent angle theta,
/// measured counterclockwise from the upward vertical, in [-pi, pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UTBPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl UTBPoint {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        assert!(y > 0.0, "UTBPoint requires y > 0, got {y}");
        UTBPoint { x, y, theta: wrap_angle(theta) }
    }

    /// Base point with the upward tangent vector.
    pub fn up(x: f64, y: f64) -> Self {
        UTBPoint::new(x, y, 0.0)
    }
}

/// Action (z, zeta) -> ((az+b)/(cz+d), zeta/(cz+d)^2).
pub fn mobius_act(g: &GroupElement, p: &UTBPoint) -> Result<UTBPoint> {
    let (cr, ci) = (g.c * p.x + g.d, g.c * p.y);
    let m2 = cr * cr + ci * ci;
    if m2.sqrt() < 1e-300 {
        return Err(ShearError::MobiusOverflow(m2.sqrt()));
    }
    let (nr, ni) = (g.a * p.x + g.b, g.a * p.y);
    let x = (nr * cr + ni * ci) / m2;
    let y = p.y / m2;
    let arg = ci.atan2(cr);
    Ok(UTBPoint { x, y, theta: wrap_angle(p.theta - 2.0 * arg) })
}

/// Iwasawa coordinates g = n_x a_y k_theta; theta is the rotation parameter, taken mod pi
/// in [-pi/2, pi/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwasawaCoords {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl IwasawaCoords {
    pub fn recompose(&self) -> GroupElement {
        compose(
            &compose(&GroupElement::n(self.x), &GroupElement::a(self.y)),
            &GroupElement::k(self.theta),
        )
    }
}

pub fn iwasawa_decompose(g: &GroupElement) -> IwasawaCoords {
    let n2 = g.c * g.c + g.d * g.d;
    let y = 1.0 / n2;
    let x = (g.a * g.c + g.b * g.d) / n2;
    let mut theta = (-g.c).atan2(g.d);
    theta = (theta + PI / 2.0).rem_euclid(PI) - PI / 2.0;
    IwasawaCoords { x, y, theta }
}

/// Hyperbolic distance between base points.
pub fn hyperbolic_distance(z1: &UTBPoint, z2: &UTBPoint) -> f64 {
    let dx = z1.x - z2.x;
    let dy = z1.y - z2.y;
    let r = (dx * dx + dy * dy).sqrt() / (2.0 * (z1.y * z2.y).sqrt());
    2.0 * r.asinh()
}

/// Coefficients (p, q, r) of the binary form p u^2 + q uv + r v^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormVector {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl FormVector {
    pub fn new(p: f64, q: f64, r: f64) -> Self {
        FormVector { p, q, r }
    }

    /// The canonical quadratic form Q = q^2 - 4pr.
    pub fn q_value(&self) -> f64 {
        self.q * self.q - 4.0 * self.p * self.r
    }
}

/// Right action f·g(u, v) = f(au + bv, cu + dv) of PSL(2,R) on binary forms.
pub fn spin_cover(g: &GroupElement, v: &FormVector) -> FormVector {
    let GroupElement { a, b, c, d } = *g;
    FormVector {
        p: v.p * a * a + v.q * a * c + v.r * c * c,
        q: 2.0 * v.p * a * b + v.q * (a * d + b * c) + 2.0 * v.r * c * d,
        r: v.p * b * b + v.q * b * d + v.r * d * d,
    }
}

/// Integer binary form, used by exact orbit counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntFormVector {
    pub p: i64,
    pub q: i64,
    pub r: i64,
}

impl IntFormVector {
    pub fn new(p: i64, q: i64, r: i64) -> Self {
        IntFormVector { p, q, r }
    }

    pub fn q_value(&self) -> i128 {
        let (p, q, r) = (self.p as i128, self.q as i128, self.r as i128);
        q * q - 4 * p * r
    }

    pub fn sup_norm(&self) -> f64 {
        self.p.unsigned_abs().max(self.q.unsigned_abs()).max(self.r.unsigned_abs()) as f64
    }

    pub fn euclidean_norm(&self) -> f64 {
        let (p, q, r) = (self.p as f64, self.q as f64, self.r as f64);
        (p * p + q * q + r * r).sqrt()
    }

    /// Exact right action; `None` on i64 overflow.
    pub fn act(&self, g: &IntGroupElement) -> Option<IntFormVector> {
        let (a, b, c, d) = (g.a as i128, g.b as i128, g.c as i128, g.d as i128);
        let (p, q, r) = (self.p as i128, self.q as i128, self.r as i128);
        let np = p * a * a + q * a * c + r * c * c;
        let nq = 2 * p * a * b + q * (a * d + b * c) + 2 * r * c * d;
        let nr = p * b * b + q * b * d + r * d * d;
        Some(IntFormVector {
            p: i64::try_from(np).ok()?,
            q: i64::try_from(nq).ok()?,
            r: i64::try_from(nr).ok()?,
        })
    }
}

/// A real symmetric ternary quadratic form with a declared signature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TernaryForm {
    pub m: [[f64; 3]; 3],
    /// (number of positive, number of negative) eigenvalues.
    pub signature: (u8, u8),
}

impl TernaryForm {
    pub fn new(m: [[f64; 3]; 3], signature: (u8, u8)) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                if (m[i][j] - m[j][i]).abs() > 1e-12 * (1.0 + m[i][j].abs()) {
                    return Err(ShearError::InvalidArgument("form matrix is not symmetric".into()));
                }
            }
        }
        let f = TernaryForm { m, signature };
        if f.eigen_signature() != signature {
            return Err(ShearError::InvalidArgument(format!(
                "declared signature {:?} does not match eigenvalue signs {:?}",
                signature,
                f.eigen_signature()
            )));
        }
        Ok(f)
    }

    /// Q(p,q,r) = q^2 - 4pr in matrix form.
    pub fn canonical() -> Self {
        TernaryForm { m: [[0.0, 0.0, -2.0], [0.0, 1.0, 0.0], [-2.0, 0.0, 0.0]], signature: (2, 1) }
    }

    pub fn eval(&self, v: &FormVector) -> f64 {
        let x = [v.p, v.q, v.r];
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += x[i] * self.m[i][j] * x[j];
            }
        }
        s
    }

    /// Counts eigenvalue signs of the symmetric matrix by Descartes' rule applied to the
    /// characteristic polynomial, which is exact for real-rooted polynomials.
    pub fn eigen_signature(&self) -> (u8, u8) {
        let m = &self.m;
        let tr = m[0][0] + m[1][1] + m[2][2];
        let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
            + m[1][1] * m[2][2]
            - m[1][2] * m[2][1];
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let scale = m.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
        let clean = |v: f64, p: i32| if v.abs() < 1e-12 * scale.powi(p) { 0.0 } else { v };
        // det(lambda I - M) = lambda^3 - tr lambda^2 + minors lambda - det
        let pos = [1.0, -clean(tr, 1), clean(minors, 2), -clean(det, 3)];
        let neg = [-1.0, -clean(tr, 1), -clean(minors, 2), -clean(det, 3)];
        let changes = |c: &[f64; 4]| {
            let nz: Vec<f64> = c.iter().copied().filter(|v| *v != 0.0).collect();
            nz.windows(2).filter(|w| w[0] * w[1] < 0.0).count() as u8
        };
        (changes(&pos), changes(&neg))
    }
}
