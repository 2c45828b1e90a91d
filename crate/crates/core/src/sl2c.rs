//! SL(2,ℂ) acting on the upper half-space model of ℍ³.
//!
//! A point is `(x, y, t)` with `t > 0`, i.e. the quaternion `z + t·j` with
//! `z = x + iy`. Distances use `d = 2·asinh(|p − q| / (2·√(t_p t_q)))`, which
//! equals `arccosh(1 + |p − q|² / (2 t_p t_q))` but stays accurate for nearby
//! points.

use std::fmt;
use std::ops::{Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const UNIMODULAR_TOL: f64 = 1e-9;
pub const PARABOLIC_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("matrix is not unimodular: |det - 1| = {0:e}")]
    NotUnimodular(f64),
    #[error("degenerate matrix: det = {0:e}")]
    Degenerate(f64),
    #[error("point height must be positive, got {0}")]
    NonPositiveHeight(f64),
    #[error("empty point list")]
    EmptyCurve,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A 2×2 complex matrix `(a, b; c, d)`, normally of determinant one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { a: ONE, b: ZERO, c: ZERO, d: ONE };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mobius { a, b, c, d }
    }

    /// Checked constructor enforcing `|det − 1| ≤ 1e-9`.
    pub fn unimodular(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, GeometryError> {
        let m = Mobius { a, b, c, d };
        m.check_unimodular()?;
        Ok(m)
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mobius::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn diag(l: Complex64) -> Self {
        Mobius::new(l, ZERO, ZERO, l.inv())
    }

    /// Rescales by `det^{-1/2}`.
    pub fn normalized(self) -> Result<Self, GeometryError> {
        let det = self.det();
        if det.norm() < 1e-300 {
            return Err(GeometryError::Degenerate(det.norm()));
        }
        let k = det.sqrt().inv();
        Ok(Mobius::new(self.a * k, self.b * k, self.c * k, self.d * k))
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn check_unimodular(&self) -> Result<(), GeometryError> {
        let det = self.det();
        if det.norm() < 1e-12 {
            return Err(GeometryError::Degenerate(det.norm()));
        }
        // relative to the size of the terms that cancel in ad - bc
        let scale = (self.a.norm() * self.d.norm() + self.b.norm() * self.c.norm()).max(1.0);
        let err = (det - ONE).norm();
        if err > UNIMODULAR_TOL * scale {
            return Err(GeometryError::NotUnimodular(err));
        }
        Ok(())
    }

    /// Inverse of a unimodular matrix (adjugate).
    pub fn inverse(&self) -> Self {
        Mobius::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Mobius::IDENTITY;
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    /// `u · self · u⁻¹`
    pub fn conjugate_by(&self, u: &Mobius) -> Self {
        *u * *self * u.inverse()
    }

    pub fn conj_transpose(&self) -> Self {
        Mobius::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    /// Operator 2-norm.
    pub fn operator_norm(&self) -> f64 {
        // Largest singular value from the 2×2 Gram matrix.
        let s = self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr();
        let det = self.det().norm();
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        ((s + disc) / 2.0).sqrt()
    }

    pub fn sub(&self, other: &Mobius) -> Mobius {
        Mobius::new(self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d)
    }

    /// Operator-norm distance to the nearer of `±I`.
    pub fn distance_to_pm_identity(&self) -> f64 {
        let p = self.sub(&Mobius::IDENTITY).operator_norm();
        let m = self.sub(&(-Mobius::IDENTITY)).operator_norm();
        p.min(m)
    }

    pub fn max_abs_diff(&self, other: &Mobius) -> f64 {
        let d = self.sub(other);
        d.a.norm().max(d.b.norm()).max(d.c.norm()).max(d.d.norm())
    }

    /// Entries as `[[re, im]; 4]` in row-major order.
    pub fn to_pairs(&self) -> [[f64; 2]; 4] {
        [self.a, self.b, self.c, self.d].map(|z| [z.re, z.im])
    }

    pub fn from_pairs(p: [[f64; 2]; 4]) -> Self {
        let [a, b, c, d] = p.map(|[re, im]| Complex64::new(re, im));
        Mobius::new(a, b, c, d)
    }

    /// Image of a boundary point `z ∈ ℂ` (returns `None` for `∞`).
    pub fn act_boundary(&self, z: Complex64) -> Option<Complex64> {
        let den = self.c * z + self.d;
        if den.norm() == 0.0 {
            None
        } else {
            Some((self.a * z + self.b) / den)
        }
    }

    /// Fixed points on `ℂ ∪ {∞}`; `None` entries denote `∞`.
    pub fn fixed_points(&self) -> [Option<Complex64>; 2] {
        if self.c.norm() < 1e-14 {
            if (self.a - self.d).norm() < 1e-14 {
                return [None, None];
            }
            return [Some(self.b / (self.d - self.a)), None];
        }
        let disc = (self.trace() * self.trace() - 4.0).sqrt();
        let amd = self.a - self.d;
        [Some((amd + disc) / (2.0 * self.c)), Some((amd - disc) / (2.0 * self.c))]
    }
}

impl Mul for Mobius {
    type Output = Mobius;

    fn mul(self, r: Mobius) -> Mobius {
        Mobius::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

impl Neg for Mobius {
    type Output = Mobius;

    fn neg(self) -> Mobius {
        Mobius::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl fmt::Display for Mobius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for Mobius {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mobius {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Mobius::from_pairs(<[[f64; 2]; 4]>::deserialize(d)?))
    }
}

/// A point of the upper half-space, `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H3Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl H3Point {
    pub const ORIGIN: H3Point = H3Point { x: 0.0, y: 0.0, t: 1.0 };

    pub fn new(x: f64, y: f64, t: f64) -> Result<Self, GeometryError> {
        if !(t > 0.0) {
            return Err(GeometryError::NonPositiveHeight(t));
        }
        Ok(H3Point { x, y, t })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    fn euclid_dist(&self, q: &H3Point) -> f64 {
        let (dx, dy, dt) = (self.x - q.x, self.y - q.y, self.t - q.t);
        (dx * dx + dy * dy + dt * dt).sqrt()
    }
}

/// Action of `m` on upper half-space: `(a p + b)(c p + d)⁻¹` in quaternions.
pub fn act(m: &Mobius, p: &H3Point) -> Result<H3Point, GeometryError> {
    let det = m.det().norm();
    if det < 1e-12 {
        return Err(GeometryError::Degenerate(det));
    }
    if !(p.t > 0.0) {
        return Err(GeometryError::NonPositiveHeight(p.t));
    }
    Ok(act_unchecked(m, p))
}

/// [`act`] without validation; `m` must be unimodular.
#[inline]
pub fn act_unchecked(m: &Mobius, p: &H3Point) -> H3Point {
    let z = p.z();
    let t2 = p.t * p.t;
    let cz_d = m.c * z + m.d;
    let den = cz_d.norm_sqr() + m.c.norm_sqr() * t2;
    let num = (m.a * z + m.b) * cz_d.conj() + m.a * m.c.conj() * t2;
    H3Point { x: num.re / den, y: num.im / den, t: p.t / den }
}

pub fn h3_distance(p: &H3Point, q: &H3Point) -> Result<f64, GeometryError> {
    for pt in [p, q] {
        if !(pt.t > 0.0) {
            return Err(GeometryError::NonPositiveHeight(pt.t));
        }
    }
    Ok(dist(p, q))
}

/// [`h3_distance`] without validation.
#[inline]
pub fn dist(p: &H3Point, q: &H3Point) -> f64 {
    2.0 * (p.euclid_dist(q) / (2.0 * (p.t * q.t).sqrt())).asinh()
}

pub fn classify(m: &Mobius) -> Classification {
    let tr = m.trace();
    if m.max_abs_diff(&Mobius::IDENTITY) < PARABOLIC_TOL || m.max_abs_diff(&-Mobius::IDENTITY) < PARABOLIC_TOL {
        return Classification::Identity;
    }
    if tr.im.abs() < PARABOLIC_TOL {
        let r = tr.re;
        if (r.abs() - 2.0).abs() < PARABOLIC_TOL {
            return Classification::Parabolic;
        }
        if r.abs() < 2.0 {
            return Classification::Elliptic;
        }
    }
    Classification::Loxodromic
}

/// Eigenvalue of largest modulus.
pub fn dominant_eigenvalue(m: &Mobius) -> Complex64 {
    let tr = m.trace();
    let disc = (tr * tr - 4.0).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    if l1.norm() >= l2.norm() {
        l1
    } else {
        l2
    }
}

/// `inf_x d(x, m x)`: `2 log|λ|` for loxodromic `m`, else 0.
pub fn translation_length(m: &Mobius) -> f64 {
    match classify(m) {
        Classification::Loxodromic => {
            let tr = m.trace();
            if tr.im == 0.0 {
                2.0 * (tr.re.abs() / 2.0).acosh()
            } else {
                (2.0 * dominant_eigenvalue(m).norm().ln()).max(0.0)
            }
        }
        _ => 0.0,
    }
}

/// `min_{x ∈ curve} d(x, m x) − ℓ(m)`.
pub fn axis_defect(curve: &[H3Point], m: &Mobius) -> Result<f64, GeometryError> {
    if curve.is_empty() {
        return Err(GeometryError::EmptyCurve);
    }
    let mut best = f64::INFINITY;
    for p in curve {
        let q = act(m, p)?;
        best = best.min(dist(p, &q));
    }
    Ok(best - translation_length(m))
}

/// Unimodular matrix sending `0 ↦ p₀` and `∞ ↦ p₁` on the boundary sphere,
/// so that it carries the vertical axis onto the geodesic with those ends.
pub fn axis_frame(p0: Complex64, p1: Option<Complex64>) -> Mobius {
    match p1 {
        None => Mobius::new(ONE, p0, ZERO, ONE),
        Some(p1) => {
            // z ↦ (p1 z + p0) / (z + 1), normalized.
            let m = Mobius::new(p1, p0, ONE, ONE);
            m.normalized().unwrap_or(Mobius::IDENTITY)
        }
    }
}

/// Isometry `(x, y, t) ↦ ((x − x₀)/t₀, (y − y₀)/t₀, t/t₀)` taking `p` to the origin.
#[inline]
pub fn recenter(p: &H3Point, q: &H3Point) -> H3Point {
    H3Point { x: (q.x - p.x) / p.t, y: (q.y - p.y) / p.t, t: q.t / p.t }
}

/// Inverse of [`recenter`].
#[inline]
pub fn uncenter(p: &H3Point, q: &H3Point) -> H3Point {
    H3Point { x: q.x * p.t + p.x, y: q.y * p.t + p.y, t: q.t * p.t }
}

/// Riemannian logarithm at the origin `(0,0,1)`; tangent vectors are expressed
/// in the orthonormal frame `(∂x, ∂y, ∂t)`.
#[inline]
pub fn log_origin(q: &H3Point) -> [f64; 3] {
    let r2 = q.x * q.x + q.y * q.y + q.t * q.t;
    let v = [q.x / q.t, q.y / q.t, (r2 - 1.0) / (2.0 * q.t)];
    let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if s == 0.0 {
        return [0.0; 3];
    }
    let d = s.asinh();
    [v[0] * d / s, v[1] * d / s, v[2] * d / s]
}

/// Riemannian exponential at the origin.
#[inline]
pub fn exp_origin(v: &[f64; 3]) -> H3Point {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        return H3Point::ORIGIN;
    }
    let (s, c) = (n.sinh(), n.cosh());
    let u = [v[0] / n * s, v[1] / n * s, v[2] / n * s];
    // hyperboloid (X0, X1, X2, X3) = (cosh, u) → t = 1 / (X0 − X3)
    let t = 1.0 / (c - u[2]);
    H3Point { x: u[0] * t, y: u[1] * t, t }
}

/// `log_p(q)` in the frame of `p` scaled to the origin.
#[inline]
pub fn log_at(p: &H3Point, q: &H3Point) -> [f64; 3] {
    log_origin(&recenter(p, q))
}

#[inline]
pub fn exp_at(p: &H3Point, v: &[f64; 3]) -> H3Point {
    uncenter(p, &exp_origin(v))
}

/// Point at fraction `s` along the geodesic from `p` to `q`.
pub fn geodesic_point(p: &H3Point, q: &H3Point, s: f64) -> H3Point {
    let v = log_at(p, q);
    exp_at(p, &[v[0] * s, v[1] * s, v[2] * s])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_diagonal_action() {
        let p = H3Point::new(0.3, -0.7, 2.0).unwrap();
        assert_eq!(act(&Mobius::IDENTITY, &p).unwrap(), p);
        let m = Mobius::real(3.0, 0.0, 0.0, 1.0 / 3.0);
        let q = act(&m, &H3Point::ORIGIN).unwrap();
        assert!((q.t - 9.0).abs() < 1e-12 && q.x.abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_bad_points() {
        let m = Mobius::real(1.0, 2.0, 2.0, 4.0);
        assert!(matches!(act(&m, &H3Point::ORIGIN), Err(GeometryError::Degenerate(_))));
        assert!(H3Point::new(0.0, 0.0, 0.0).is_err());
        let bad = H3Point { x: 0.0, y: 0.0, t: -1.0 };
        assert!(h3_distance(&bad, &H3Point::ORIGIN).is_err());
        assert!(Mobius::unimodular(c(2.0, 0.0), ZERO, ZERO, ONE).is_err());
    }

    #[test]
    fn distance_examples() {
        let e = H3Point::new(0.0, 0.0, std::f64::consts::E).unwrap();
        assert!((dist(&H3Point::ORIGIN, &e) - 1.0).abs() < 1e-12);
        assert_eq!(dist(&e, &e), 0.0);
        let q = H3Point::new(1.0, 0.0, 1.0).unwrap();
        assert!((dist(&H3Point::ORIGIN, &q) - 1.5f64.acosh()).abs() < 1e-12);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&Mobius::diag(c(0.0, 1.0))), Classification::Elliptic);
        assert_eq!(classify(&Mobius::real(1.0, 1.0, 0.0, 1.0)), Classification::Parabolic);
        assert_eq!(classify(&Mobius::real(2.0, 0.0, 0.0, 0.5)), Classification::Loxodromic);
        assert_eq!(classify(&-Mobius::IDENTITY), Classification::Identity);
        assert_eq!(classify(&Mobius::diag(c(0.0, 2.0))), Classification::Loxodromic);
    }

    #[test]
    fn translation_length_examples() {
        assert_eq!(translation_length(&Mobius::IDENTITY), 0.0);
        assert_eq!(translation_length(&Mobius::real(1.0, 1.0, 0.0, 1.0)), 0.0);
        let l = translation_length(&Mobius::real(2.0, 0.0, 0.0, 0.5));
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-12);
        // purely imaginary eigenvalue ratio: λ = 2i
        let l = translation_length(&Mobius::diag(c(0.0, 2.0)));
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_exp_roundtrip() {
        let p = H3Point::new(0.4, -1.2, 0.3).unwrap();
        let q = H3Point::new(-2.0, 0.5, 1.7).unwrap();
        let v = log_at(&p, &q);
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((n - dist(&p, &q)).abs() < 1e-12);
        let back = exp_at(&p, &v);
        assert!(dist(&back, &q) < 1e-10);
        let mid = geodesic_point(&p, &q, 0.5);
        assert!((dist(&p, &mid) - dist(&mid, &q)).abs() < 1e-10);
    }

    #[test]
    fn axis_defect_on_and_off_axis() {
        let m = Mobius::real(2.0, 0.0, 0.0, 0.5);
        let on: Vec<H3Point> = (0..5).map(|k| H3Point::new(0.0, 0.0, 1.5f64.powi(k)).unwrap()).collect();
        assert!(axis_defect(&on, &m).unwrap().abs() < 1e-12);
        let off = [H3Point::new(1.0, 0.0, 1.0).unwrap()];
        assert!(axis_defect(&off, &m).unwrap() > 0.0);
        assert!(axis_defect(&[], &m).is_err());
    }

    #[test]
    fn operator_norm_and_residual() {
        assert!((Mobius::real(2.0, 0.0, 0.0, 0.5).operator_norm() - 2.0).abs() < 1e-12);
        assert!((-Mobius::IDENTITY).distance_to_pm_identity() < 1e-15);
    }

    #[test]
    fn axis_frame_maps_axis() {
        let f = axis_frame(c(1.0, 2.0), Some(c(-3.0, 0.5)));
        assert!((f.act_boundary(ZERO).unwrap() - c(1.0, 2.0)).norm() < 1e-12);
        assert!(f.det().re - 1.0 < 1e-12);
    }
}
