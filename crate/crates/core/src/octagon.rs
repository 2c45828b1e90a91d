//! The regular hyperbolic octagon with interior angles π/4 in the Poincaré
//! disk, its side pairings, and the Cayley map to the upper half-plane.
//!
//! Side `k` is centred at angle `kπ/4`; vertex `j` sits at angle
//! `π/8 + jπ/4`, so side `k` runs from vertex `k − 1` to vertex `k`.
//! Generator `g` (ordered a1, b1, a2, b2) maps side `SIDE_PAIRS[g].0` onto
//! side `SIDE_PAIRS[g].1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::sl2c::Mobius;

/// `(source side, target side)` for a1, b1, a2, b2.
pub const SIDE_PAIRS: [(usize, usize); 4] = [(2, 0), (1, 3), (6, 4), (5, 7)];

/// Hyperbolic distance from the centre to a side midpoint: `cosh r = cot(π/8)`.
pub fn inradius() -> f64 {
    (1.0 / (PI / 8.0).tan()).acosh()
}

/// Hyperbolic distance from the centre to a vertex: `cosh R = cot²(π/8)`.
pub fn circumradius() -> f64 {
    (1.0 / (PI / 8.0).tan()).powi(2).acosh()
}

pub fn vertex(j: usize) -> Complex64 {
    let r = (circumradius() / 2.0).tanh();
    Complex64::from_polar(r, PI / 8.0 + (j % 8) as f64 * PI / 4.0)
}

fn rotation(theta: f64) -> Mobius {
    Mobius::new(
        Complex64::from_polar(1.0, theta / 2.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, -theta / 2.0),
    )
}

/// Hyperbolic translation of the disk along the real diameter by `s`.
fn translation(s: f64) -> Mobius {
    Mobius::real((s / 2.0).cosh(), (s / 2.0).sinh(), (s / 2.0).sinh(), (s / 2.0).cosh())
}

/// The orientation-preserving isometry of the disk carrying side `from` onto
/// side `to` (midpoint to midpoint) and the octagon off itself.
pub fn side_pairing(from: usize, to: usize) -> Mobius {
    let th = |k: usize| k as f64 * PI / 4.0;
    rotation(th(to)) * translation(2.0 * inradius()) * rotation(PI - th(from))
}

/// Disk-model (SU(1,1)) images of a1, b1, a2, b2.
pub fn disk_generators() -> [Mobius; 4] {
    SIDE_PAIRS.map(|(from, to)| side_pairing(from, to))
}

/// The Cayley map `w ↦ i(1 + w)/(1 − w)` as a unimodular matrix.
pub fn cayley() -> Mobius {
    let i = Complex64::new(0.0, 1.0);
    Mobius::new(i, i, Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0))
        .normalized()
        .expect("Cayley matrix is invertible")
}

/// Point of the upper half-plane corresponding to `w` in the disk.
pub fn disk_to_upper(w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    i * (1.0 + w) / (1.0 - w)
}

/// Conjugates a disk isometry into SL(2,ℝ), dropping rounding residue in the
/// imaginary parts.
pub fn disk_to_upper_matrix(m: &Mobius) -> Mobius {
    let k = cayley();
    let r = k * *m * k.inverse();
    Mobius::real(r.a.re, r.b.re, r.c.re, r.d.re)
}

/// Hyperbolic distance in the disk.
pub fn disk_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm_sqr();
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    (1.0 + 2.0 * num / den).acosh()
}

/// Point at fraction `s` along the disk geodesic from `z` to `w`.
pub fn disk_geodesic_point(z: Complex64, w: Complex64, s: f64) -> Complex64 {
    // Move z to 0, where geodesics are diameters.
    let to0 = |p: Complex64| (p - z) / (1.0 - z.conj() * p);
    let from0 = |p: Complex64| (p + z) / (1.0 + z.conj() * p);
    let w0 = to0(w);
    let r = w0.norm();
    if r == 0.0 {
        return z;
    }
    let d = 2.0 * r.atanh();
    let rs = (s * d / 2.0).tanh();
    from0(w0 / r * rs)
}

/// Disk Möbius action.
pub fn disk_act(m: &Mobius, z: Complex64) -> Complex64 {
    (m.a * z + m.b) / (m.c * z + m.d)
}
