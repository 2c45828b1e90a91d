//! Equivariant maps into ℍ³ and their energy minimization.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mesh::DomainMesh;
use crate::charvar::Representation;
use crate::octagon;
use crate::sl2c::{self, act_unchecked, dist, exp_at, log_at, H3Point, Mobius};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("expected {expected} images, got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error("representation has genus {rep}, mesh is genus 2")]
    Genus { rep: usize },
    #[error("image {0} is not a point of upper half-space")]
    Image(usize),
    #[error("invalid solver option: {0}")]
    Options(String),
}

/// A map from the mesh into ℍ³, equivariant by construction: one image per
/// surface vertex, and the copy with deck word `D` maps to `ρ(D)` of it.
#[derive(Clone, Debug)]
pub struct EquivariantMap {
    pub mesh: Arc<DomainMesh>,
    pub rep: Representation,
    pub images: Vec<H3Point>,
}

/// Embedding of the disk as the vertical half-plane `y = 0` through the
/// Cayley map.
pub fn disk_to_h3(z: Complex64) -> H3Point {
    let w = octagon::disk_to_upper(z);
    H3Point { x: w.re, y: 0.0, t: w.im }
}

impl EquivariantMap {
    pub fn new(mesh: Arc<DomainMesh>, rep: Representation, images: Vec<H3Point>) -> Result<Self, SolverError> {
        if rep.presentation().genus() != 2 {
            return Err(SolverError::Genus { rep: rep.presentation().genus() });
        }
        if images.len() != mesh.orbit_count() {
            return Err(SolverError::ImageCount { expected: mesh.orbit_count(), got: images.len() });
        }
        if let Some(i) = images.iter().position(|p| !(p.t > 0.0 && p.x.is_finite() && p.y.is_finite())) {
            return Err(SolverError::Image(i));
        }
        Ok(EquivariantMap { mesh, rep, images })
    }

    /// Every surface vertex at `p`.
    pub fn constant(mesh: Arc<DomainMesh>, rep: Representation, p: H3Point) -> Result<Self, SolverError> {
        let n = mesh.orbit_count();
        Self::new(mesh, rep, vec![p; n])
    }

    /// The octagon embedding `z ↦ (Cayley(z), 0)`; equivariant (and harmonic
    /// in the limit) for the Fuchsian base.
    pub fn fuchsian_embedding(mesh: Arc<DomainMesh>, rep: Representation) -> Result<Self, SolverError> {
        let images = mesh.representatives.iter().map(|&v| disk_to_h3(mesh.positions[v])).collect();
        Self::new(mesh, rep, images)
    }

    /// Images drawn around the origin by geodesic steps of length up to
    /// `spread` in uniform random directions.
    pub fn random(mesh: Arc<DomainMesh>, rep: Representation, seed: u64, spread: f64) -> Result<Self, SolverError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = (0..mesh.orbit_count())
            .map(|_| {
                let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-12);
                let r = spread * rng.gen::<f64>();
                sl2c::exp_origin(&v.map(|x| x / n * r))
            })
            .collect();
        Self::new(mesh, rep, images)
    }

    /// Same mesh, new representation, same per-orbit images (warm start).
    pub fn with_rep(&self, rep: Representation) -> Result<Self, SolverError> {
        Self::new(self.mesh.clone(), rep, self.images.clone())
    }

    /// `ρ(deck(c))` for every copy.
    pub fn copy_transforms(&self) -> Vec<Mobius> {
        self.mesh.deck.iter().map(|w| self.rep.evaluate(w)).collect()
    }

    /// Image of every vertex copy.
    pub fn copy_images(&self) -> Vec<H3Point> {
        self.copy_transforms().iter().zip(&self.mesh.orbit).map(|(m, &o)| act_unchecked(m, &self.images[o])).collect()
    }

    /// Simultaneous conjugation of the representation and the images by `a`.
    pub fn conjugated(&self, a: &Mobius) -> Self {
        EquivariantMap {
            mesh: self.mesh.clone(),
            rep: self.rep.conjugate_by(a),
            images: self.images.iter().map(|p| act_unchecked(a, p)).collect(),
        }
    }

    pub fn energy(&self) -> f64 {
        let terms = EdgeTerms::new(self);
        terms.total(&self.images)
    }
}

/// `½ Σ w d(u(a), u(b))²` over surface edges.
pub fn energy(u: &EquivariantMap) -> f64 {
    u.energy()
}

/// Edge data in orbit coordinates: the edge `(a, b)` contributes
/// `½ w d(f(orbit a), C f(orbit b))²` with `C = ρ(deck a)⁻¹ ρ(deck b)`.
struct EdgeTerms {
    ends: Vec<(usize, usize)>,
    weight: Vec<f64>,
    transform: Vec<Mobius>,
    inverse: Vec<Mobius>,
    /// Edges incident to each orbit.
    incident: Vec<Vec<usize>>,
}

impl EdgeTerms {
    fn new(u: &EquivariantMap) -> Self {
        let m = &u.mesh;
        let rho = u.copy_transforms();
        let mut incident = vec![Vec::new(); m.orbit_count()];
        let mut ends = Vec::with_capacity(m.edges.len());
        let mut transform = Vec::with_capacity(m.edges.len());
        for (e, &(a, b)) in m.edges.iter().enumerate() {
            let (oa, ob) = (m.orbit[a], m.orbit[b]);
            ends.push((oa, ob));
            let c = rho[a].inverse() * rho[b];
            transform.push(c.normalized().unwrap_or(c));
            incident[oa].push(e);
            if ob != oa {
                incident[ob].push(e);
            }
        }
        let inverse = transform.iter().map(Mobius::inverse).collect();
        EdgeTerms { ends, weight: m.weights.clone(), transform, inverse, incident }
    }

    #[inline]
    fn term(&self, e: usize, img: &[H3Point]) -> f64 {
        let (a, b) = self.ends[e];
        let d = dist(&img[a], &act_unchecked(&self.transform[e], &img[b]));
        0.5 * self.weight[e] * d * d
    }

    fn total(&self, img: &[H3Point]) -> f64 {
        neumaier((0..self.ends.len()).map(|e| self.term(e, img)))
    }

    fn local(&self, o: usize, img: &[H3Point]) -> f64 {
        neumaier(self.incident[o].iter().map(|&e| self.term(e, img)))
    }

    /// Gradient of the energy in orbit `o` (in the frame of `img[o]`) and the
    /// total weight of its terms.
    fn gradient(&self, o: usize, img: &[H3Point]) -> ([f64; 3], f64) {
        let p = img[o];
        let mut g = [0.0; 3];
        let mut wsum = 0.0;
        let mut pull = |w: f64, q: &H3Point| {
            let v = log_at(&p, q);
            for k in 0..3 {
                g[k] -= w * v[k];
            }
            wsum += w;
        };
        for &e in &self.incident[o] {
            let (a, b) = self.ends[e];
            let w = self.weight[e];
            if a == o {
                pull(w, &act_unchecked(&self.transform[e], &img[b]));
            }
            if b == o {
                pull(w, &act_unchecked(&self.inverse[e], &img[a]));
            }
        }
        (g, wsum)
    }
}

fn neumaier(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    GaussSeidel,
    Jacobi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when a sweep lowers the energy by less than `tol · energy`.
    pub tol: f64,
    /// Also require the largest per-vertex gradient norm to fall below this.
    pub grad_tol: Option<f64>,
    pub max_sweeps: usize,
    /// Energies below this count as a constant map.
    pub degenerate_energy: f64,
    /// Step multiplier relative to the weighted-mean step.
    pub relax: f64,
    pub mode: SweepMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            grad_tol: None,
            max_sweeps: 10_000,
            degenerate_energy: 1e-12,
            relax: 1.0,
            mode: SweepMode::GaussSeidel,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol > 0.0) || self.max_sweeps == 0 || !(self.relax > 0.0 && self.relax < 2.0) {
            return Err(SolverError::Options(format!(
                "tol {} max_sweeps {} relax {}",
                self.tol, self.max_sweeps, self.relax
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Energy before the first sweep and after each sweep.
    pub energy_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Energy fell below the degeneracy floor (a constant map).
    pub degenerate: bool,
    pub max_gradient: f64,
}

impl SolveReport {
    pub fn energy(&self) -> f64 {
        *self.energy_trace.last().unwrap_or(&0.0)
    }

    pub fn is_monotone(&self) -> bool {
        self.energy_trace.windows(2).all(|w| w[1] <= w[0])
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;
/// A local move is kept only if it lowers the total by more than this
/// fraction, which keeps the recomputed trace monotone under rounding.
const MIN_DECREASE: f64 = 1e-14;

/// Geodesic block descent from `init`: each surface vertex moves towards the
/// weighted mean of its neighbours' pulled-back images, with Armijo
/// backtracking on the local energy.
pub fn solve_harmonic(init: EquivariantMap, opts: &SolveOptions) -> Result<(EquivariantMap, SolveReport), SolverError> {
    opts.validate()?;
    let terms = EdgeTerms::new(&init);
    let mut img = init.images.clone();
    let mut energy = terms.total(&img);
    let mut trace = vec![energy];
    let mut converged = false;
    let mut degenerate = false;
    let mut sweeps = 0;
    let mut max_gradient = f64::INFINITY;
    while sweeps < opts.max_sweeps {
        if energy < opts.degenerate_energy {
            degenerate = true;
            converged = true;
            break;
        }
        max_gradient = match opts.mode {
            SweepMode::GaussSeidel => gauss_seidel_sweep(&terms, &mut img, energy, opts.relax),
            SweepMode::Jacobi => jacobi_sweep(&terms, &mut img, energy, opts.relax),
        };
        sweeps += 1;
        let next = terms.total(&img);
        trace.push(next);
        let decrement = energy - next;
        energy = next;
        if decrement < opts.tol * energy && opts.grad_tol.map_or(true, |g| max_gradient < g) {
            converged = true;
            break;
        }
    }
    if energy < opts.degenerate_energy {
        degenerate = true;
    }
    let report = SolveReport { energy_trace: trace, sweeps, converged, degenerate, max_gradient };
    Ok((EquivariantMap { images: img, ..init }, report))
}

fn gauss_seidel_sweep(terms: &EdgeTerms, img: &mut [H3Point], total: f64, relax: f64) -> f64 {
    let mut max_g: f64 = 0.0;
    for o in 0..img.len() {
        let (g, wsum) = terms.gradient(o, img);
        let gn = norm(&g);
        max_g = max_g.max(gn);
        if gn == 0.0 || wsum <= 0.0 {
            continue;
        }
        let p = img[o];
        let before = terms.local(o, img);
        let mut s = relax / wsum;
        for _ in 0..MAX_BACKTRACK {
            img[o] = exp_at(&p, &g.map(|x| -s * x));
            let after = terms.local(o, img);
            if before - after >= ARMIJO * s * gn * gn && before - after > MIN_DECREASE * total {
                break;
            }
            img[o] = p;
            s *= 0.5;
        }
    }
    max_g
}

fn jacobi_sweep(terms: &EdgeTerms, img: &mut [H3Point], total: f64, relax: f64) -> f64 {
    let steps: Vec<([f64; 3], f64)> = (0..img.len()).map(|o| terms.gradient(o, img)).collect();
    let max_g = steps.iter().map(|(g, _)| norm(g)).fold(0.0, f64::max);
    let slope: f64 = steps.iter().map(|(g, w)| if *w > 0.0 { norm(g).powi(2) / w } else { 0.0 }).sum();
    let start = img.to_vec();
    let mut s = relax;
    for _ in 0..MAX_BACKTRACK {
        for (o, (g, w)) in steps.iter().enumerate() {
            if *w > 0.0 {
                img[o] = exp_at(&start[o], &g.map(|x| -s / w * x));
            }
        }
        let after = terms.total(img);
        if total - after >= ARMIJO * s * slope && total - after > MIN_DECREASE * total {
            return max_g;
        }
        s *= 0.5;
    }
    img.copy_from_slice(&start);
    max_g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charvar::{diagonal_family, fuchsian_base};
    use crate::harmonic::build_octagon_mesh;
    use crate::words::Presentation;
    use std::f64::consts::PI;

    fn mesh(level: usize) -> Arc<DomainMesh> {
        Arc::new(build_octagon_mesh(level).unwrap())
    }

    #[test]
    fn identity_energy_is_comparison_area() {
        let m = mesh(2);
        let u = EquivariantMap::fuchsian_embedding(m.clone(), fuchsian_base(2).unwrap()).unwrap();
        let area: f64 = (0..m.triangles.len()).map(|t| m.comparison_area(t)).sum();
        assert!((u.energy() - area).abs() < 1e-8 * area, "{} vs {area}", u.energy());
    }

    #[test]
    fn embedding_is_equivariant() {
        let m = mesh(2);
        let u = EquivariantMap::fuchsian_embedding(m.clone(), fuchsian_base(2).unwrap()).unwrap();
        for (c, p) in u.copy_images().iter().enumerate() {
            let q = disk_to_h3(m.positions[c]);
            assert!(dist(p, &q) < 1e-8, "copy {c}");
        }
    }

    #[test]
    fn constant_map_has_zero_energy() {
        let id = Mobius::IDENTITY;
        let rep = Representation::new(Presentation::new(2).unwrap(), vec![id; 4]).unwrap();
        let u = EquivariantMap::constant(mesh(1), rep, H3Point::ORIGIN).unwrap();
        assert_eq!(u.energy(), 0.0);
    }

    #[test]
    fn energy_is_conjugation_invariant() {
        let rep = crate::charvar::twist_family(&fuchsian_base(2).unwrap(), 1, 1.5).unwrap();
        let u = EquivariantMap::random(mesh(1), rep, 3, 1.0).unwrap();
        let a = Mobius::new(
            Complex64::new(1.2, 0.3),
            Complex64::new(-0.4, 0.8),
            Complex64::new(0.1, -0.2),
            Complex64::new(0.9, 0.1),
        )
        .normalized()
        .unwrap();
        let e0 = u.energy();
        assert!((u.conjugated(&a).energy() - e0).abs() < 1e-9 * e0.max(1.0));
    }

    #[test]
    fn unitary_rep_collapses_to_a_point() {
        let rot = |th: f64| Mobius::diag(Complex64::from_polar(1.0, th));
        // commuting rotations about the same axis satisfy the relator
        let rep =
            Representation::new(Presentation::new(2).unwrap(), vec![rot(0.3), rot(0.7), rot(-0.2), rot(1.1)]).unwrap();
        let u = EquivariantMap::random(mesh(1), rep, 7, 1.0).unwrap();
        let (v, report) = solve_harmonic(u, &SolveOptions::default()).unwrap();
        assert!(report.degenerate && report.is_monotone(), "{:?}", report.energy_trace.last());
        let p = v.images[0];
        assert!(v.images.iter().all(|q| dist(&p, q) < 1e-4));
    }

    #[test]
    fn fuchsian_solution_stays_near_identity() {
        let m = mesh(2);
        let u = EquivariantMap::fuchsian_embedding(m.clone(), fuchsian_base(2).unwrap()).unwrap();
        let e0 = u.energy();
        let (v, report) = solve_harmonic(u, &SolveOptions::default()).unwrap();
        assert!(report.converged && report.is_monotone());
        assert!(report.energy() <= e0 && report.energy() > 4.0 * PI * 0.95);
        let far = v
            .images
            .iter()
            .enumerate()
            .map(|(o, p)| dist(p, &disk_to_h3(m.positions[m.representatives[o]])))
            .fold(0.0, f64::max);
        assert!(far < 0.1, "{far}");
    }

    #[test]
    fn diagonal_rep_lands_on_the_axis() {
        let p = Presentation::new(2).unwrap();
        let rep = diagonal_family(p, &[0.0, 1.0, 0.0, -2.0], 1.0).unwrap();
        let u = EquivariantMap::random(mesh(1), rep, 11, 0.5).unwrap();
        let (v, report) = solve_harmonic(u, &SolveOptions { tol: 1e-13, ..Default::default() }).unwrap();
        assert!(report.converged && report.is_monotone());
        for q in &v.images {
            assert!(q.z().norm() < 1e-6 * q.t.max(1.0), "{q:?}");
        }
    }

    #[test]
    fn jacobi_mode_reaches_the_same_energy() {
        let rep = crate::charvar::twist_family(&fuchsian_base(2).unwrap(), 1, 2.0).unwrap();
        let m = mesh(1);
        let init = EquivariantMap::fuchsian_embedding(m, rep).unwrap();
        let (_, gs) = solve_harmonic(init.clone(), &SolveOptions { tol: 1e-12, ..Default::default() }).unwrap();
        let (_, ja) =
            solve_harmonic(init, &SolveOptions { tol: 1e-12, mode: SweepMode::Jacobi, ..Default::default() }).unwrap();
        assert!(ja.is_monotone() && gs.is_monotone());
        assert!((gs.energy() - ja.energy()).abs() < 1e-4 * gs.energy(), "{} {}", gs.energy(), ja.energy());
    }

    #[test]
    fn rejects_bad_options_and_images() {
        let u = EquivariantMap::fuchsian_embedding(mesh(0), fuchsian_base(2).unwrap()).unwrap();
        assert!(solve_harmonic(u.clone(), &SolveOptions { relax: 2.5, ..Default::default() }).is_err());
        assert!(EquivariantMap::new(u.mesh.clone(), u.rep.clone(), vec![H3Point::ORIGIN]).is_err());
    }
}
