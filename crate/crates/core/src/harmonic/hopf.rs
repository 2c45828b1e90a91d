//! Hopf differential and Beltrami coefficient of a discrete map.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::{disk_matrix, DomainMesh};
use super::solver::EquivariantMap;
use crate::octagon;
use crate::sl2c::{exp_at, log_at};

/// Share of the median below which a local minimum of `|φ|` counts as a zero.
pub const ZERO_FRACTION: f64 = 0.1;
/// Exclusion radius around zeros, in mean edge lengths.
pub const ZERO_RADIUS_EDGES: f64 = 2.0;
/// Values of `|μ|` are clamped to `1 − BELTRAMI_EPS` for degenerate images.
pub const BELTRAMI_EPS: f64 = 1e-12;

/// Per-triangle `⟨u_z, u_z⟩` in the disk coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfSample {
    pub values: Vec<Complex64>,
    /// Euclidean disk areas; `Σ |φ| area` is chart independent.
    pub areas: Vec<f64>,
    /// `λ²` of the hyperbolic metric at each centroid.
    pub conformal: Vec<f64>,
    /// Discrete ∂̄ magnitude: jumps across edges weighted by adjacent area.
    pub residual: f64,
}

impl HopfSample {
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().zip(&self.areas).map(|(v, a)| v.norm() * a).sum()
    }

    /// `|φ| / λ²` at the centroid.
    pub fn pointwise_norm(&self, t: usize) -> f64 {
        self.values[t].norm() / self.conformal[t]
    }

    /// Divided by the L¹ norm; a zero sample is returned unchanged.
    pub fn normalized(&self) -> HopfSample {
        let n = self.l1_norm();
        if n == 0.0 {
            return self.clone();
        }
        HopfSample { values: self.values.iter().map(|v| v / n).collect(), residual: self.residual / n, ..self.clone() }
    }

    /// `‖φ − ψ‖₁ / ‖φ‖₁`.
    pub fn relative_l1(&self, other: &HopfSample) -> f64 {
        let diff: f64 =
            self.values.iter().zip(&other.values).zip(&self.areas).map(|((a, b), w)| (a - b).norm() * w).sum();
        diff / self.l1_norm()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("triangle,re,im,abs\n");
        for (t, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{t},{:.12e},{:.12e},{:.12e}", v.re, v.im, self.pointwise_norm(t));
        }
        s
    }
}

/// Per-triangle `|μ|` of the pulled-back metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeltramiField {
    pub values: Vec<f64>,
    /// Triangles whose image is degenerate (rank below two).
    pub degenerate: Vec<usize>,
}

impl BeltramiField {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("triangle,abs_mu,degenerate\n");
        for (t, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{t},{v:.12e},{}", self.degenerate.binary_search(&t).is_ok());
        }
        s
    }

    /// Median of `log(1/|μ|)` over the given triangles.
    pub fn median_log_inverse(&self, triangles: &[usize]) -> Option<f64> {
        median(triangles.iter().map(|&t| -self.values[t].ln()).collect())
    }
}

/// Partial derivatives `u_x, u_y` of the affine interpolant, as tangent
/// vectors at the image barycenter (orthonormal frame).
struct Derivatives {
    ux: [f64; 3],
    uy: [f64; 3],
}

fn derivatives(u: &EquivariantMap) -> Vec<Derivatives> {
    let m = &u.mesh;
    let img = u.copy_images();
    m.triangles
        .iter()
        .map(|t| {
            let x = t.map(|c| img[c]);
            let z = t.map(|c| m.positions[c]);
            let (vb, vc) = (log_at(&x[0], &x[1]), log_at(&x[0], &x[2]));
            let bary = exp_at(&x[0], &[0, 1, 2].map(|k| (vb[k] + vc[k]) / 3.0));
            let v: [[f64; 3]; 3] = x.map(|p| log_at(&bary, &p));
            let (d1, d2) = (z[1] - z[0], z[2] - z[0]);
            let det = d1.re * d2.im - d1.im * d2.re;
            let mut ux = [0.0; 3];
            let mut uy = [0.0; 3];
            for k in 0..3 {
                let (e1, e2) = (v[1][k] - v[0][k], v[2][k] - v[0][k]);
                ux[k] = (e1 * d2.im - e2 * d1.im) / det;
                uy[k] = (d1.re * e2 - d2.re * e1) / det;
            }
            Derivatives { ux, uy }
        })
        .collect()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn centroid(m: &DomainMesh, t: usize) -> Complex64 {
    m.triangles[t].iter().map(|&c| m.positions[c]).sum::<Complex64>() / 3.0
}

/// The disk isometry taking triangle `o`'s frame to triangle `t`'s frame
/// across side `i` of `t`.
fn frame_change(m: &DomainMesh, t: usize, i: usize) -> crate::sl2c::Mobius {
    let o = m.adjacency[t][i];
    let u = m.triangles[t][i];
    let j = (0..3).find(|&j| m.edge_of[o][j] == m.edge_of[t][i] && m.adjacency[o][j] == t).expect("mate side");
    // side j of o runs v' → u'
    let u2 = m.triangles[o][(j + 1) % 3];
    disk_matrix(&m.deck[u].mul(&m.deck[u2].inverse()))
}

pub fn hopf(u: &EquivariantMap) -> HopfSample {
    let m = &u.mesh;
    let values: Vec<Complex64> = derivatives(u)
        .iter()
        .map(|d| Complex64::new(dot(&d.ux, &d.ux) - dot(&d.uy, &d.uy), -2.0 * dot(&d.ux, &d.uy)) / 4.0)
        .collect();
    let areas: Vec<f64> = (0..m.triangles.len()).map(|t| m.disk_area(t)).collect();
    let conformal = (0..m.triangles.len())
        .map(|t| {
            let lambda = 2.0 / (1.0 - centroid(m, t).norm_sqr());
            lambda * lambda
        })
        .collect();
    let mut residual = 0.0;
    let mut seen = vec![false; m.edges.len()];
    for t in 0..m.triangles.len() {
        for i in 0..3 {
            let o = m.adjacency[t][i];
            if std::mem::replace(&mut seen[m.edge_of[t][i]], true) {
                continue;
            }
            let g = frame_change(m, t, i);
            let mid = (m.positions[m.triangles[t][i]] + m.positions[m.triangles[t][(i + 1) % 3]]) / 2.0;
            // φ_o(g z) g'(z)², with g'(z) = 1 / (c z + d)²
            let jac = (g.c * mid + g.d).powi(-2);
            let pulled = values[o] * jac * jac;
            residual += (values[t] - pulled).norm() * (areas[t] + areas[o] * jac.norm_sqr()) / 3.0;
        }
    }
    HopfSample { values, areas, conformal, residual }
}

pub fn beltrami(u: &EquivariantMap) -> BeltramiField {
    let mut degenerate = Vec::new();
    let values = derivatives(u)
        .iter()
        .enumerate()
        .map(|(t, d)| {
            let (g11, g22, g12) = (dot(&d.ux, &d.ux), dot(&d.uy, &d.uy), dot(&d.ux, &d.uy));
            let det = (g11 * g22 - g12 * g12).max(0.0);
            let den = g11 + g22 + 2.0 * det.sqrt();
            let mu = if den > 0.0 { Complex64::new(g11 - g22, 2.0 * g12).norm() / den } else { 1.0 };
            if mu >= 1.0 - BELTRAMI_EPS {
                degenerate.push(t);
                1.0 - BELTRAMI_EPS
            } else {
                mu
            }
        })
        .collect();
    BeltramiField { values, degenerate }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Triangles where `|φ|/λ²` is minimal among all triangles sharing a surface
/// vertex and below [`ZERO_FRACTION`] of the median. Candidates closer than
/// the exclusion radius to a smaller one are merged into it.
pub fn hopf_zeros(sample: &HopfSample, mesh: &DomainMesh) -> Vec<usize> {
    let n: Vec<f64> = (0..sample.values.len()).map(|t| sample.pointwise_norm(t)).collect();
    let Some(med) = median(n.clone()) else {
        return Vec::new();
    };
    let mut around: HashMap<usize, Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &c in tri {
            around.entry(mesh.orbit[c]).or_default().push(t);
        }
    }
    let mut candidates: Vec<usize> = (0..n.len())
        .filter(|&t| {
            n[t] < ZERO_FRACTION * med
                && mesh.triangles[t].iter().all(|&c| around[&mesh.orbit[c]].iter().all(|&s| (n[t], t) <= (n[s], s)))
        })
        .collect();
    candidates.sort_by(|&a, &b| n[a].total_cmp(&n[b]));
    let delta = ZERO_RADIUS_EDGES * mean_edge_length(mesh);
    let mut zeros: Vec<usize> = Vec::new();
    for c in candidates {
        let d = dual_distances(mesh, &[c]);
        if zeros.iter().all(|&z| d[z] >= delta) {
            zeros.push(c);
        }
    }
    zeros.sort_unstable();
    zeros
}

#[derive(PartialEq)]
struct Entry(f64, usize);
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Hyperbolic distance from each triangle to the nearest of `sources`,
/// measured along the dual graph between centroids.
pub fn dual_distances(mesh: &DomainMesh, sources: &[usize]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; mesh.triangles.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        d[s] = 0.0;
        heap.push(Entry(0.0, s));
    }
    while let Some(Entry(dt, t)) = heap.pop() {
        if dt > d[t] {
            continue;
        }
        let ct = centroid(mesh, t);
        for i in 0..3 {
            let o = mesh.adjacency[t][i];
            let g = frame_change(mesh, t, i).inverse();
            let co = octagon::disk_act(&g, centroid(mesh, o));
            let nd = dt + octagon::disk_distance(ct, co);
            if nd < d[o] {
                d[o] = nd;
                heap.push(Entry(nd, o));
            }
        }
    }
    d
}

fn mean_edge_length(mesh: &DomainMesh) -> f64 {
    mesh.edges.iter().map(|&(u, v)| mesh.edge_length(u, v)).sum::<f64>() / mesh.edges.len() as f64
}

/// Triangles at distance at least `ZERO_RADIUS_EDGES` mean edge lengths
/// from every detected zero.
pub fn far_from_zeros(mesh: &DomainMesh, zeros: &[usize]) -> Vec<usize> {
    let delta = ZERO_RADIUS_EDGES * mean_edge_length(mesh);
    dual_distances(mesh, zeros).iter().enumerate().filter(|(_, &d)| d >= delta).map(|(t, _)| t).collect()
}

/// Hopf sample, its zeros, and the median of `log(1/|μ|)` away from them.
pub fn beltrami_summary(u: &EquivariantMap) -> (HopfSample, Vec<usize>, Option<f64>) {
    let h = hopf(u);
    let zeros = hopf_zeros(&h, &u.mesh);
    let far = far_from_zeros(&u.mesh, &zeros);
    let med = beltrami(u).median_log_inverse(&far);
    (h, zeros, med)
}
