//! Geodesic triangulations of the closed genus-2 surface, developed into the
//! disk around the regular octagon.
//!
//! Vertices of the mesh are copies of surface vertices: each copy records its
//! orbit (the surface vertex) and a deck word with
//! `position(copy) = deck · position(representative)`. Triangles are triples
//! of copies and need not stay inside the octagon once Delaunay flips have
//! crossed its sides.

use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::octagon::{self, SIDE_PAIRS};
use crate::sl2c::Mobius;
use crate::words::{Letter, Word};

/// Largest supported refinement level.
pub const MAX_LEVEL: usize = 6;

const MATCH_TOL: f64 = 1e-8;
const MAX_FLIP_PASSES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("level {0} exceeds the limit {MAX_LEVEL}")]
    Level(usize),
    #[error("edge ({0}, {1}) has nonpositive cotangent weight {2}")]
    Weight(usize, usize, f64),
    #[error("boundary vertex {0} has no partner under its side pairing")]
    Pairing(usize),
    #[error("triangle side ({0}, {1}) has no mate on the closed surface")]
    Unmatched(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainMesh {
    pub level: usize,
    /// Disk positions of the vertex copies.
    pub positions: Vec<Complex64>,
    pub triangles: Vec<[usize; 3]>,
    /// One placement `(u, v)` per edge of the closed surface.
    pub edges: Vec<(usize, usize)>,
    /// `(cot α + cot β) / 2` from Euclidean triangles with hyperbolic edge
    /// lengths.
    pub weights: Vec<f64>,
    /// Surface edge of triangle side `(t[i], t[i+1])`.
    pub edge_of: Vec<[usize; 3]>,
    /// Triangle across side `(t[i], t[i+1])` on the closed surface.
    pub adjacency: Vec<[usize; 3]>,
    /// Surface vertex of each copy.
    pub orbit: Vec<usize>,
    /// The copy lying in the octagon chosen for each surface vertex.
    pub representatives: Vec<usize>,
    pub deck: Vec<Word>,
}

/// Cache file for the genus-2 octagon mesh at `level`.
pub fn mesh_cache_path(dir: &Path, level: usize) -> PathBuf {
    dir.join(format!("octagon-g2-l{level}.json"))
}

/// Reads the cached mesh for `level` from `dir`, building and writing it
/// when the file is missing or does not describe a mesh at that level.
/// Returns the mesh and whether it came from the cache.
pub fn cached_octagon_mesh(dir: &Path, level: usize) -> Result<(DomainMesh, bool), MeshError> {
    let path = mesh_cache_path(dir, level);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(m) = serde_json::from_str::<DomainMesh>(&text) {
            if m.level == level && m.triangles.len() == 8 << (2 * level) && m.weights.iter().all(|&w| w > 0.0) {
                return Ok((m, true));
            }
        }
    }
    let m = build_octagon_mesh(level)?;
    // a failed write only costs a rebuild next time
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = std::fs::write(&path, serde_json::to_string(&m).expect("mesh serializes"));
    }
    Ok((m, false))
}

/// Disk isometry of a word in the octagon generators.
pub fn disk_matrix(w: &Word) -> Mobius {
    let g = octagon::disk_generators();
    w.letters().iter().fold(Mobius::IDENTITY, |acc, l| {
        let m = g[l.generator()];
        acc * if l.is_inverse() { m.inverse() } else { m }
    })
}

impl DomainMesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn orbit_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.orbit_count() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    pub fn edge_length(&self, u: usize, v: usize) -> f64 {
        octagon::disk_distance(self.positions[u], self.positions[v])
    }

    /// Euclidean area of a triangle in the disk coordinate.
    pub fn disk_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.positions[v]);
        let (u, v) = (b - a, c - a);
        0.5 * (u.re * v.im - u.im * v.re).abs()
    }

    /// Area of the Euclidean triangle with the same edge lengths.
    pub fn comparison_area(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        heron(side_lengths(&self.positions, tri))
    }

    /// Hyperbolic area of a triangle, from its angles.
    pub fn hyperbolic_area(&self, t: usize) -> f64 {
        let [la, lb, lc] = side_lengths(&self.positions, self.triangles[t]);
        let angle = |opp: f64, s1: f64, s2: f64| {
            ((s1.cosh() * s2.cosh() - opp.cosh()) / (s1.sinh() * s2.sinh())).clamp(-1.0, 1.0).acos()
        };
        std::f64::consts::PI - angle(la, lb, lc) - angle(lb, la, lc) - angle(lc, la, lb)
    }

    /// Longest hyperbolic edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges.iter().map(|&(u, v)| self.edge_length(u, v)).fold(0.0, f64::max)
    }

    /// Disk isometry carrying the copy `from` onto the copy `to` of the same
    /// surface vertex.
    pub fn transition(&self, from: usize, to: usize) -> Word {
        self.deck[to].mul(&self.deck[from].inverse())
    }
}

/// Hyperbolic lengths of the sides opposite each vertex.
fn side_lengths(p: &[Complex64], t: [usize; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| octagon::disk_distance(p[t[(i + 1) % 3]], p[t[(i + 2) % 3]]))
}

fn heron(l: [f64; 3]) -> f64 {
    let s = (l[0] + l[1] + l[2]) / 2.0;
    (s * (s - l[0]) * (s - l[1]) * (s - l[2])).max(0.0).sqrt()
}

/// Cotangents of the angles opposite each side.
fn cotangents(l: [f64; 3]) -> [f64; 3] {
    let area = heron(l);
    [0, 1, 2].map(|i| (l[(i + 1) % 3].powi(2) + l[(i + 2) % 3].powi(2) - l[i].powi(2)) / (4.0 * area))
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

fn common_side(a: &[usize], b: &[usize]) -> Option<usize> {
    a.iter().copied().find(|s| b.contains(s))
}

/// Mutable state while building: copies and triangles.
struct Builder {
    positions: Vec<Complex64>,
    orbit: Vec<usize>,
    deck: Vec<Word>,
    representatives: Vec<usize>,
    copies_of: Vec<Vec<usize>>,
    triangles: Vec<[usize; 3]>,
}

impl Builder {
    /// The copy of `orbit` with deck word `w`, created if new.
    fn copy(&mut self, orbit: usize, w: Word) -> usize {
        let rep = self.representatives[orbit];
        let p = octagon::disk_act(&disk_matrix(&w), self.positions[rep]);
        if let Some(&c) = self.copies_of[orbit].iter().find(|&&c| (self.positions[c] - p).norm() < MATCH_TOL) {
            return c;
        }
        self.positions.push(p);
        self.orbit.push(orbit);
        self.deck.push(w);
        self.copies_of[orbit].push(self.positions.len() - 1);
        self.positions.len() - 1
    }

    /// Position of `v` seen from the frame where copy `u` is its
    /// representative.
    fn relative(&self, u: usize, v: usize) -> Complex64 {
        octagon::disk_act(&disk_matrix(&self.deck[u].inverse()), self.positions[v])
    }

    /// Mate `(triangle, side)` of every triangle side on the closed surface.
    fn matching(&self) -> Result<Vec<[(usize, usize); 3]>, MeshError> {
        let mut buckets: HashMap<(usize, usize), Vec<(usize, usize, Complex64)>> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (u, v) = (t[i], t[(i + 1) % 3]);
                buckets.entry((self.orbit[u], self.orbit[v])).or_default().push((ti, i, self.relative(u, v)));
            }
        }
        let mut out = vec![[(usize::MAX, 0); 3]; self.triangles.len()];
        for (ti, t) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (u, v) = (t[i], t[(i + 1) % 3]);
                // the mate runs v → u; compare from v's frame
                let target = self.relative(v, u);
                let found = buckets
                    .get(&(self.orbit[v], self.orbit[u]))
                    .and_then(|l| l.iter().find(|&&(o, j, p)| (o, j) != (ti, i) && (p - target).norm() < MATCH_TOL))
                    .ok_or(MeshError::Unmatched(u, v))?;
                out[ti][i] = (found.0, found.1);
            }
        }
        Ok(out)
    }

    /// One pass of flips on sides whose opposite angles exceed π in total;
    /// each triangle flips at most once per pass. Returns the flip count.
    fn flip_pass(&mut self) -> Result<usize, MeshError> {
        let mate = self.matching()?;
        let mut touched = vec![false; self.triangles.len()];
        let mut flips = 0;
        for t1 in 0..self.triangles.len() {
            for i in 0..3 {
                let (t2, j) = mate[t1][i];
                if touched[t1] || touched[t2] || t1 == t2 {
                    continue;
                }
                let tri1 = self.triangles[t1];
                let tri2 = self.triangles[t2];
                let (u, v, a) = (tri1[i], tri1[(i + 1) % 3], tri1[(i + 2) % 3]);
                // bring the far vertex of t2 into t1's frame
                let u2 = tri2[(j + 1) % 3];
                let g = self.deck[u].mul(&self.deck[u2].inverse());
                let far = tri2[(j + 2) % 3];
                let b = self.copy(self.orbit[far], g.mul(&self.deck[far]));
                let old = cotangents(side_lengths(&self.positions, [u, v, a]))[2]
                    + cotangents(side_lengths(&self.positions, [v, u, b]))[2];
                if old >= -1e-12 {
                    continue;
                }
                let n1 = [a, u, b];
                let n2 = [b, v, a];
                let (l1, l2) = (side_lengths(&self.positions, n1), side_lengths(&self.positions, n2));
                if heron(l1) <= 0.0
                    || heron(l2) <= 0.0
                    || orient(&self.positions, n1) <= 0.0
                    || orient(&self.positions, n2) <= 0.0
                {
                    continue;
                }
                self.triangles[t1] = n1;
                self.triangles[t2] = n2;
                touched[t1] = true;
                touched[t2] = true;
                flips += 1;
            }
        }
        Ok(flips)
    }
}

fn orient(p: &[Complex64], t: [usize; 3]) -> f64 {
    let (u, v) = (p[t[1]] - p[t[0]], p[t[2]] - p[t[0]]);
    u.re * v.im - u.im * v.re
}

/// Fan of eight triangles refined `level` times by geodesic midpoints, glued
/// by the octagon side pairings, then made Delaunay for the comparison
/// metric by flips on the closed surface.
pub fn build_octagon_mesh(level: usize) -> Result<DomainMesh, MeshError> {
    if level > MAX_LEVEL {
        return Err(MeshError::Level(level));
    }
    let mut positions = vec![Complex64::new(0.0, 0.0)];
    let mut sides: Vec<Vec<usize>> = vec![vec![]];
    for j in 0..8 {
        positions.push(octagon::vertex(j));
        // vertex j ends side j and starts side j + 1
        sides.push(vec![j, (j + 1) % 8]);
    }
    let mut triangles: Vec<[usize; 3]> = (0..8).map(|k| [0, 1 + (k + 7) % 8, 1 + k]).collect();
    for _ in 0..level {
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(4 * triangles.len());
        for t in &triangles {
            let mut m = [0; 3];
            for i in 0..3 {
                let (u, v) = (t[i], t[(i + 1) % 3]);
                m[i] = *mids.entry(key(u, v)).or_insert_with(|| {
                    positions.push(octagon::disk_geodesic_point(positions[u], positions[v], 0.5));
                    sides.push(common_side(&sides[u], &sides[v]).into_iter().collect());
                    positions.len() - 1
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([m[0], t[1], m[1]]);
            next.push([m[2], m[1], t[2]]);
            next.push([m[0], m[1], m[2]]);
        }
        triangles = next;
    }

    // side pairings: match boundary vertices by position
    let n = positions.len();
    let gens = octagon::disk_generators();
    let on_side = |s: usize| -> Vec<usize> { (0..n).filter(|&v| sides[v].contains(&s)).collect() };
    let mut links: Vec<Vec<(usize, Letter)>> = vec![Vec::new(); n];
    for (g, &(from, to)) in SIDE_PAIRS.iter().enumerate() {
        let targets = on_side(to);
        for v in on_side(from) {
            let image = octagon::disk_act(&gens[g], positions[v]);
            let partner = targets
                .iter()
                .copied()
                .find(|&u| (positions[u] - image).norm() < MATCH_TOL)
                .ok_or(MeshError::Pairing(v))?;
            let letter = Letter::new(g, false);
            links[v].push((partner, letter));
            links[partner].push((v, letter.inverse()));
        }
    }

    // orbits with deck words
    let mut orbit = vec![usize::MAX; n];
    let mut deck = vec![Word::empty(); n];
    let mut representatives = Vec::new();
    let mut copies_of = Vec::new();
    for start in 0..n {
        if orbit[start] != usize::MAX {
            continue;
        }
        let id = representatives.len();
        representatives.push(start);
        let mut members = vec![start];
        orbit[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &(u, g) in &links[v] {
                if orbit[u] == usize::MAX {
                    orbit[u] = id;
                    deck[u] = Word::from_letters(vec![g]).mul(&deck[v]);
                    members.push(u);
                    queue.push_back(u);
                }
            }
        }
        copies_of.push(members);
    }

    let mut b = Builder { positions, orbit, deck, representatives, copies_of, triangles };
    for _ in 0..MAX_FLIP_PASSES {
        if b.flip_pass()? == 0 {
            break;
        }
    }

    // surface edges and weights
    let mate = b.matching()?;
    let tcount = b.triangles.len();
    let mut edge_of = vec![[usize::MAX; 3]; tcount];
    let mut adjacency = vec![[0; 3]; tcount];
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for ti in 0..tcount {
        let tri = b.triangles[ti];
        let cot = cotangents(side_lengths(&b.positions, tri));
        for i in 0..3 {
            let (o, j) = mate[ti][i];
            adjacency[ti][i] = o;
            if edge_of[ti][i] != usize::MAX {
                continue;
            }
            let other = b.triangles[o];
            let cot2 = cotangents(side_lengths(&b.positions, other));
            // side (t[i], t[i+1]) is opposite vertex i+2
            let w = 0.5 * (cot[(i + 2) % 3] + cot2[(j + 2) % 3]);
            let (u, v) = (tri[i], tri[(i + 1) % 3]);
            if !(w > 0.0) {
                return Err(MeshError::Weight(u, v, w));
            }
            edge_of[ti][i] = edges.len();
            edge_of[o][j] = edges.len();
            edges.push((u, v));
            weights.push(w);
        }
    }

    Ok(DomainMesh {
        level,
        positions: b.positions,
        triangles: b.triangles,
        edges,
        weights,
        edge_of,
        adjacency,
        orbit: b.orbit,
        representatives: b.representatives,
        deck: b.deck,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn counts_and_euler() {
        for level in 0..=3 {
            let m = build_octagon_mesh(level).unwrap();
            assert_eq!(m.triangles.len(), 8 * 4usize.pow(level as u32));
            assert_eq!(m.euler_characteristic(), -2, "level {level}");
            assert!(m.weights.iter().all(|&w| w > 0.0));
        }
        assert_eq!(build_octagon_mesh(0).unwrap().orbit_count(), 2);
        assert!(matches!(build_octagon_mesh(7), Err(MeshError::Level(7))));
    }

    #[test]
    fn deck_words_reproduce_positions() {
        let m = build_octagon_mesh(2).unwrap();
        for v in 0..m.vertex_count() {
            let rep = m.representatives[m.orbit[v]];
            let p = octagon::disk_act(&disk_matrix(&m.deck[v]), m.positions[rep]);
            assert!((p - m.positions[v]).norm() < 1e-9, "vertex {v}");
        }
        // all eight corners form one orbit
        let corners: Vec<usize> = (1..=8).map(|v| m.orbit[v]).collect();
        assert!(corners.iter().all(|&o| o == corners[0]));
    }

    #[test]
    fn dual_graph_is_closed() {
        let m = build_octagon_mesh(2).unwrap();
        for (t, a) in m.adjacency.iter().enumerate() {
            for (i, &o) in a.iter().enumerate() {
                assert!(m.adjacency[o].contains(&t));
                assert!(m.edge_of[o].contains(&m.edge_of[t][i]));
            }
        }
    }

    #[test]
    fn areas_sum_to_4pi() {
        for level in 1..=3 {
            let m = build_octagon_mesh(level).unwrap();
            let total: f64 = (0..m.triangles.len()).map(|t| m.hyperbolic_area(t)).sum();
            assert!((total - 4.0 * PI).abs() < 1e-8, "level {level}: {total}");
        }
    }

    #[test]
    fn comparison_area_decreases_towards_4pi() {
        let areas: Vec<f64> = (1..=3)
            .map(|l| {
                let m = build_octagon_mesh(l).unwrap();
                (0..m.triangles.len()).map(|t| m.comparison_area(t)).sum()
            })
            .collect();
        assert!(areas.windows(2).all(|w| w[1] < w[0]), "{areas:?}");
        assert!(areas.iter().all(|&a| a > 4.0 * PI));
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("degenlab-mesh-{}", std::process::id()));
        let (a, hit) = cached_octagon_mesh(&dir, 1).unwrap();
        assert!(!hit);
        let (b, hit) = cached_octagon_mesh(&dir, 1).unwrap();
        assert!(hit);
        assert_eq!(a, b);
        std::fs::write(mesh_cache_path(&dir, 1), "{}").unwrap();
        assert!(!cached_octagon_mesh(&dir, 1).unwrap().1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
