//! Lengths of closed curves measured through a discrete map.
//!
//! A class `w` is lifted to a tube of mesh tiles around the axis of `w` in the
//! disk. Tile vertices and edge midpoints form a graph whose edges carry the
//! ℍ³ distance between images; the shortest path from a node `x` to `w·x`
//! bounds `ℓ_u([w])` from above and `ℓ_ρ(w)` from below.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mesh::disk_matrix;
use super::solver::EquivariantMap;
use crate::octagon;
use crate::sl2c::{self, act_unchecked, dist, H3Point, Mobius};
use crate::words::Word;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PullbackError {
    #[error("word {0} is not hyperbolic in the base surface group")]
    NotHyperbolic(String),
    #[error("no start vertex of the tube has its translate in the tube")]
    Marking,
    #[error("vertex chain does not close up under the word")]
    OpenChain,
    #[error("vertex chain is empty")]
    EmptyChain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackOptions {
    /// Hyperbolic radius of the tube around the axis, in the disk.
    pub tube_radius: f64,
    /// Extra axial length beyond one period on each side.
    pub margin: f64,
    /// Number of start vertices tried.
    pub starts: usize,
    /// Add edge midpoints as path nodes.
    pub steiner: bool,
}

impl Default for PullbackOptions {
    fn default() -> Self {
        PullbackOptions { tube_radius: 1.5, margin: 1.0, starts: 8, steiner: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackLength {
    pub length: f64,
    /// `ℓ_ρ(w)`.
    pub translation_length: f64,
    /// Images along the best path, from `u(x)` to `ρ(w) u(x)`.
    pub path: Vec<H3Point>,
    pub tiles: usize,
}

/// A vertex of the universal cover: the copy `copy` moved by the deck word
/// `lift`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedVertex {
    pub lift: Word,
    pub copy: usize,
}

/// Axial and radial coordinates relative to a disk geodesic.
struct AxisChart {
    inverse: Mobius,
}

impl AxisChart {
    fn new(w: &Mobius) -> Option<Self> {
        let up = octagon::disk_to_upper_matrix(w);
        let [p0, p1] = up.fixed_points();
        let frame = match (p0, p1) {
            (Some(a), Some(b)) if (a - b).norm() > 1e-12 => sl2c::axis_frame(a, Some(b)),
            (Some(a), None) | (None, Some(a)) => sl2c::axis_frame(a, None),
            _ => return None,
        };
        Some(AxisChart { inverse: frame.inverse() })
    }

    /// `(axial coordinate, distance to the axis)`.
    fn coords(&self, z: Complex64) -> (f64, f64) {
        let w = octagon::disk_act(&self.inverse, octagon::disk_to_upper(z));
        (w.norm().ln(), (w.re.abs() / w.im.abs()).asinh())
    }
}

fn node_key(chart: &AxisChart, z: Complex64) -> (i64, i64) {
    let (s, r) = chart.coords(z);
    let w = octagon::disk_act(&chart.inverse, octagon::disk_to_upper(z));
    ((s * 1e6).round() as i64, (r.copysign(w.re) * 1e6).round() as i64)
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

struct Graph {
    position: Vec<Complex64>,
    image: Vec<H3Point>,
    is_vertex: Vec<bool>,
    adjacent: Vec<Vec<(usize, f64)>>,
    index: HashMap<(i64, i64), usize>,
}

impl Graph {
    fn node(&mut self, chart: &AxisChart, z: Complex64, image: impl FnOnce() -> H3Point, is_vertex: bool) -> usize {
        let k = node_key(chart, z);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        self.position.push(z);
        self.image.push(image());
        self.is_vertex.push(is_vertex);
        self.adjacent.push(Vec::new());
        self.index.insert(k, self.position.len() - 1);
        self.position.len() - 1
    }

    fn link(&mut self, a: usize, b: usize) {
        if a != b && !self.adjacent[a].iter().any(|&(x, _)| x == b) {
            let d = dist(&self.image[a], &self.image[b]);
            self.adjacent[a].push((b, d));
            self.adjacent[b].push((a, d));
        }
    }

    fn shortest(&self, from: usize, to: usize) -> Option<(f64, Vec<usize>)> {
        let mut d = vec![f64::INFINITY; self.position.len()];
        let mut prev = vec![usize::MAX; self.position.len()];
        let mut heap = BinaryHeap::from([Entry(0.0, from)]);
        d[from] = 0.0;
        while let Some(Entry(dv, v)) = heap.pop() {
            if v == to {
                break;
            }
            if dv > d[v] {
                continue;
            }
            for &(x, w) in &self.adjacent[v] {
                if dv + w < d[x] {
                    d[x] = dv + w;
                    prev[x] = v;
                    heap.push(Entry(dv + w, x));
                }
            }
        }
        if !d[to].is_finite() {
            return None;
        }
        let mut path = vec![to];
        while *path.last().unwrap() != from {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Some((d[to], path))
    }
}

/// `ℓ_u([w])` minimized over edge paths inside a tube around the axis of `w`.
pub fn pullback_length(u: &EquivariantMap, w: &Word, opts: &PullbackOptions) -> Result<PullbackLength, PullbackError> {
    let w = w.cyclic_reduce();
    let translation_length = sl2c::translation_length(&u.rep.evaluate(&w));
    let wd = disk_matrix(&w);
    let period = sl2c::translation_length(&wd);
    let chart =
        AxisChart::new(&wd).filter(|_| period > 1e-9).ok_or_else(|| PullbackError::NotHyperbolic(w.to_string()))?;
    let m = &u.mesh;
    let copy_img = u.copy_images();
    let centroid = |g: &Mobius, t: usize| -> Complex64 {
        octagon::disk_act(g, m.triangles[t].iter().map(|&c| m.positions[c]).sum::<Complex64>() / 3.0)
    };

    // seed: the base tile closest to the axis
    let seed = (0..m.triangles.len())
        .min_by(|&a, &b| {
            chart.coords(centroid(&Mobius::IDENTITY, a)).1.total_cmp(&chart.coords(centroid(&Mobius::IDENTITY, b)).1)
        })
        .expect("mesh has triangles");
    let s0 = chart.coords(centroid(&Mobius::IDENTITY, seed)).0;
    let (lo, hi) = (s0 - period - opts.margin, s0 + period + opts.margin);
    let inside = |z: Complex64| {
        let (s, r) = chart.coords(z);
        r <= opts.tube_radius && s >= lo && s <= hi
    };

    // tiles: (triangle, disk isometry, its ρ-image)
    let mut tiles: Vec<(usize, Mobius, Mobius)> = Vec::new();
    let mut seen: HashMap<(usize, (i64, i64)), ()> = HashMap::new();
    let mut queue = VecDeque::from([(seed, Mobius::IDENTITY, Mobius::IDENTITY)]);
    seen.insert((seed, node_key(&chart, centroid(&Mobius::IDENTITY, seed))), ());
    while let Some((t, g, r)) = queue.pop_front() {
        tiles.push((t, g, r));
        for i in 0..3 {
            let o = m.adjacency[t][i];
            let j = (0..3).find(|&j| m.edge_of[o][j] == m.edge_of[t][i] && m.adjacency[o][j] == t).expect("mate side");
            // copies u (side i of t) and u' (side j of o) are the same point
            let step = m.deck[m.triangles[t][i]].mul(&m.deck[m.triangles[o][(j + 1) % 3]].inverse());
            let g2 = g * disk_matrix(&step);
            let c = centroid(&g2, o);
            if !inside(c) {
                continue;
            }
            if seen.insert((o, node_key(&chart, c)), ()).is_none() {
                queue.push_back((o, g2, r * u.rep.evaluate(&step)));
            }
        }
    }

    let mut graph = Graph {
        position: Vec::new(),
        image: Vec::new(),
        is_vertex: Vec::new(),
        adjacent: Vec::new(),
        index: HashMap::new(),
    };
    for (t, g, r) in &tiles {
        let tri = m.triangles[*t];
        let mut nodes: Vec<usize> = tri
            .iter()
            .map(|&c| graph.node(&chart, octagon::disk_act(g, m.positions[c]), || act_unchecked(r, &copy_img[c]), true))
            .collect();
        if opts.steiner {
            for i in 0..3 {
                let (a, b) = (nodes[i], nodes[(i + 1) % 3]);
                let (pa, pb) = (graph.position[a], graph.position[b]);
                let (ia, ib) = (graph.image[a], graph.image[b]);
                let (ia, ib) = if node_key(&chart, pa) <= node_key(&chart, pb) { (ia, ib) } else { (ib, ia) };
                let mid = octagon::disk_geodesic_point(pa, pb, 0.5);
                nodes.push(graph.node(&chart, mid, || sl2c::geodesic_point(&ia, &ib, 0.5), false));
            }
        }
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                graph.link(nodes[a], nodes[b]);
            }
        }
    }

    // start vertices near the seed with the smallest image displacement
    let rw = u.rep.evaluate(&w);
    let mut starts: Vec<(f64, usize, usize)> = (0..graph.position.len())
        .filter(|&v| {
            graph.is_vertex[v] && (chart.coords(graph.position[v]).0 - s0).abs() <= 0.5 * opts.margin.max(period)
        })
        .filter_map(|v| {
            let target = *graph.index.get(&node_key(&chart, octagon::disk_act(&wd, graph.position[v])))?;
            Some((dist(&act_unchecked(&rw, &graph.image[v]), &graph.image[v]), v, target))
        })
        .collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = starts
        .iter()
        .take(opts.starts.max(1))
        .filter_map(|&(_, v, target)| graph.shortest(v, target))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(PullbackError::Marking)?;
    Ok(PullbackLength {
        length: best.0,
        translation_length,
        path: best.1.iter().map(|&v| graph.image[v]).collect(),
        tiles: tiles.len(),
    })
}

/// ℍ³ length of the image of a vertex chain in the universal cover; the last
/// vertex must be `w` applied to the first.
pub fn chain_length(u: &EquivariantMap, w: &Word, chain: &[LiftedVertex]) -> Result<f64, PullbackError> {
    let (first, last) =
        (chain.first().ok_or(PullbackError::EmptyChain)?, chain.last().ok_or(PullbackError::EmptyChain)?);
    let m = &u.mesh;
    let pos = |v: &LiftedVertex| octagon::disk_act(&disk_matrix(&v.lift), m.positions[v.copy]);
    if (octagon::disk_act(&disk_matrix(w), pos(first)) - pos(last)).norm() > 1e-8
        || m.orbit[first.copy] != m.orbit[last.copy]
    {
        return Err(PullbackError::OpenChain);
    }
    let img: Vec<H3Point> = chain
        .iter()
        .map(|v| act_unchecked(&u.rep.evaluate(&v.lift.mul(&m.deck[v.copy])), &u.images[m.orbit[v.copy]]))
        .collect();
    Ok(img.windows(2).map(|p| dist(&p[0], &p[1])).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charvar::{fuchsian_base, twist_family, Representation};
    use crate::harmonic::{build_octagon_mesh, solve_harmonic, SolveOptions};
    use crate::words::{enumerate_classes, Presentation};
    use std::sync::Arc;

    fn solved(level: usize, rep: Representation) -> EquivariantMap {
        let m = Arc::new(build_octagon_mesh(level).unwrap());
        let u = EquivariantMap::fuchsian_embedding(m, rep).unwrap();
        solve_harmonic(u, &SolveOptions { tol: 1e-12, relax: 1.5, ..Default::default() }).unwrap().0
    }

    #[test]
    fn identity_map_recovers_translation_lengths() {
        let u = solved(3, fuchsian_base(2).unwrap());
        let classes = enumerate_classes(&Presentation::new(2).unwrap(), 2);
        for w in classes.classes() {
            let r = pullback_length(&u, w, &PullbackOptions::default()).unwrap();
            assert!(r.length >= r.translation_length - 1e-6);
            assert!(r.length <= 1.1 * r.translation_length, "{w}: {} vs {}", r.length, r.translation_length);
        }
    }

    #[test]
    fn twisted_map_respects_the_lower_bound() {
        let rep = twist_family(&fuchsian_base(2).unwrap(), 1, 4.0).unwrap();
        let u = solved(2, rep);
        let classes = enumerate_classes(&Presentation::new(2).unwrap(), 3);
        for w in classes.classes() {
            let r = pullback_length(&u, w, &PullbackOptions::default()).unwrap();
            assert!(r.length >= r.translation_length - 1e-6, "{w}");
            let a = sl2c::axis_defect(&r.path, &u.rep.evaluate(w)).unwrap();
            assert!(a >= -1e-6);
        }
    }

    #[test]
    fn constant_map_gives_zero() {
        let m = Arc::new(build_octagon_mesh(1).unwrap());
        let rep = Representation::new(Presentation::new(2).unwrap(), vec![Mobius::IDENTITY; 4]).unwrap();
        let u = EquivariantMap::constant(m, rep, H3Point::ORIGIN).unwrap();
        let w: Word = "a1b1".parse().unwrap();
        assert_eq!(pullback_length(&u, &w, &PullbackOptions::default()).unwrap().length, 0.0);
    }

    #[test]
    fn chains_must_close_up() {
        let u = solved(0, fuchsian_base(2).unwrap());
        let w: Word = "a1".parse().unwrap();
        let v = LiftedVertex { lift: Word::empty(), copy: 0 };
        let wv = LiftedVertex { lift: w.clone(), copy: 0 };
        let len = chain_length(&u, &w, &[v.clone(), wv]).unwrap();
        assert!(len >= sl2c::translation_length(&u.rep.evaluate(&w)) - 1e-9);
        assert_eq!(chain_length(&u, &w, &[v.clone(), v]), Err(PullbackError::OpenChain));
        assert!(pullback_length(&u, &Word::empty(), &PullbackOptions::default()).is_err());
    }
}
