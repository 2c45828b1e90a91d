//! Finite metric trees with exact rational edge lengths: distances, folds,
//! morphisms, fold validity at cone points, and length-function axioms for
//! spectra.

use std::collections::VecDeque;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charvar::LengthSpectrum;
use crate::words::{ConjClassSet, Presentation, Word};

pub type Q = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("edge {0} has nonpositive length")]
    EdgeLength(usize),
    #[error("edge {0} references a missing vertex")]
    MissingVertex(usize),
    #[error("graph is not a tree ({vertices} vertices, {edges} edges, connected: {connected})")]
    NotATree { vertices: usize, edges: usize, connected: bool },
    #[error("directions must be two distinct edges at the fold vertex")]
    Direction,
    #[error("fold length {length} exceeds the first edge ({available}) in one of the directions")]
    FoldLength { length: Q, available: Q },
    #[error("invalid map: {0}")]
    InvalidMap(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: Q,
}

/// Finite tree with positive rational edge lengths. Incident edges at a
/// vertex are kept in insertion order, which serves as the cyclic order of
/// directions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TreeJson", into = "TreeJson")]
pub struct MetricTree {
    vertices: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    vertices: usize,
    edges: Vec<(usize, usize, Q)>,
}

impl TryFrom<TreeJson> for MetricTree {
    type Error = TreeError;
    fn try_from(j: TreeJson) -> Result<Self, TreeError> {
        MetricTree::new(j.vertices, j.edges)
    }
}

impl From<MetricTree> for TreeJson {
    fn from(t: MetricTree) -> Self {
        TreeJson { vertices: t.vertices, edges: t.edges.iter().map(|e| (e.u, e.v, e.length)).collect() }
    }
}

/// A point of a tree: a vertex, or a point at `offset` from `u` along an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Point {
    Vertex(usize),
    OnEdge { edge: usize, offset: Q },
}

impl MetricTree {
    pub fn new(vertices: usize, edges: Vec<(usize, usize, Q)>) -> Result<Self, TreeError> {
        let mut adjacency = vec![Vec::new(); vertices];
        let mut out = Vec::with_capacity(edges.len());
        for (i, &(u, v, length)) in edges.iter().enumerate() {
            if u >= vertices || v >= vertices {
                return Err(TreeError::MissingVertex(i));
            }
            if length <= Q::zero() {
                return Err(TreeError::EdgeLength(i));
            }
            adjacency[u].push(i);
            adjacency[v].push(i);
            out.push(Edge { u, v, length });
        }
        let t = MetricTree { vertices, edges: out, adjacency };
        let connected = vertices > 0 && t.bfs(0).iter().all(Option::is_some);
        if !connected || edges.len() + 1 != vertices {
            return Err(TreeError::NotATree { vertices, edges: edges.len(), connected });
        }
        Ok(t)
    }

    /// Star with the given leg lengths; vertex 0 is the centre.
    pub fn star(legs: &[Q]) -> Result<Self, TreeError> {
        MetricTree::new(legs.len() + 1, legs.iter().enumerate().map(|(i, &l)| (0, i + 1, l)).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Incident edges at `v` in cyclic order.
    pub fn directions(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    fn other(&self, e: usize, v: usize) -> usize {
        let edge = &self.edges[e];
        if edge.u == v {
            edge.v
        } else {
            edge.u
        }
    }

    /// Per vertex, `(distance, edge used to arrive)` from `root`.
    fn bfs(&self, root: usize) -> Vec<Option<(Q, Option<usize>)>> {
        let mut dist = vec![None; self.vertices];
        dist[root] = Some((Q::zero(), None));
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].expect("visited").0;
            for &e in &self.adjacency[x] {
                let y = self.other(e, x);
                if dist[y].is_none() {
                    dist[y] = Some((dx + self.edges[e].length, Some(e)));
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn vertex_distance(&self, x: usize, y: usize) -> Q {
        self.bfs(x)[y].expect("tree is connected").0
    }

    /// Edges on the path from `x` to `y`, in order.
    pub fn path(&self, x: usize, y: usize) -> Vec<usize> {
        let tree = self.bfs(x);
        let mut out = Vec::new();
        let mut cur = y;
        while let Some((_, Some(e))) = tree[cur] {
            out.push(e);
            cur = self.other(e, cur);
        }
        out.reverse();
        out
    }

    /// `(vertex, distance)` pairs that a geodesic from `p` must leave through.
    fn exits(&self, p: Point) -> Vec<(usize, Q)> {
        match p {
            Point::Vertex(v) => vec![(v, Q::zero())],
            Point::OnEdge { edge, offset } => {
                let e = &self.edges[edge];
                vec![(e.u, offset), (e.v, e.length - offset)]
            }
        }
    }

    pub fn distance(&self, x: Point, y: Point) -> Q {
        if let (Point::OnEdge { edge: a, offset: s }, Point::OnEdge { edge: b, offset: t }) = (x, y) {
            if a == b {
                return (s - t).abs();
            }
        }
        let mut best: Option<Q> = None;
        for (u, du) in self.exits(x) {
            let dist = self.bfs(u);
            for (v, dv) in self.exits(y) {
                let d = du + dist[v].expect("connected").0 + dv;
                if best.is_none_or(|b| d < b) {
                    best = Some(d);
                }
            }
        }
        best.expect("points have exits")
    }

    pub fn check_point(&self, p: Point) -> bool {
        match p {
            Point::Vertex(v) => v < self.vertices,
            Point::OnEdge { edge, offset } => {
                edge < self.edges.len() && offset > Q::zero() && offset < self.edges[edge].length
            }
        }
    }
}

/// Result of a fold: the folded tree and the quotient map onto it.
#[derive(Clone, Debug, PartialEq)]
pub struct Folded {
    pub tree: MetricTree,
    pub quotient: TreeMap,
}

/// Identifies the initial segments of length `length` of the edges `d1`,
/// `d2` at `v`.
pub fn fold(t: &MetricTree, v: usize, d1: usize, d2: usize, length: Q) -> Result<Folded, TreeError> {
    let dirs = t.directions(v);
    if d1 == d2 || !dirs.contains(&d1) || !dirs.contains(&d2) {
        return Err(TreeError::Direction);
    }
    let (l1, l2) = (t.edges[d1].length, t.edges[d2].length);
    let available = l1.min(l2);
    if length > available || length < Q::zero() {
        return Err(TreeError::FoldLength { length, available });
    }
    let identity = || Folded { tree: t.clone(), quotient: TreeMap::identity(t) };
    if length.is_zero() {
        return Ok(identity());
    }
    let (x1, x2) = (t.other(d1, v), t.other(d2, v));
    // new vertex list: old vertices, then subdivision points
    let mut vertices = t.vertices;
    let mut edges: Vec<(usize, usize, Q)> = Vec::new();
    let mut image: Vec<usize> = (0..t.vertices).collect();
    let p1 = if length < l1 {
        vertices += 1;
        vertices - 1
    } else {
        x1
    };
    // p2 is merged into p1
    let p2_image = p1;
    for (i, e) in t.edges.iter().enumerate() {
        if i == d1 {
            edges.push((v, p1, length));
            if length < l1 {
                edges.push((p1, x1, l1 - length));
            }
        } else if i == d2 {
            if length < l2 {
                edges.push((p2_image, x2, l2 - length));
            }
        } else {
            edges.push((e.u, e.v, e.length));
        }
    }
    if length == l2 {
        image[x2] = p2_image;
    }
    // compact vertex ids: drop x2 if it was merged
    let merged = (length == l2).then_some(x2);
    let relabel = |x: usize| -> usize {
        match merged {
            Some(m) if x == m => p1 - usize::from(p1 > m),
            Some(m) if x > m => x - 1,
            _ => x,
        }
    };
    let edges: Vec<(usize, usize, Q)> = edges.into_iter().map(|(a, b, l)| (relabel(a), relabel(b), l)).collect();
    let count = vertices - usize::from(merged.is_some());
    let tree = MetricTree::new(count, edges)?;
    let images = image.into_iter().map(|x| Point::Vertex(relabel(x))).collect();
    let quotient = TreeMap::new(t.clone(), tree.clone(), images)?;
    Ok(Folded { tree, quotient })
}

/// Map between trees given by vertex images, linear along each edge onto
/// the geodesic between the endpoint images.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeMap {
    pub domain: MetricTree,
    pub codomain: MetricTree,
    pub vertex_images: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismReport {
    pub is_morphism: bool,
    /// Edges mapped with speed other than 1.
    pub non_isometric: Vec<usize>,
    /// Domain vertices where two incident edges leave in the same direction.
    pub fold_locus: Vec<usize>,
}

impl TreeMap {
    pub fn new(domain: MetricTree, codomain: MetricTree, vertex_images: Vec<Point>) -> Result<Self, TreeError> {
        if vertex_images.len() != domain.vertex_count() {
            return Err(TreeError::InvalidMap(format!(
                "{} vertex images for {} vertices",
                vertex_images.len(),
                domain.vertex_count()
            )));
        }
        if let Some(i) = vertex_images.iter().position(|&p| !codomain.check_point(p)) {
            return Err(TreeError::InvalidMap(format!("image of vertex {i} is not a point of the codomain")));
        }
        Ok(TreeMap { domain, codomain, vertex_images })
    }

    pub fn identity(t: &MetricTree) -> Self {
        TreeMap {
            domain: t.clone(),
            codomain: t.clone(),
            vertex_images: (0..t.vertex_count()).map(Point::Vertex).collect(),
        }
    }

    /// First step of the geodesic from `from` towards `to` in the codomain,
    /// as an edge and a sign (towards the edge's `v` when true).
    fn germ(&self, from: Point, to: Point) -> Option<(usize, bool)> {
        let c = &self.codomain;
        match from {
            Point::OnEdge { edge, offset } => {
                let e = &c.edges[edge];
                let via_v = c.distance(Point::Vertex(e.v), to) + (e.length - offset);
                Some((edge, via_v == c.distance(from, to)))
            }
            Point::Vertex(x) => {
                if from == to {
                    return None;
                }
                if let Point::OnEdge { edge, offset } = to {
                    let e = &c.edges[edge];
                    if e.u == x || e.v == x {
                        let d_direct = if e.u == x { offset } else { e.length - offset };
                        if d_direct == c.distance(from, to) {
                            return Some((edge, e.u == x));
                        }
                    }
                }
                let target = match to {
                    Point::Vertex(y) => y,
                    Point::OnEdge { edge, offset } => {
                        let e = &c.edges[edge];
                        let du = c.distance(from, Point::Vertex(e.u)) + offset;
                        if du == c.distance(from, to) {
                            e.u
                        } else {
                            e.v
                        }
                    }
                };
                let first = *c.path(x, target).first()?;
                Some((first, c.edges[first].u == x))
            }
        }
    }

    pub fn report(&self) -> MorphismReport {
        let d = &self.domain;
        let mut non_isometric = Vec::new();
        for (i, e) in d.edges.iter().enumerate() {
            let (a, b) = (self.vertex_images[e.u], self.vertex_images[e.v]);
            if self.codomain.distance(a, b) != e.length {
                non_isometric.push(i);
            }
        }
        let mut fold_locus = Vec::new();
        for w in 0..d.vertex_count() {
            let here = self.vertex_images[w];
            let germs: Vec<Option<(usize, bool)>> = d
                .directions(w)
                .iter()
                .filter(|e| !non_isometric.contains(e))
                .map(|&e| self.germ(here, self.vertex_images[d.other(e, w)]))
                .collect();
            let clash =
                (0..germs.len()).any(|i| (i + 1..germs.len()).any(|j| germs[i].is_some() && germs[i] == germs[j]));
            if clash {
                fold_locus.push(w);
            }
        }
        MorphismReport { is_morphism: non_isometric.is_empty(), non_isometric, fold_locus }
    }
}

/// `is_morphism` with the fold locus.
pub fn is_morphism(m: &TreeMap) -> (bool, Vec<usize>) {
    let r = m.report();
    (r.is_morphism, r.fold_locus)
}

/// Folding the listed direction pairs at a vertex with `prong_count`
/// cyclically ordered prongs is allowed only if no pair is cyclically
/// adjacent. A vertex whose degree differs from `prong_count` never admits a
/// fold.
pub fn check_fold_validity(t: &MetricTree, v: usize, prong_count: usize, folded_pairs: &[(usize, usize)]) -> bool {
    if v >= t.vertex_count() || t.degree(v) != prong_count {
        return false;
    }
    folded_pairs.iter().all(|&(i, j)| {
        i != j && i < prong_count && j < prong_count && {
            let gap = (i + prong_count - j) % prong_count;
            gap != 1 && gap != prong_count - 1
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxiomKind {
    Inverse,
    Conjugation,
    Power(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub class: Word,
    pub kind: AxiomKind,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AxiomReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    pub max_defect: f64,
}

impl AxiomReport {
    fn record(&mut self, class: &Word, kind: AxiomKind, magnitude: f64, tol: f64) {
        self.checked += 1;
        self.max_defect = self.max_defect.max(magnitude);
        if magnitude > tol {
            self.violations.push(Violation { class: class.clone(), kind, magnitude });
        }
    }

    pub fn merge(mut self, other: AxiomReport) -> AxiomReport {
        self.checked += other.checked;
        self.max_defect = self.max_defect.max(other.max_defect);
        self.violations.extend(other.violations);
        self
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn exact_or_float(s: &LengthSpectrum, i: usize) -> (f64, Option<Q>) {
    (s.values[i], s.exact.as_ref().map(|e| e[i]))
}

/// Power law `ℓ(gⁿ) = n ℓ(g)` and inversion wherever both classes are in
/// `C`. Exact spectra are compared exactly; others within `tol`.
pub fn check_length_axioms(s: &LengthSpectrum, classes: &ConjClassSet, tol: f64) -> AxiomReport {
    let mut report = AxiomReport::default();
    let tol = if s.exact.is_some() { 0.0 } else { tol };
    for (i, g) in classes.classes().iter().enumerate() {
        let (v, ve) = exact_or_float(s, i);
        if let Some(j) = classes.position(&g.inverse()) {
            let (w, we) = exact_or_float(s, j);
            let m = match (ve, we) {
                (Some(a), Some(b)) => q_to_f64((a - b).abs()),
                _ => (v - w).abs(),
            };
            report.record(g, AxiomKind::Inverse, m, tol);
        }
        let mut n = 2u32;
        while g.len() * n as usize <= classes.max_length() {
            if let Some(j) = classes.position(&g.pow(n as usize)) {
                let (w, we) = exact_or_float(s, j);
                let m = match (ve, we) {
                    (Some(a), Some(b)) => q_to_f64((b - a * Q::from_integer(n as i64)).abs()),
                    _ => (w - n as f64 * v).abs(),
                };
                report.record(g, AxiomKind::Power(n), m, tol);
            }
            n += 1;
        }
    }
    report
}

/// Conjugation invariance against an independent evaluator on raw words:
/// `eval(h g h⁻¹)` and `eval(g⁻¹)` must equal the stored value of `g` for
/// every generator letter `h`.
pub fn check_conjugation<F>(
    s: &LengthSpectrum,
    classes: &ConjClassSet,
    presentation: &Presentation,
    eval: F,
    tol: f64,
) -> AxiomReport
where
    F: Fn(&Word) -> f64,
{
    let mut report = AxiomReport::default();
    let letters = presentation.alphabet();
    for (i, g) in classes.classes().iter().enumerate() {
        let v = s.values[i];
        for &h in &letters {
            let conj = Word::from_letters(vec![h]).mul(g).mul(&Word::from_letters(vec![h.inverse()]));
            report.record(g, AxiomKind::Conjugation, (eval(&conj) - v).abs(), tol);
        }
        report.record(g, AxiomKind::Inverse, (eval(&g.inverse()) - v).abs(), tol);
    }
    report
}

fn q_to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    fn tripod() -> MetricTree {
        MetricTree::star(&[q(1), q(1), q(1)]).unwrap()
    }

    fn random_tree(rng: &mut impl Rng, n: usize) -> MetricTree {
        let edges =
            (1..n).map(|i| (rng.gen_range(0..i), i, Q::new(rng.gen_range(1..7), rng.gen_range(1..4)))).collect();
        MetricTree::new(n, edges).unwrap()
    }

    #[test]
    fn distance_examples() {
        let t = tripod();
        assert_eq!(t.vertex_distance(2, 2), q(0));
        assert_eq!(t.vertex_distance(1, 2), q(2));
        let mid = Point::OnEdge { edge: 0, offset: Q::new(1, 2) };
        assert_eq!(t.distance(mid, Point::Vertex(3)), Q::new(3, 2));
        assert_eq!(t.distance(mid, Point::OnEdge { edge: 0, offset: Q::new(1, 4) }), Q::new(1, 4));
    }

    #[test]
    fn four_point_condition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = rng.gen_range(4..=8);
            let t = random_tree(&mut rng, n);
            let d = |a, b| t.vertex_distance(a, b);
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        for w in 0..n {
                            let mut s = [d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)];
                            s.sort();
                            assert_eq!(s[1], s[2]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_trees() {
        assert!(matches!(MetricTree::new(3, vec![(0, 1, q(1))]), Err(TreeError::NotATree { .. })));
        assert!(matches!(MetricTree::new(2, vec![(0, 1, q(0))]), Err(TreeError::EdgeLength(0))));
        assert!(MetricTree::new(3, vec![(0, 1, q(1)), (1, 0, q(1))]).is_err());
    }

    #[test]
    fn fold_tripod_fully() {
        let t = tripod();
        let f = fold(&t, 0, 0, 1, q(1)).unwrap();
        assert_eq!(f.tree.vertex_count(), 3);
        assert_eq!(f.tree.edges().len(), 2);
        // both folded leaves land on the same point
        assert_eq!(f.quotient.vertex_images[1], f.quotient.vertex_images[2]);
        let (ok, locus) = is_morphism(&f.quotient);
        assert!(ok);
        assert_eq!(locus, vec![0]);
    }

    #[test]
    fn fold_zero_is_identity() {
        let t = tripod();
        let f = fold(&t, 0, 0, 2, q(0)).unwrap();
        assert_eq!(f.tree, t);
        assert_eq!(is_morphism(&f.quotient), (true, vec![]));
    }

    #[test]
    fn fold_errors() {
        let t = MetricTree::star(&[q(1), q(2)]).unwrap();
        assert!(matches!(fold(&t, 0, 0, 1, q(3)), Err(TreeError::FoldLength { .. })));
        assert_eq!(fold(&t, 0, 0, 0, q(1)), Err(TreeError::Direction));
    }

    #[test]
    fn folds_do_not_increase_distance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let n = rng.gen_range(3..=8);
            let t = random_tree(&mut rng, n);
            let Some(v) = (0..n).find(|&v| t.degree(v) >= 2) else {
                continue;
            };
            let dirs = t.directions(v).to_vec();
            let (d1, d2) = (dirs[0], dirs[1]);
            let max = t.edges()[d1].length.min(t.edges()[d2].length);
            let length = max * Q::new(rng.gen_range(1..=4), 4);
            let f = fold(&t, v, d1, d2, length).unwrap();
            let img = &f.quotient.vertex_images;
            for x in 0..n {
                for y in 0..n {
                    assert!(f.tree.distance(img[x], img[y]) <= t.vertex_distance(x, y));
                }
            }
            let r = f.quotient.report();
            assert!(r.is_morphism);
            assert_eq!(r.fold_locus, vec![v]);
        }
    }

    #[test]
    fn collapsing_map_is_not_a_morphism() {
        let t = tripod();
        let point = MetricTree::new(1, vec![]).unwrap();
        let m = TreeMap::new(t.clone(), point, vec![Point::Vertex(0); 4]).unwrap();
        assert!(!is_morphism(&m).0);
        assert!(TreeMap::new(t.clone(), t.clone(), vec![Point::Vertex(9); 4]).is_err());
        assert!(TreeMap::new(t.clone(), t, vec![Point::Vertex(0); 2]).is_err());
    }

    #[test]
    fn fold_validity_examples() {
        for k in 3..=8 {
            let t = MetricTree::star(&vec![q(1); k]).unwrap();
            for i in 0..k {
                for j in 0..k {
                    let adjacent = (i + 1) % k == j || (j + 1) % k == i;
                    let expected = i != j && !adjacent;
                    assert_eq!(check_fold_validity(&t, 0, k, &[(i, j)]), expected, "k={k} ({i},{j})");
                    if k == 3 {
                        assert!(!check_fold_validity(&t, 0, k, &[(i, j)]));
                    }
                }
            }
        }
        let t4 = MetricTree::star(&[q(1); 4]).unwrap();
        assert!(check_fold_validity(&t4, 0, 4, &[(0, 2)]));
        assert!(!check_fold_validity(&t4, 0, 4, &[(0, 1)]));
        assert!(!check_fold_validity(&t4, 0, 5, &[(0, 2)]));
    }

    #[test]
    fn json_roundtrip() {
        let t = tripod();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<MetricTree>(&s).unwrap(), t);
        assert!(serde_json::from_str::<MetricTree>(r#"{"vertices":2,"edges":[[0,1,[0,1]]]}"#).is_err());
    }
}
