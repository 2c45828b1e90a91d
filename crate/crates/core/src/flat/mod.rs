//! Square-tiled half-translation surfaces as concrete quadratic
//! differentials.
//!
//! A surface is `n` unit squares with each side glued to exactly one other
//! side, either by a translation (right to left, top to bottom) or by a
//! rotation by π (a side to the same side of another square). Lengths scale
//! by `sqrt(scale)` and areas by `scale`.

mod catalog;
mod marking;
mod spectrum;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{l_surface, one_cylinder_surface};
pub use marking::{EdgePath, Marking, OrientedSide, Token};
pub use spectrum::{
    abelian_length_spectrum, abelian_periods, flat_length_of, flat_length_spectrum, flat_length_spectrum_with,
    AbelianPeriods,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlatError {
    #[error("{0}")]
    Gluing(String),
    #[error("surface is not connected")]
    Disconnected,
    #[error("genus {0} is below 2")]
    GenusTooSmall(usize),
    #[error("scale must be positive, got {0}")]
    Scale(f64),
    #[error("bad edge path token {0:?}")]
    PathSyntax(String),
    #[error("edge path is not continuous at step {0}")]
    Discontinuous(usize),
    #[error("path passes through the cone point at vertex {vertex} between segments {step} and {next}", next = step + 1)]
    SplitAtSingularity { vertex: usize, step: usize },
    #[error("marking: {0}")]
    Marking(String),
    #[error("surface has rotation gluings; abelian periods need a translation surface")]
    NotAbelian,
    #[error(transparent)]
    Word(#[from] crate::words::WordError),
}

/// Square sides in counterclockwise order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    B = 0,
    R = 1,
    T = 2,
    L = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::B, Side::R, Side::T, Side::L];

    pub fn from_index(i: usize) -> Side {
        Side::ALL[i % 4]
    }

    pub fn opposite(self) -> Side {
        Side::from_index(self as usize + 2)
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::B | Side::T)
    }

    /// Corners `(start, end)` when traversed rightward or upward. Corners are
    /// numbered 0 = BL, 1 = BR, 2 = TR, 3 = TL.
    pub fn corners(self) -> (usize, usize) {
        match self {
            Side::B => (0, 1),
            Side::R => (1, 2),
            Side::T => (3, 2),
            Side::L => (0, 3),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Side::B => 'B',
            Side::R => 'R',
            Side::T => 'T',
            Side::L => 'L',
        }
    }
}

/// Measure convention: transverse measure `|dx|` of the vertical foliation
/// or `|dy|` of the horizontal one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Dx,
    Dy,
}

impl std::str::FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dx" => Ok(Convention::Dx),
            "dy" => Ok(Convention::Dy),
            _ => Err(format!("unknown convention {s:?} (expected dx or dy)")),
        }
    }
}

/// `(square, side)` glued to this side.
pub type SideRef = (usize, Side);

#[derive(Clone, Debug, PartialEq)]
pub struct SquareTiledSurface {
    n: usize,
    glue: Vec<[SideRef; 4]>,
    vertex_of: Vec<[usize; 4]>,
    vertex_corners: Vec<usize>,
    marking: Option<Marking>,
}

impl SquareTiledSurface {
    /// Translation surface from the right and up permutations.
    pub fn from_permutations(right: &[usize], up: &[usize]) -> Result<Self, FlatError> {
        let json = SurfaceJson { n: right.len(), right: right.to_vec(), up: up.to_vec(), ..Default::default() };
        Self::from_json(&json)
    }

    pub fn from_glue(glue: Vec<[SideRef; 4]>) -> Result<Self, FlatError> {
        let n = glue.len();
        if n == 0 {
            return Err(FlatError::Gluing("no squares".into()));
        }
        for (q, sides) in glue.iter().enumerate() {
            for (i, &(q2, s2)) in sides.iter().enumerate() {
                let s = Side::from_index(i);
                if q2 >= n {
                    return Err(FlatError::Gluing(format!(
                        "square {q} side {} points at missing square {q2}",
                        s.letter()
                    )));
                }
                if glue[q2][s2 as usize] != (q, s) {
                    return Err(FlatError::Gluing(format!(
                        "side {q}{} is glued to {q2}{} but not conversely",
                        s.letter(),
                        s2.letter()
                    )));
                }
                if (q2, s2) == (q, s) {
                    return Err(FlatError::Gluing(format!("side {q}{} is glued to itself", s.letter())));
                }
                if s2 != s && s2 != s.opposite() {
                    return Err(FlatError::Gluing(format!(
                        "side {q}{} glued to {q2}{}: only translations and half-turns are allowed",
                        s.letter(),
                        s2.letter()
                    )));
                }
            }
        }
        // connectivity
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(q) = stack.pop() {
            for &(q2, _) in &glue[q] {
                if !seen[q2] {
                    seen[q2] = true;
                    stack.push(q2);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(FlatError::Disconnected);
        }
        // corners: union along glued sides
        let mut parent: Vec<usize> = (0..4 * n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for q in 0..n {
            for s in Side::ALL {
                let (q2, s2) = glue[q][s as usize];
                let (a, b) = s.corners();
                let (c, d) = s2.corners();
                let (c, d) = if s2 == s { (d, c) } else { (c, d) };
                for (x, y) in [(4 * q + a, 4 * q2 + c), (4 * q + b, 4 * q2 + d)] {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                    parent[rx] = ry;
                }
            }
        }
        let mut ids = BTreeMap::new();
        let mut vertex_of = vec![[0; 4]; n];
        let mut vertex_corners = Vec::new();
        for q in 0..n {
            for c in 0..4 {
                let r = find(&mut parent, 4 * q + c);
                let next = ids.len();
                let id = *ids.entry(r).or_insert(next);
                if id == vertex_corners.len() {
                    vertex_corners.push(0);
                }
                vertex_corners[id] += 1;
                vertex_of[q][c] = id;
            }
        }
        let surface = SquareTiledSurface { n, glue, vertex_of, vertex_corners, marking: None };
        if surface.euler_characteristic() % 2 != 0 {
            return Err(FlatError::Gluing("odd Euler characteristic".into()));
        }
        Ok(surface)
    }

    pub fn from_json(j: &SurfaceJson) -> Result<Self, FlatError> {
        let n = j.n;
        if j.right.len() != n || j.up.len() != n {
            return Err(FlatError::Gluing(format!("right/up must have {n} entries")));
        }
        let flips = match &j.flips {
            Some(f) if f.len() != 2 * n => {
                return Err(FlatError::Gluing(format!("flips must have {} entries", 2 * n)));
            }
            Some(f) => f.clone(),
            None => vec![false; 2 * n],
        };
        let mut glue: Vec<[Option<SideRef>; 4]> = vec![[None; 4]; n];
        let set = |glue: &mut Vec<[Option<SideRef>; 4]>, a: SideRef, b: SideRef| -> Result<(), FlatError> {
            if a.0 >= n || b.0 >= n {
                return Err(FlatError::Gluing(format!("square index out of range in {a:?} ~ {b:?}")));
            }
            for (x, y) in [(a, b), (b, a)] {
                match glue[x.0][x.1 as usize] {
                    Some(prev) if prev != y => {
                        return Err(FlatError::Gluing(format!(
                            "side {}{} glued twice ({}{} and {}{})",
                            x.0,
                            x.1.letter(),
                            prev.0,
                            prev.1.letter(),
                            y.0,
                            y.1.letter()
                        )));
                    }
                    _ => glue[x.0][x.1 as usize] = Some(y),
                }
            }
            Ok(())
        };
        for q in 0..n {
            let target = if flips[q] { Side::R } else { Side::L };
            set(&mut glue, (q, Side::R), (j.right[q], target))?;
            let target = if flips[n + q] { Side::T } else { Side::B };
            set(&mut glue, (q, Side::T), (j.up[q], target))?;
        }
        for (arr, side) in [(&j.left, Side::L), (&j.down, Side::B)] {
            if let Some(arr) = arr {
                for (q, t) in arr.iter().enumerate() {
                    if let Some(t) = t {
                        set(&mut glue, (q, side), (*t, side))?;
                    }
                }
            }
        }
        let mut full = Vec::with_capacity(n);
        for (q, g) in glue.iter().enumerate() {
            let mut row = [(0, Side::B); 4];
            for s in Side::ALL {
                row[s as usize] =
                    g[s as usize].ok_or_else(|| FlatError::Gluing(format!("side {q}{} is not glued", s.letter())))?;
            }
            full.push(row);
        }
        let mut surface = Self::from_glue(full)?;
        if let Some(m) = &j.marking {
            let marking = Marking::parse(&surface, m)?;
            surface.marking = Some(marking);
        }
        Ok(surface)
    }

    pub fn to_json(&self) -> SurfaceJson {
        let n = self.n;
        let mut j = SurfaceJson { n, right: vec![0; n], up: vec![0; n], ..Default::default() };
        let mut flips = vec![false; 2 * n];
        let mut left = vec![None; n];
        let mut down = vec![None; n];
        for q in 0..n {
            let (r, rs) = self.glue[q][Side::R as usize];
            j.right[q] = r;
            flips[q] = rs == Side::R;
            let (u, us) = self.glue[q][Side::T as usize];
            j.up[q] = u;
            flips[n + q] = us == Side::T;
            let (l, ls) = self.glue[q][Side::L as usize];
            if ls == Side::L {
                left[q] = Some(l);
            }
            let (d, ds) = self.glue[q][Side::B as usize];
            if ds == Side::B {
                down[q] = Some(d);
            }
        }
        if flips.iter().any(|&f| f) {
            j.flips = Some(flips);
        }
        if left.iter().any(Option::is_some) {
            j.left = Some(left);
        }
        if down.iter().any(Option::is_some) {
            j.down = Some(down);
        }
        j.marking = self.marking.as_ref().map(|m| m.to_strings());
        j
    }

    pub fn with_marking(mut self, paths: &BTreeMap<String, String>) -> Result<Self, FlatError> {
        self.marking = Some(Marking::parse(&self, paths)?);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn marking(&self) -> Option<&Marking> {
        self.marking.as_ref()
    }

    pub fn glued(&self, q: usize, s: Side) -> SideRef {
        self.glue[q][s as usize]
    }

    /// True when every gluing is a translation.
    pub fn is_abelian(&self) -> bool {
        self.glue.iter().all(|row| Side::ALL.iter().all(|&s| row[s as usize].1 == s.opposite()))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_corners.len()
    }

    /// Vertex id of a corner (0 = BL, 1 = BR, 2 = TR, 3 = TL).
    pub fn vertex(&self, q: usize, corner: usize) -> usize {
        self.vertex_of[q][corner]
    }

    /// Cone angle at a vertex in units of π/2.
    pub fn cone_quarter_turns(&self, v: usize) -> usize {
        self.vertex_corners[v]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.n as i64
    }

    pub fn genus(&self) -> usize {
        ((2 - self.euler_characteristic()) / 2) as usize
    }

    /// Cone points with angle different from 2π.
    pub fn zeros(&self) -> Result<Vec<ConePoint>, FlatError> {
        let g = self.genus();
        if g < 2 {
            return Err(FlatError::GenusTooSmall(g));
        }
        let abelian = self.is_abelian();
        Ok((0..self.vertex_count())
            .filter(|&v| self.vertex_corners[v] != 4)
            .map(|v| {
                let quarter = self.vertex_corners[v] as i64;
                ConePoint {
                    vertex: v,
                    angle: quarter as f64 * std::f64::consts::FRAC_PI_2,
                    order: quarter / 2 - 2,
                    abelian_order: abelian.then_some(quarter / 4 - 1),
                }
            })
            .collect())
    }

    /// Quarter-turn clockwise: `(x, y) ↦ (y, −x)`, so `|dx|` on the result
    /// is `|dy|` here. Markings are carried along.
    pub fn rotated(&self) -> SquareTiledSurface {
        let rot = |s: Side| Side::from_index(s as usize + 3);
        let mut glue = vec![[(0, Side::B); 4]; self.n];
        for q in 0..self.n {
            for s in Side::ALL {
                let (q2, s2) = self.glue[q][s as usize];
                glue[q][rot(s) as usize] = (q2, rot(s2));
            }
        }
        let mut out = SquareTiledSurface::from_glue(glue).expect("rotation preserves validity");
        out.marking = self.marking.as_ref().map(|m| m.rotated());
        out
    }

    pub fn oriented(&self, convention: Convention) -> SquareTiledSurface {
        match convention {
            Convention::Dx => self.clone(),
            Convention::Dy => self.rotated(),
        }
    }
}

impl fmt::Display for SquareTiledSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-square surface of genus {}", self.n, self.genus())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConePoint {
    pub vertex: usize,
    pub angle: f64,
    /// Order as a zero of the quadratic differential, `angle/π − 2`.
    pub order: i64,
    /// Order as a zero of the abelian differential, `angle/2π − 1`.
    pub abelian_order: Option<i64>,
}

/// Wire format for surfaces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceJson {
    pub n: usize,
    pub right: Vec<usize>,
    pub up: Vec<usize>,
    /// `n` entries for right gluings then `n` for up gluings; a flipped
    /// right gluing glues right side to right side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flips: Option<Vec<bool>>,
    /// Left-to-left half-turn gluings, where needed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Vec<Option<usize>>>,
    /// Bottom-to-bottom half-turn gluings, where needed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub down: Option<Vec<Option<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marking: Option<BTreeMap<String, String>>,
}

/// A quadratic differential `scale · φ_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadDiffHandle {
    pub surface: SquareTiledSurface,
    scale: f64,
}

impl QuadDiffHandle {
    pub fn new(surface: SquareTiledSurface, scale: f64) -> Result<Self, FlatError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(FlatError::Scale(scale));
        }
        Ok(QuadDiffHandle { surface, scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `‖φ‖ = ∫|φ|`, the flat area.
    pub fn norm(&self) -> f64 {
        self.surface.n() as f64 * self.scale
    }

    /// `φ ↦ 4φ / (1 + 4‖φ‖)`, into the open unit ball.
    pub fn normalize(&self) -> QuadDiffHandle {
        QuadDiffHandle { surface: self.surface.clone(), scale: self.scale * 4.0 / (1.0 + 4.0 * self.norm()) }
    }
}

/// Straight pieces of a path on the surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    /// A square side, traversed rightward/upward when `forward`.
    Side(OrientedSide),
    /// Straight segment across the interior of a square between two corners.
    Diagonal { square: usize, from: usize, to: usize },
}

impl Segment {
    fn endpoints(&self, s: &SquareTiledSurface) -> (usize, usize) {
        match *self {
            Segment::Side(o) => o.endpoints(s),
            Segment::Diagonal { square, from, to } => (s.vertex(square, from), s.vertex(square, to)),
        }
    }

    fn displacement(&self) -> (i64, i64) {
        let corner = |c: usize| -> (i64, i64) { [(0, 0), (1, 0), (1, 1), (0, 1)][c % 4] };
        match *self {
            Segment::Side(o) => {
                let d = if o.forward { 1 } else { -1 };
                if o.side.is_horizontal() {
                    (d, 0)
                } else {
                    (0, d)
                }
            }
            Segment::Diagonal { from, to, .. } => {
                let (a, b) = (corner(from), corner(to));
                (b.0 - a.0, b.1 - a.1)
            }
        }
    }
}

/// `∫|dx|` along a chain of segments (exact, at unit scale).
pub fn vertical_measure_exact(s: &SquareTiledSurface, path: &[Segment]) -> Result<Ratio<i64>, FlatError> {
    for (i, seg) in path.iter().enumerate() {
        if let Segment::Diagonal { square, from, to } = *seg {
            if square >= s.n() || from > 3 || to > 3 || (from + 2) % 4 != to {
                return Err(FlatError::PathSyntax(format!("diagonal {square}:{from}->{to}")));
            }
        }
        if let Segment::Side(o) = seg {
            if o.square >= s.n() {
                return Err(FlatError::PathSyntax(o.to_string()));
            }
        }
        if i + 1 < path.len() {
            let end = seg.endpoints(s).1;
            if end != path[i + 1].endpoints(s).0 {
                return Err(FlatError::Discontinuous(i));
            }
            if s.cone_quarter_turns(end) != 4 {
                return Err(FlatError::SplitAtSingularity { vertex: end, step: i });
            }
        }
    }
    Ok(Ratio::from_integer(path.iter().map(|seg| seg.displacement().0.abs()).sum()))
}

/// `∫|dx|` along a chain of segments, times `sqrt(scale)`.
pub fn vertical_measure(q: &QuadDiffHandle, path: &[Segment]) -> Result<f64, FlatError> {
    let m = vertical_measure_exact(&q.surface, path)?;
    Ok(*m.numer() as f64 / *m.denom() as f64 * q.scale.sqrt())
}
