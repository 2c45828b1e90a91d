//! Edge paths, markings and the reduction that computes transverse measure
//! exactly.
//!
//! The surface is cut into vertical strips (chains of squares glued top to
//! bottom). Every edge path becomes a word in two kinds of tokens: moves
//! along vertical sides, which cost nothing, and crossings of a strip along a
//! horizontal side, which cost one. The surface group is the fundamental
//! group of a graph of groups with the vertical graph as vertex space and the
//! strip cores as edge groups, so a cyclically reduced word in that sense
//! has the fewest crossings in its free homotopy class.

use std::collections::BTreeMap;
use std::fmt;

use super::{FlatError, Side, SquareTiledSurface};
use crate::words::{Presentation, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OrientedSide {
    pub square: usize,
    pub side: Side,
    /// Rightward for bottom/top sides, upward for left/right sides.
    pub forward: bool,
}

impl OrientedSide {
    pub fn reversed(self) -> Self {
        OrientedSide { forward: !self.forward, ..self }
    }

    pub fn endpoints(&self, s: &SquareTiledSurface) -> (usize, usize) {
        let (a, b) = self.side.corners();
        let (a, b) = (s.vertex(self.square, a), s.vertex(self.square, b));
        if self.forward {
            (a, b)
        } else {
            (b, a)
        }
    }
}

impl fmt::Display for OrientedSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.square, self.side.letter(), if self.forward { '+' } else { '-' })
    }
}

impl std::str::FromStr for OrientedSide {
    type Err = FlatError;
    fn from_str(tok: &str) -> Result<Self, FlatError> {
        let bad = || FlatError::PathSyntax(tok.to_string());
        let mut chars: Vec<char> = tok.chars().collect();
        let sign = chars.pop().ok_or_else(bad)?;
        let side = chars.pop().ok_or_else(bad)?;
        let square: usize = chars.iter().collect::<String>().parse().map_err(|_| bad())?;
        let side = match side {
            'B' => Side::B,
            'R' => Side::R,
            'T' => Side::T,
            'L' => Side::L,
            _ => return Err(bad()),
        };
        let forward = match sign {
            '+' => true,
            '-' => false,
            _ => return Err(bad()),
        };
        Ok(OrientedSide { square, side, forward })
    }
}

/// Chain of oriented sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgePath(pub Vec<OrientedSide>);

impl EdgePath {
    pub fn parse(s: &str) -> Result<Self, FlatError> {
        s.split_whitespace().map(str::parse).collect::<Result<Vec<_>, _>>().map(EdgePath)
    }

    pub fn inverse(&self) -> EdgePath {
        EdgePath(self.0.iter().rev().map(|o| o.reversed()).collect())
    }

    /// Start and end vertex after checking continuity.
    pub fn endpoints(&self, s: &SquareTiledSurface) -> Result<(usize, usize), FlatError> {
        let first = self.0.first().ok_or_else(|| FlatError::PathSyntax(String::new()))?;
        let mut end = first.endpoints(s).0;
        for (i, o) in self.0.iter().enumerate() {
            if o.square >= s.n() {
                return Err(FlatError::PathSyntax(o.to_string()));
            }
            let (a, b) = o.endpoints(s);
            if a != end {
                return Err(FlatError::Discontinuous(i));
            }
            end = b;
        }
        Ok((first.endpoints(s).0, end))
    }

    /// Signed horizontal displacement.
    pub fn dx(&self) -> i64 {
        self.0.iter().filter(|o| o.side.is_horizontal()).map(|o| if o.forward { 1 } else { -1 }).sum()
    }
}

impl fmt::Display for EdgePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Closed edge paths at a common base vertex, one per generator
/// `a1, b1, …, ag, bg`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Marking {
    pub presentation: Presentation,
    pub paths: Vec<EdgePath>,
    pub base: usize,
}

impl Marking {
    /// Parses `{ "a1": "0B+ 1B+", … }`, checks that every path is a loop at
    /// one base vertex and that the relator path is null-homotopic.
    pub fn parse(s: &SquareTiledSurface, map: &BTreeMap<String, String>) -> Result<Self, FlatError> {
        let genus = s.genus();
        let presentation = Presentation::new(genus)?;
        let mut paths = Vec::new();
        for g in presentation.generators() {
            let name = g.to_string();
            let text = map.get(&name).ok_or_else(|| FlatError::Marking(format!("missing path for {name}")))?;
            paths.push(EdgePath::parse(text)?);
        }
        if map.len() != paths.len() {
            return Err(FlatError::Marking(format!("expected exactly {} generators", paths.len())));
        }
        let marking = Marking::from_paths(s, presentation, paths)?;
        let relator = presentation.relator();
        let tokens = Strips::new(s).word_tokens(&marking, &relator);
        if !Strips::new(s).reduce_based(tokens).is_empty() {
            return Err(FlatError::Marking("relator path is not null-homotopic".into()));
        }
        Ok(marking)
    }

    fn from_paths(s: &SquareTiledSurface, presentation: Presentation, paths: Vec<EdgePath>) -> Result<Self, FlatError> {
        let mut base = None;
        for (i, p) in paths.iter().enumerate() {
            let (a, b) = p.endpoints(s).map_err(|e| FlatError::Marking(format!("generator {i}: {e}")))?;
            if a != b {
                return Err(FlatError::Marking(format!("generator {i} is not a loop")));
            }
            if *base.get_or_insert(a) != a {
                return Err(FlatError::Marking(format!("generator {i} is based at a different vertex")));
            }
        }
        Ok(Marking { presentation, paths, base: base.unwrap_or(0) })
    }

    pub fn to_strings(&self) -> BTreeMap<String, String> {
        self.presentation
            .generators()
            .iter()
            .map(|g| g.to_string())
            .zip(self.paths.iter().map(|p| p.to_string()))
            .collect()
    }

    /// Path of a word as the concatenation of generator paths.
    pub fn path_of(&self, w: &Word) -> EdgePath {
        let mut out = Vec::new();
        for l in w.letters() {
            let p = &self.paths[l.generator()];
            if l.is_inverse() {
                out.extend(p.inverse().0);
            } else {
                out.extend(p.0.iter().copied());
            }
        }
        EdgePath(out)
    }

    pub(super) fn rotated(&self) -> Marking {
        let rot = |o: &OrientedSide| OrientedSide {
            square: o.square,
            side: Side::from_index(o.side as usize + 3),
            forward: if o.side.is_horizontal() { !o.forward } else { o.forward },
        };
        Marking {
            presentation: self.presentation,
            paths: self.paths.iter().map(|p| EdgePath(p.0.iter().map(rot).collect())).collect(),
            base: self.base,
        }
    }
}

/// Letters of the reduction alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    /// Vertical edge class, with its sign relative to the class orientation.
    Vertical { edge: usize, forward: bool },
    /// Horizontal crossing of `strip` at height `pos`, left to right when
    /// `forward`.
    Cross { strip: usize, pos: usize, forward: bool },
}

impl Token {
    fn inverse(self) -> Token {
        match self {
            Token::Vertical { edge, forward } => Token::Vertical { edge, forward: !forward },
            Token::Cross { strip, pos, forward } => Token::Cross { strip, pos, forward: !forward },
        }
    }

    fn is_cross(&self) -> bool {
        matches!(self, Token::Cross { .. })
    }
}

/// Strip decomposition of a surface.
pub(super) struct Strips {
    /// Per square: strip, height, and whether the square is upright in it.
    place: Vec<(usize, usize, bool)>,
    /// Per side of each square: vertical edge class and orientation sign.
    vertical: Vec<[(usize, bool); 4]>,
    /// Per strip, boundary segments `(left, right)` at each height, oriented
    /// up the strip.
    boundary: Vec<Vec<(Token, Token)>>,
}

impl Strips {
    pub(super) fn new(s: &SquareTiledSurface) -> Strips {
        let n = s.n();
        let mut place: Vec<Option<(usize, usize, bool)>> = vec![None; n];
        let mut strips: Vec<Vec<(usize, bool)>> = Vec::new();
        for start in 0..n {
            if place[start].is_some() {
                continue;
            }
            let id = strips.len();
            let mut chain = Vec::new();
            let (mut q, mut upright) = (start, true);
            loop {
                place[q] = Some((id, chain.len(), upright));
                chain.push((q, upright));
                let exit = if upright { Side::T } else { Side::B };
                let (q2, s2) = s.glued(q, exit);
                q = q2;
                upright = s2 == Side::B;
                if place[q].is_some() {
                    break;
                }
            }
            strips.push(chain);
        }
        let place: Vec<(usize, usize, bool)> = place.into_iter().map(Option::unwrap).collect();

        // vertical edge classes
        let mut vertical = vec![[(usize::MAX, true); 4]; n];
        let mut count = 0;
        for q in 0..n {
            for side in [Side::L, Side::R] {
                if vertical[q][side as usize].0 != usize::MAX {
                    continue;
                }
                let (q2, s2) = s.glued(q, side);
                vertical[q][side as usize] = (count, true);
                vertical[q2][s2 as usize] = (count, s2 != side);
                count += 1;
            }
        }

        let vtoken = |q: usize, side: Side, up: bool| {
            let (edge, sign) = vertical[q][side as usize];
            Token::Vertical { edge, forward: sign == up }
        };
        let boundary = strips
            .iter()
            .map(|chain| {
                chain
                    .iter()
                    .map(|&(q, upright)| {
                        if upright {
                            (vtoken(q, Side::L, true), vtoken(q, Side::R, true))
                        } else {
                            (vtoken(q, Side::R, false), vtoken(q, Side::L, false))
                        }
                    })
                    .collect()
            })
            .collect();
        Strips { place, vertical, boundary }
    }

    fn height(&self, strip: usize) -> usize {
        self.boundary[strip].len()
    }

    pub(super) fn token(&self, o: &OrientedSide) -> Token {
        let (strip, pos, upright) = self.place[o.square];
        match o.side {
            Side::L | Side::R => {
                let (edge, sign) = self.vertical[o.square][o.side as usize];
                Token::Vertical { edge, forward: sign == o.forward }
            }
            Side::B | Side::T => {
                let h = self.height(strip);
                // the bottom of an upright square sits at its own height
                let at_bottom = (o.side == Side::B) == upright;
                let pos = if at_bottom { pos } else { (pos + 1) % h };
                Token::Cross { strip, pos, forward: o.forward == upright }
            }
        }
    }

    pub(super) fn path_tokens(&self, p: &EdgePath) -> Vec<Token> {
        p.0.iter().map(|o| self.token(o)).collect()
    }

    pub(super) fn word_tokens(&self, m: &Marking, w: &Word) -> Vec<Token> {
        self.path_tokens(&m.path_of(w))
    }

    /// Walk along one side of a strip from height `from`, `steps` segments
    /// up (positive) or down (negative).
    fn walk(&self, strip: usize, right: bool, from: usize, steps: i64) -> Vec<Token> {
        let h = self.height(strip) as i64;
        let seg = |k: i64| {
            let (l, r) = self.boundary[strip][k.rem_euclid(h) as usize];
            if right {
                r
            } else {
                l
            }
        };
        let k0 = from as i64;
        if steps >= 0 {
            (0..steps).map(|i| seg(k0 + i)).collect()
        } else {
            (1..=-steps).map(|i| seg(k0 - i).inverse()).collect()
        }
    }

    /// If `pi` is homotopic to a walk along the given side of `strip` from
    /// height `k1` to `k2`, returns the winding-adjusted step count.
    fn match_walk(&self, strip: usize, right: bool, k1: usize, k2: usize, pi: &[Token]) -> Option<i64> {
        let h = self.height(strip) as i64;
        let up0 = (k2 as i64 - k1 as i64).rem_euclid(h);
        let down0 = (h - up0) % h;
        let limit = pi.len() as i64 + 2 * h;
        let mut m = 0;
        while up0 + m * h <= limit {
            let up = up0 + m * h;
            if free_reduce(self.walk(strip, right, k1, up)) == pi {
                return Some(up);
            }
            let down = -(down0 + m * h);
            if down != 0 && free_reduce(self.walk(strip, right, k1, down)) == pi {
                return Some(down);
            }
            m += 1;
        }
        None
    }

    /// Tries to remove the crossing pair at `i`, `j` (with only vertical
    /// tokens between them).
    fn pinch(&self, tokens: &[Token], i: usize, j: usize) -> Option<Vec<Token>> {
        let (Token::Cross { strip: s1, pos: k1, forward: f1 }, Token::Cross { strip: s2, pos: k2, forward: f2 }) =
            (tokens[i], tokens[j])
        else {
            return None;
        };
        if s1 != s2 || f1 == f2 {
            return None;
        }
        let pi = &tokens[i + 1..j];
        // entering to the right: the middle runs along the right side
        let steps = self.match_walk(s1, f1, k1, k2, pi)?;
        Some(self.walk(s1, !f1, k1, steps))
    }

    /// Based reduction: free reduction and pinches until neither applies.
    pub(super) fn reduce_based(&self, tokens: Vec<Token>) -> Vec<Token> {
        let mut t = free_reduce(tokens);
        'outer: loop {
            let crosses: Vec<usize> = (0..t.len()).filter(|&i| t[i].is_cross()).collect();
            for w in crosses.windows(2) {
                if let Some(rep) = self.pinch(&t, w[0], w[1]) {
                    let mut next = t[..w[0]].to_vec();
                    next.extend(rep);
                    next.extend_from_slice(&t[w[1] + 1..]);
                    t = free_reduce(next);
                    continue 'outer;
                }
            }
            return t;
        }
    }

    /// Cyclic reduction; the number of crossings left is the minimum over
    /// the free homotopy class.
    pub(super) fn reduce_cyclic(&self, tokens: Vec<Token>) -> Vec<Token> {
        let mut t = cyclic_free_reduce(tokens);
        'outer: loop {
            let crosses: Vec<usize> = (0..t.len()).filter(|&i| t[i].is_cross()).collect();
            if crosses.len() < 2 {
                return t;
            }
            for (c, &i) in crosses.iter().enumerate() {
                // rotate so the pair is contiguous without wrapping
                let mut r = t[i..].to_vec();
                r.extend_from_slice(&t[..i]);
                let j = (crosses[(c + 1) % crosses.len()] + t.len() - i) % t.len();
                if let Some(rep) = self.pinch(&r, 0, j) {
                    let mut next = rep;
                    next.extend_from_slice(&r[j + 1..]);
                    t = cyclic_free_reduce(next);
                    continue 'outer;
                }
            }
            return t;
        }
    }

    pub(super) fn crossings(&self, tokens: Vec<Token>) -> usize {
        self.reduce_cyclic(tokens).iter().filter(|t| t.is_cross()).count()
    }
}

fn free_reduce(tokens: Vec<Token>) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    for t in tokens {
        if out.last() == Some(&t.inverse()) {
            out.pop();
        } else {
            out.push(t);
        }
    }
    out
}

fn cyclic_free_reduce(tokens: Vec<Token>) -> Vec<Token> {
    let t = free_reduce(tokens);
    let mut lo = 0;
    let mut hi = t.len();
    while hi - lo >= 2 && t[lo] == t[hi - 1].inverse() {
        lo += 1;
        hi -= 1;
    }
    t[lo..hi].to_vec()
}
