//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use degenlab::harmonic::{DomainMesh, HopfSample};
use degenlab::sl2c::{dist, H3Point, Mobius};
use degenlab::words::{Letter, Word};
use num_complex::Complex64;

pub fn word(s: &str) -> Word {
    s.parse().unwrap()
}

// ---------------------------------------------------------------------------
// Conjugacy classes by brute force.

/// All freely reduced words of length `n` over `2 * rank` letters.
fn reduced_words(rank: usize, n: usize) -> Vec<Vec<(usize, bool)>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &out {
            for g in 0..rank {
                for inv in [false, true] {
                    if let Some(&(lg, linv)) = w.last() {
                        if lg == g && linv != inv {
                            continue;
                        }
                    }
                    let mut v = w.clone();
                    v.push((g, inv));
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

fn cyclically_reduce(mut w: Vec<(usize, bool)>) -> Vec<(usize, bool)> {
    while w.len() > 1 {
        let (f, l) = (w[0], w[w.len() - 1]);
        if f.0 == l.0 && f.1 != l.1 {
            w.remove(0);
            w.pop();
        } else {
            break;
        }
    }
    w
}

/// Number of nontrivial conjugacy classes of the free group of the given
/// rank whose cyclically reduced length is at most `n`, by listing every
/// rotation and inverse.
pub fn brute_force_class_count(rank: usize, n: usize) -> usize {
    let mut seen: BTreeSet<Vec<(usize, bool)>> = BTreeSet::new();
    for len in 1..=n {
        for w in reduced_words(rank, len) {
            let c = cyclically_reduce(w);
            if c.is_empty() {
                continue;
            }
            let inv: Vec<(usize, bool)> = c.iter().rev().map(|&(g, i)| (g, !i)).collect();
            let mut orbit = Vec::new();
            for base in [&c, &inv] {
                for r in 0..base.len() {
                    let mut v = base[r..].to_vec();
                    v.extend_from_slice(&base[..r]);
                    orbit.push(v);
                }
            }
            seen.insert(orbit.into_iter().min().unwrap());
        }
    }
    seen.len()
}

// ---------------------------------------------------------------------------
// Translation length by direct minimization of the displacement.

fn displacement(m: &Mobius, p: [f64; 3]) -> f64 {
    let q = H3Point { x: p[0], y: p[1], t: p[2].exp() };
    dist(&q, &degenlab::sl2c::act_unchecked(m, &q))
}

/// `inf_p d(p, m p)` by Nelder–Mead in `(x, y, log t)` with restarts.
pub fn minimal_displacement(m: &Mobius) -> f64 {
    let mut best = f64::INFINITY;
    let mut start = [0.0, 0.0, 0.0];
    for round in 0..6 {
        let step = if round == 0 { 1.0 } else { 0.1 };
        let (p, v) = nelder_mead(|p| displacement(m, p), start, step, 4000);
        if v < best {
            best = v;
            start = p;
        }
    }
    best
}

fn nelder_mead(f: impl Fn([f64; 3]) -> f64, x0: [f64; 3], step: f64, iters: usize) -> ([f64; 3], f64) {
    let mut s: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut p = x0;
            if i > 0 {
                p[i - 1] += step;
            }
            (p, f(p))
        })
        .collect();
    for _ in 0..iters {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (s[3].1 - s[0].1).abs() < 1e-15 {
            break;
        }
        let c: [f64; 3] = [0, 1, 2].map(|k| (s[0].0[k] + s[1].0[k] + s[2].0[k]) / 3.0);
        let at = |a: f64| -> [f64; 3] { [0, 1, 2].map(|k| c[k] + a * (s[3].0[k] - c[k])) };
        let r = at(-1.0);
        let fr = f(r);
        if fr < s[0].1 {
            let e = at(-2.0);
            let fe = f(e);
            s[3] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < s[2].1 {
            s[3] = (r, fr);
        } else {
            let k = at(0.5);
            let fk = f(k);
            if fk < s[3].1 {
                s[3] = (k, fk);
            } else {
                let b = s[0].0;
                for p in s.iter_mut().skip(1) {
                    p.0 = [0, 1, 2].map(|k| b[k] + 0.5 * (p.0[k] - b[k]));
                    p.1 = f(p.0);
                }
            }
        }
    }
    s.sort_by(|a, b| a.1.total_cmp(&b.1));
    s[0]
}

// ---------------------------------------------------------------------------
// Intersection number with a1 by Britton reduction.
//
// Cutting along a1 exhibits the surface group as an HNN extension of the free
// group on a1, a2, b2 with stable letter b1 and b1 a1 b1⁻¹ = a2 b2 A2 B2 a1.
// The number of stable letters in a cyclically Britton-reduced form counts
// crossings of a1.

fn x_word() -> Word {
    word("a2b2A2B2a1")
}

/// `k` with `h = g^k` for a cyclically reduced `g`, if any.
fn power_of(h: &Word, g: &Word) -> Option<i64> {
    if h.is_empty() {
        return Some(0);
    }
    let n = g.len();
    if h.len() % n != 0 {
        return None;
    }
    let k = h.len() / n;
    if *h == g.pow(k) {
        return Some(k as i64);
    }
    if *h == g.inverse().pow(k) {
        return Some(-(k as i64));
    }
    None
}

fn power(g: &Word, k: i64) -> Word {
    if k >= 0 {
        g.pow(k as usize)
    } else {
        g.inverse().pow((-k) as usize)
    }
}

/// Geometric intersection number of the class of `w` with `a1`.
pub fn britton_crossings(w: &Word) -> usize {
    let b1 = 1;
    let a1 = word("a1");
    let x = x_word();
    // cyclic sequence of (stable sign, following vertex-group word)
    let letters = w.letters();
    let Some(first) = letters.iter().position(|l| l.generator() == b1) else {
        return 0;
    };
    let rotated: Vec<Letter> = letters[first..].iter().chain(&letters[..first]).copied().collect();
    let mut syl: Vec<(bool, Word)> = Vec::new();
    for l in rotated {
        if l.generator() == b1 {
            syl.push((l.is_inverse(), Word::empty()));
        } else {
            let last = syl.last_mut().unwrap();
            last.1 = last.1.mul(&Word::from_letters(vec![l]));
        }
    }
    'outer: loop {
        let n = syl.len();
        if n == 0 {
            return 0;
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if syl[i].0 == syl[j].0 {
                continue;
            }
            // t^{s_i} h_i t^{s_j}
            let replaced = if !syl[i].0 {
                power_of(&syl[i].1, &a1).map(|k| power(&x, k))
            } else {
                power_of(&syl[i].1, &x).map(|k| power(&a1, k))
            };
            let Some(y) = replaced else { continue };
            if n == 2 {
                return 0;
            }
            // h_{i-1} y h_j replaces the pinched pair
            let prev = (i + n - 1) % n;
            let merged = syl[prev].1.mul(&y).mul(&syl[j].1);
            syl[prev].1 = merged;
            let (a, b) = (i.max(j), i.min(j));
            syl.remove(a);
            syl.remove(b);
            continue 'outer;
        }
        return n;
    }
}

// ---------------------------------------------------------------------------
// Abelian periods and the harmonic function with prescribed periods.

pub fn period(w: &Word, periods: &[f64]) -> f64 {
    let mut s = 0.0;
    for l in w.letters() {
        let p = periods[l.generator()];
        s += if l.is_inverse() { -p } else { p };
    }
    s
}

/// Values at every vertex copy of the cotangent-harmonic function with
/// `h(g z) = h(z) + t μ(g)`, from a dense linear solve.
pub fn periods_harmonic(mesh: &DomainMesh, periods: &[f64], t: f64) -> Vec<f64> {
    let n = mesh.orbit_count();
    let shift: Vec<f64> = mesh.deck.iter().map(|d| t * period(d, periods)).collect();
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (e, &(u, v)) in mesh.edges.iter().enumerate() {
        let w = mesh.weights[e];
        let (ou, ov) = (mesh.orbit[u], mesh.orbit[v]);
        // residual h_ov + s_v − h_ou − s_u
        let c = shift[v] - shift[u];
        a[ou][ou] += w;
        a[ov][ov] += w;
        a[ou][ov] -= w;
        a[ov][ou] -= w;
        rhs[ou] += w * c;
        rhs[ov] -= w * c;
    }
    // pin the additive constant
    for k in 0..n {
        a[0][k] = 0.0;
    }
    a[0][0] = 1.0;
    rhs[0] = 0.0;
    let h = solve_dense(a, rhs);
    (0..mesh.positions.len()).map(|c| h[mesh.orbit[c]] + shift[c]).collect()
}

/// `½ Σ w (Δh)²` over surface edges.
pub fn dirichlet_energy(mesh: &DomainMesh, h: &[f64]) -> f64 {
    mesh.edges.iter().zip(&mesh.weights).map(|(&(u, v), w)| 0.5 * w * (h[v] - h[u]).powi(2)).sum()
}

/// Hopf sample `(∂h)²` per triangle of [`periods_harmonic`].
pub fn periods_hopf(mesh: &DomainMesh, periods: &[f64], t: f64) -> Vec<Complex64> {
    let h = periods_harmonic(mesh, periods, t);
    mesh.triangles
        .iter()
        .map(|tri| {
            let val = tri.map(|c| h[c]);
            let z = tri.map(|c| mesh.positions[c]);
            let (d1, d2) = (z[1] - z[0], z[2] - z[0]);
            let det = d1.re * d2.im - d1.im * d2.re;
            let (e1, e2) = (val[1] - val[0], val[2] - val[0]);
            let hx = (e1 * d2.im - e2 * d1.im) / det;
            let hy = (d1.re * e2 - d2.re * e1) / det;
            let omega = Complex64::new(hx, -hy) / 2.0;
            omega * omega
        })
        .collect()
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Relative L¹ distance of two per-triangle samples after each is divided by
/// its own L¹ norm.
pub fn normalized_l1_distance(sample: &HopfSample, other: &[Complex64]) -> f64 {
    let norm_a = sample.l1_norm();
    let norm_b: f64 = other.iter().zip(&sample.areas).map(|(v, a)| v.norm() * a).sum();
    sample.values.iter().zip(other).zip(&sample.areas).map(|((x, y), a)| (x / norm_a - y / norm_b).norm() * a).sum()
}
