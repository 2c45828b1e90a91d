//! Marked surfaces used by the experiments.

use std::collections::BTreeMap;

use super::SquareTiledSurface;

fn marking(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Three squares in an L: square 1 right of square 0, square 2 above it.
/// One cone point of angle 6π.
pub fn l_surface() -> SquareTiledSurface {
    SquareTiledSurface::from_permutations(&[1, 0, 2], &[2, 1, 0])
        .and_then(|s| {
            s.with_marking(&marking(&[("a1", "2L-"), ("b1", "2B+"), ("a2", "2B+ 1L+ 2B-"), ("b2", "1B- 2B-")]))
        })
        .expect("L surface is valid")
}

/// A single vertical cylinder of three squares whose core is `a1`.
pub fn one_cylinder_surface() -> SquareTiledSurface {
    SquareTiledSurface::from_permutations(&[1, 0, 2], &[1, 2, 0])
        .and_then(|s| s.with_marking(&marking(&[("a1", "0L+ 1L+ 2L+"), ("b1", "0B-"), ("a2", "1L+"), ("b2", "0L+")])))
        .expect("one-cylinder surface is valid")
}
