use num_rational::Ratio;

use super::marking::Strips;
use super::{Convention, EdgePath, FlatError, QuadDiffHandle, SquareTiledSurface};
use crate::charvar::{LengthSpectrum, SpectrumKind};
use crate::words::{ConjClassSet, Word};

fn marked(s: &SquareTiledSurface) -> Result<&super::Marking, FlatError> {
    s.marking().ok_or_else(|| FlatError::Marking("surface has no marking".into()))
}

/// Minimal number of strip crossings in the free homotopy class of `w`,
/// i.e. `ℓ_φ` at unit scale.
pub fn flat_length_of(s: &SquareTiledSurface, w: &Word) -> Result<u64, FlatError> {
    let m = marked(s)?;
    let strips = Strips::new(s);
    Ok(strips.crossings(strips.word_tokens(m, w)) as u64)
}

/// `ℓ_φ` with the `|dx|` convention.
pub fn flat_length_spectrum(q: &QuadDiffHandle, classes: &ConjClassSet) -> Result<LengthSpectrum, FlatError> {
    flat_length_spectrum_with(q, classes, Convention::Dx)
}

/// `ℓ_φ` per class: exact at unit scale, times `sqrt(scale)` in `values`.
pub fn flat_length_spectrum_with(
    q: &QuadDiffHandle,
    classes: &ConjClassSet,
    convention: Convention,
) -> Result<LengthSpectrum, FlatError> {
    let s = q.surface.oriented(convention);
    let m = marked(&s)?;
    let strips = Strips::new(&s);
    let exact: Vec<Ratio<i64>> = classes
        .classes()
        .iter()
        .map(|w| Ratio::from_integer(strips.crossings(strips.word_tokens(m, w)) as i64))
        .collect();
    let k = q.scale().sqrt();
    let values = exact.iter().map(|r| *r.numer() as f64 / *r.denom() as f64 * k).collect();
    let mut out = LengthSpectrum::new(classes, values, SpectrumKind::Flat);
    out.exact = Some(exact);
    Ok(out)
}

/// Real parts of the periods of `ω` on the marking's generators.
#[derive(Clone, Debug, PartialEq)]
pub struct AbelianPeriods {
    pub basis: Vec<EdgePath>,
    pub real_periods: Vec<f64>,
    pub exact: Vec<Ratio<i64>>,
}

impl AbelianPeriods {
    /// `μ(w)`, the period of a word.
    pub fn period_of(&self, w: &Word) -> Ratio<i64> {
        w.exponent_sums(self.exact.len() / 2).iter().zip(&self.exact).map(|(&e, &p)| p * e).sum()
    }
}

/// Horizontal holonomy of each generator path (unit scale).
pub fn abelian_periods(s: &SquareTiledSurface, convention: Convention) -> Result<AbelianPeriods, FlatError> {
    if !s.is_abelian() {
        return Err(FlatError::NotAbelian);
    }
    let s = s.oriented(convention);
    let m = marked(&s)?;
    let exact: Vec<Ratio<i64>> = m.paths.iter().map(|p| Ratio::from_integer(p.dx())).collect();
    Ok(AbelianPeriods {
        basis: m.paths.clone(),
        real_periods: exact.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect(),
        exact,
    })
}

/// `|μ(w)|` per class.
pub fn abelian_length_spectrum(p: &AbelianPeriods, classes: &ConjClassSet) -> LengthSpectrum {
    let exact: Vec<Ratio<i64>> = classes.classes().iter().map(|w| num_traits::Signed::abs(&p.period_of(w))).collect();
    let values = exact.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
    let mut out = LengthSpectrum::new(classes, values, SpectrumKind::Abelian);
    out.exact = Some(exact);
    out
}
