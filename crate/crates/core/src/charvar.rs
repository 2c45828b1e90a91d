//! Representations of the surface group, characters, Morgan–Shalen
//! coordinates and translation-length spectra, plus the two explicit
//! degenerating families used by the experiments.

use std::fmt::Write as _;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::octagon;
use crate::sl2c::{self, GeometryError, Mobius};
use crate::words::{ConjClassSet, Letter, Presentation, Word, WordError};

/// Relator residual above which a representation is rejected.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error("expected {expected} generator images, got {got}")]
    GeneratorCount { expected: usize, got: usize },
    #[error("generator {index}: {source}")]
    Generator { index: usize, source: GeometryError },
    #[error("relator residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("only genus 2 is supported here, got {0}")]
    UnsupportedGenus(usize),
    #[error("twist curve must be a1 or a2 (handle 1 or 2), got handle {0}")]
    TwistCurve(usize),
    #[error("length spectrum is identically zero")]
    TrivialLengthFunction,
    #[error("family stays bounded: spectra vanish along the tail of the schedule")]
    BoundedFamily,
    #[error("schedule must be strictly increasing with at least {min} samples")]
    Schedule { min: usize },
    #[error("period vector has {got} entries, expected {expected}")]
    Periods { expected: usize, got: usize },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Generator images in SL(2,ℂ) together with their relator residual.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    presentation: Presentation,
    images: Vec<Mobius>,
    inverses: Vec<Mobius>,
    residual: f64,
}

impl Representation {
    /// Validates unimodularity and the relator; rejects residuals above
    /// [`RESIDUAL_TOL`].
    pub fn new(presentation: Presentation, images: Vec<Mobius>) -> Result<Self, RepError> {
        let rep = Self::unchecked(presentation, images)?;
        if rep.residual > RESIDUAL_TOL {
            return Err(RepError::Residual(rep.residual));
        }
        Ok(rep)
    }

    /// Like [`Representation::new`] but accepts any residual.
    pub fn unchecked(presentation: Presentation, images: Vec<Mobius>) -> Result<Self, RepError> {
        let expected = presentation.generator_count();
        if images.len() != expected {
            return Err(RepError::GeneratorCount { expected, got: images.len() });
        }
        for (index, m) in images.iter().enumerate() {
            m.check_unimodular().map_err(|source| RepError::Generator { index, source })?;
        }
        let inverses = images.iter().map(Mobius::inverse).collect();
        let mut rep = Representation { presentation, images, inverses, residual: 0.0 };
        rep.residual = rep.evaluate(&presentation.relator()).distance_to_pm_identity();
        Ok(rep)
    }

    pub fn presentation(&self) -> Presentation {
        self.presentation
    }

    pub fn images(&self) -> &[Mobius] {
        &self.images
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn image(&self, l: Letter) -> &Mobius {
        if l.is_inverse() {
            &self.inverses[l.generator()]
        } else {
            &self.images[l.generator()]
        }
    }

    /// `ρ(w)` as an ordered product of generator images.
    pub fn evaluate(&self, w: &Word) -> Mobius {
        w.letters().iter().fold(Mobius::IDENTITY, |acc, &l| acc * *self.image(l))
    }

    /// `u ρ u⁻¹`.
    pub fn conjugate_by(&self, u: &Mobius) -> Representation {
        let images = self.images.iter().map(|m| m.conjugate_by(u)).collect();
        Representation::unchecked(self.presentation, images).expect("conjugation preserves validity")
    }

    pub fn to_json(&self) -> RepresentationJson {
        RepresentationJson {
            genus: self.presentation.genus(),
            generators: self.images.iter().map(Mobius::to_pairs).collect(),
            residual: self.residual,
        }
    }

    pub fn from_json(j: &RepresentationJson) -> Result<Self, RepError> {
        let p = Presentation::new(j.genus)?;
        Representation::new(p, j.generators.iter().map(|&e| Mobius::from_pairs(e)).collect())
    }
}

/// Wire format: generator matrices as row-major complex pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RepresentationJson {
    pub genus: usize,
    pub generators: Vec<[[f64; 2]; 4]>,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Translation,
    MsCoordinate,
    Flat,
    Abelian,
    Pullback,
}

/// Nonnegative values indexed by conjugacy-class keys. Flat and abelian
/// spectra additionally carry their exact rational values on the unit
/// square-tiled surface.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthSpectrum {
    pub classes: Vec<Word>,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
    pub exact: Option<Vec<Ratio<i64>>>,
}

impl LengthSpectrum {
    pub fn new(classes: &ConjClassSet, values: Vec<f64>, kind: SpectrumKind) -> Self {
        LengthSpectrum { classes: classes.classes().to_vec(), values, kind, exact: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn value_of(&self, key: &Word) -> Option<f64> {
        self.classes.iter().position(|c| c == key).map(|i| self.values[i])
    }

    /// `classKey,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("classKey,value\n");
        for (c, v) in self.classes.iter().zip(&self.values) {
            let _ = writeln!(out, "{c},{v}");
        }
        out
    }

    /// Max-norm distance between two spectra over the same classes.
    pub fn max_abs_diff(&self, other: &LengthSpectrum) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `χ_ρ(w) = tr ρ(w)`.
pub fn character(rep: &Representation, w: &Word) -> Complex64 {
    rep.evaluate(w).trace()
}

/// `log(|χ_ρ(γ)| + 2)` per class.
pub fn ms_coordinates(rep: &Representation, classes: &ConjClassSet) -> LengthSpectrum {
    let values = classes.classes().iter().map(|w| (character(rep, w).norm() + 2.0).ln()).collect();
    LengthSpectrum::new(classes, values, SpectrumKind::MsCoordinate)
}

/// Translation length of `ρ(γ)` per class.
pub fn length_spectrum(rep: &Representation, classes: &ConjClassSet) -> LengthSpectrum {
    let values = classes.classes().iter().map(|w| sl2c::translation_length(&rep.evaluate(w))).collect();
    LengthSpectrum::new(classes, values, SpectrumKind::Translation)
}

/// Rescales so that the largest entry is 1.
pub fn projectivize(s: &LengthSpectrum) -> Result<LengthSpectrum, RepError> {
    let m = s.max();
    if !(m > 0.0) {
        return Err(RepError::TrivialLengthFunction);
    }
    let mut out = s.clone();
    for v in &mut out.values {
        *v /= m;
    }
    if let Some(exact) = &mut out.exact {
        let em = exact.iter().copied().max().unwrap_or_default();
        for v in exact.iter_mut() {
            *v /= em;
        }
    }
    Ok(out)
}

/// Discrete faithful representation from the regular octagon side pairings.
pub fn fuchsian_base(genus: usize) -> Result<Representation, RepError> {
    if genus != 2 {
        return Err(RepError::UnsupportedGenus(genus));
    }
    let images = octagon::disk_generators()
        .iter()
        .map(|g| {
            let m = octagon::disk_to_upper_matrix(g);
            m.normalized().unwrap_or(m)
        })
        .collect();
    Representation::new(Presentation::new(2)?, images)
}

/// Hyperbolic element with the same axis as `m` translating by `t`
/// towards its attracting fixed point.
pub fn axis_translation(m: &Mobius, t: f64) -> Mobius {
    let [p, q] = m.fixed_points();
    // Order so that ∞ ↦ attracting point: the frame conjugates diag(λ, 1/λ)
    // with |λ| > 1 (attracting at ∞) onto m.
    let lambda = sl2c::dominant_eigenvalue(m);
    let attracting_is_p = match p {
        Some(pz) => {
            // eigenvector (pz, 1) has eigenvalue c pz + d
            let ev = m.c * pz + m.d;
            (ev - lambda).norm() < (ev - lambda.inv()).norm()
        }
        None => (m.a - lambda).norm() < (m.a - lambda.inv()).norm(),
    };
    let (repelling, attracting) = if attracting_is_p { (q, p) } else { (p, q) };
    let frame = match repelling {
        Some(r) => sl2c::axis_frame(r, attracting),
        // repelling point at ∞: swap the roles by an inversion
        None => {
            let a = attracting.unwrap_or_default();
            let s = Mobius::real(0.0, -1.0, 1.0, 0.0);
            sl2c::axis_frame(a, None) * s
        }
    };
    let e = Mobius::diag(Complex64::new((t / 2.0).exp(), 0.0));
    let m = frame * e * frame.inverse();
    m.normalized().unwrap_or(m)
}

/// Twist along `a_handle`: `b_handle ↦ ρ(b_handle) · E_t` where `E_t`
/// translates by `t` along the axis of `ρ(a_handle)`; all other generators
/// are unchanged. `E_t` commutes with `ρ(a_handle)`, so the relator is
/// preserved.
pub fn twist_family(base: &Representation, handle: usize, t: f64) -> Result<Representation, RepError> {
    let genus = base.presentation().genus();
    if handle == 0 || handle > genus.min(2) {
        return Err(RepError::TwistCurve(handle));
    }
    let a = base.images()[2 * (handle - 1)];
    let e = axis_translation(&a, t);
    let mut images = base.images().to_vec();
    let k = 2 * (handle - 1) + 1;
    let twisted = images[k] * e;
    images[k] = twisted.normalized().unwrap_or(twisted);
    Representation::new(base.presentation(), images)
}

/// Reducible diagonal representation `g ↦ diag(e^{tμ(g)/2}, e^{−tμ(g)/2})`.
pub fn diagonal_family(presentation: Presentation, periods: &[f64], t: f64) -> Result<Representation, RepError> {
    let expected = presentation.generator_count();
    if periods.len() != expected {
        return Err(RepError::Periods { expected, got: periods.len() });
    }
    let images = periods.iter().map(|&mu| Mobius::diag(Complex64::new((t * mu / 2.0).exp(), 0.0))).collect();
    Representation::new(presentation, images)
}

/// Parametrized families of representations.
#[derive(Clone, Debug, PartialEq)]
pub enum Deformation {
    /// Twist along `a_handle` of the given base.
    Twist { handle: usize },
    /// Diagonal family with the given periods (the base is ignored).
    Diagonal { periods: Vec<f64> },
    /// The base itself for every parameter.
    Constant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub base: Representation,
    pub deformation: Deformation,
}

impl Family {
    pub fn twist(base: Representation, handle: usize) -> Self {
        Family { base, deformation: Deformation::Twist { handle } }
    }

    pub fn diagonal(presentation: Presentation, periods: Vec<f64>) -> Result<Self, RepError> {
        let base = diagonal_family(presentation, &periods, 0.0)?;
        Ok(Family { base, deformation: Deformation::Diagonal { periods } })
    }

    pub fn constant(base: Representation) -> Self {
        Family { base, deformation: Deformation::Constant }
    }

    pub fn sample(&self, t: f64) -> Result<Representation, RepError> {
        match &self.deformation {
            Deformation::Twist { handle } => twist_family(&self.base, *handle, t),
            Deformation::Diagonal { periods } => diagonal_family(self.base.presentation(), periods, t),
            Deformation::Constant => Ok(self.base.clone()),
        }
    }

    pub fn describe(&self) -> String {
        match &self.deformation {
            Deformation::Twist { handle } => format!("twist along a{handle}"),
            Deformation::Diagonal { periods } => format!("diagonal with periods {periods:?}"),
            Deformation::Constant => "constant".to_string(),
        }
    }
}

pub fn check_schedule(schedule: &[f64], min: usize) -> Result<(), RepError> {
    if schedule.len() < min || schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RepError::Schedule { min });
    }
    Ok(())
}

/// Relative growth-rate threshold separating the support of a limit.
pub const SUPPORT_THRESHOLD: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct LimitDiagnostics {
    pub schedule: Vec<f64>,
    /// Projectivized spectrum per sample (`None` where it vanished).
    pub projectivized: Vec<Option<LengthSpectrum>>,
    /// Max-norm defect between consecutive projectivized spectra.
    pub cauchy_defects: Vec<f64>,
    /// Last entry of `cauchy_defects`.
    pub tail_defect: f64,
    /// Per-class slope magnitude between the last two samples, projectivized.
    pub rate_limit: LengthSpectrum,
    /// Classes whose projectivized slope exceeds [`SUPPORT_THRESHOLD`].
    pub support: Vec<bool>,
}

/// Projectivized translation spectra along `schedule`; the last iterate is the
/// empirical limit.
pub fn ms_limit(
    family: &Family,
    classes: &ConjClassSet,
    schedule: &[f64],
) -> Result<(LengthSpectrum, LimitDiagnostics), RepError> {
    let raw = schedule
        .iter()
        .map(|&t| family.sample(t).map(|rep| length_spectrum(&rep, classes)))
        .collect::<Result<Vec<_>, _>>()?;
    limit_from_spectra(schedule, &raw)
}

/// Limit detection on precomputed spectra (shared with the harmonic-map ray).
pub fn limit_from_spectra(
    schedule: &[f64],
    raw: &[LengthSpectrum],
) -> Result<(LengthSpectrum, LimitDiagnostics), RepError> {
    check_schedule(schedule, 4)?;
    let projectivized: Vec<Option<LengthSpectrum>> = raw.iter().map(|s| projectivize(s).ok()).collect();
    let n = raw.len();
    let (Some(last), Some(prev)) = (&projectivized[n - 1], &projectivized[n - 2]) else {
        return Err(RepError::BoundedFamily);
    };
    let mut cauchy_defects = Vec::new();
    for w in projectivized.windows(2) {
        if let (Some(a), Some(b)) = (&w[0], &w[1]) {
            cauchy_defects.push(a.max_abs_diff(b));
        }
    }
    let tail_defect = last.max_abs_diff(prev);
    let dt = schedule[n - 1] - schedule[n - 2];
    let slopes: Vec<f64> =
        raw[n - 1].values.iter().zip(&raw[n - 2].values).map(|(a, b)| ((a - b) / dt).abs()).collect();
    let mut rate = raw[n - 1].clone();
    rate.values = slopes;
    rate.exact = None;
    let rate_limit = projectivize(&rate).unwrap_or(rate);
    let support = rate_limit.values.iter().map(|&v| v > SUPPORT_THRESHOLD).collect();
    Ok((
        last.clone(),
        LimitDiagnostics {
            schedule: schedule.to_vec(),
            projectivized,
            cauchy_defects,
            tail_defect,
            rate_limit,
            support,
        },
    ))
}
