//! Harmonic maps along a family of representations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hopf::{beltrami, far_from_zeros, hopf, hopf_zeros, BeltramiField, HopfSample};
use super::mesh::{build_octagon_mesh, DomainMesh, MeshError};
use super::pullback::{pullback_length, PullbackError, PullbackOptions};
use super::solver::{solve_harmonic, EquivariantMap, SolveOptions, SolverError};
use crate::charvar::{self, length_spectrum, limit_from_spectra, projectivize, Family, LengthSpectrum, RepError};
use crate::sl2c;
use crate::words::ConjClassSet;

#[derive(Debug, Error)]
pub enum RayError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Pullback(#[from] PullbackError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayInit {
    /// Octagon embedding at the first sample, then warm starts.
    Embedding,
    /// Random images from the seed at the first sample, then warm starts.
    Random(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayOptions {
    pub solve: SolveOptions,
    pub pullback: PullbackOptions,
    pub init: RayInit,
}

impl Default for RayOptions {
    fn default() -> Self {
        RayOptions {
            solve: SolveOptions { tol: 1e-12, relax: 1.5, ..Default::default() },
            pullback: PullbackOptions::default(),
            init: RayInit::Embedding,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub t: f64,
    pub energy: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub monotone: bool,
    /// `‖Hopf‖₁` before normalization.
    pub hopf_norm: f64,
    pub hopf_residual: f64,
    pub zeros: Vec<usize>,
    /// Median of `log(1/|μ|)` over triangles away from the zeros.
    pub beltrami_median: Option<f64>,
    /// Raw translation lengths over the spectral classes.
    pub translation: Vec<f64>,
    /// Pullback lengths over the pullback classes.
    pub pullback: Vec<f64>,
    /// `ℓ_ρ` over the pullback classes.
    pub pullback_translation: Vec<f64>,
    /// Largest axis defect of the optimal pullback paths.
    pub max_axis_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayReport {
    pub family: String,
    pub level: usize,
    pub schedule: Vec<f64>,
    pub classes: Vec<String>,
    pub pullback_classes: Vec<String>,
    pub samples: Vec<RaySample>,
    /// Relative L¹ distance between consecutive normalized Hopf samples.
    pub hopf_cauchy: Vec<f64>,
    /// Max-norm distance between consecutive projectivized spectra.
    pub translation_cauchy: Vec<f64>,
    pub pullback_cauchy: Vec<f64>,
    /// Projectivized last iterate.
    pub limit: Vec<f64>,
    /// Projectivized growth rate between the last two samples.
    pub rate_limit: Vec<f64>,
    pub support: Vec<bool>,
    pub flat_comparison: Option<FlatComparison>,
    /// Human-readable problems (non-convergence, missing limits).
    pub flags: Vec<String>,
    #[serde(skip)]
    pub hopf_samples: Vec<HopfSample>,
    #[serde(skip)]
    pub beltrami_fields: Vec<BeltramiField>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatComparison {
    /// Projectivized flat spectrum.
    pub flat: Vec<f64>,
    /// Max-norm defect of the growth-rate limit against it.
    pub rate_defect: f64,
    /// Max-norm defect of the last iterate against it.
    pub iterate_defect: f64,
}

impl RayReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn all_converged(&self) -> bool {
        self.samples.iter().all(|s| s.converged)
    }

    pub fn all_monotone(&self) -> bool {
        self.samples.iter().all(|s| s.monotone)
    }

    /// `t, energy, sweeps, hopf_norm, hopf_residual, beltrami_median, zeros`.
    pub fn summary_csv(&self) -> String {
        let mut s =
            String::from("t,energy,sweeps,converged,hopf_norm,hopf_residual,beltrami_median,zeros,max_axis_defect\n");
        for r in &self.samples {
            s.push_str(&format!(
                "{},{:.12e},{},{},{:.12e},{:.12e},{},{},{:.6e}\n",
                r.t,
                r.energy,
                r.sweeps,
                r.converged,
                r.hopf_norm,
                r.hopf_residual,
                r.beltrami_median.map_or(String::from("nan"), |m| format!("{m:.12e}")),
                r.zeros.len(),
                r.max_axis_defect
            ));
        }
        s
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn projectivized(v: &[f64]) -> Option<Vec<f64>> {
    let m = v.iter().cloned().fold(0.0, f64::max);
    (m > 0.0).then(|| v.iter().map(|x| x / m).collect())
}

/// Solves along `schedule` with warm starts and collects energies, Hopf and
/// Beltrami data, and translation and pullback spectra.
pub fn degeneration_ray(
    family: &Family,
    classes: &ConjClassSet,
    pullback_classes: &ConjClassSet,
    schedule: &[f64],
    level: usize,
    flat: Option<&LengthSpectrum>,
    opts: &RayOptions,
) -> Result<RayReport, RayError> {
    let mesh = Arc::new(build_octagon_mesh(level)?);
    degeneration_ray_on(mesh, family, classes, pullback_classes, schedule, flat, opts)
}

/// [`degeneration_ray`] on a prebuilt mesh.
pub fn degeneration_ray_on(
    mesh: Arc<DomainMesh>,
    family: &Family,
    classes: &ConjClassSet,
    pullback_classes: &ConjClassSet,
    schedule: &[f64],
    flat: Option<&LengthSpectrum>,
    opts: &RayOptions,
) -> Result<RayReport, RayError> {
    charvar::check_schedule(schedule, 4)?;
    let level = mesh.level;
    let mut samples = Vec::new();
    let mut raw = Vec::new();
    let mut hopf_samples = Vec::new();
    let mut beltrami_fields = Vec::new();
    let mut flags = Vec::new();
    let mut previous: Option<EquivariantMap> = None;
    for &t in schedule {
        let rep = family.sample(t)?;
        let init = match (&previous, opts.init) {
            (Some(u), _) => u.with_rep(rep.clone())?,
            (None, RayInit::Embedding) => EquivariantMap::fuchsian_embedding(mesh.clone(), rep.clone())?,
            (None, RayInit::Random(seed)) => EquivariantMap::random(mesh.clone(), rep.clone(), seed, 1.0)?,
        };
        let (u, report) = solve_harmonic(init, &opts.solve)?;
        if !report.converged {
            flags.push(format!("solver did not converge at t = {t} after {} sweeps", report.sweeps));
        }
        let h = hopf(&u);
        let zeros = hopf_zeros(&h, &mesh);
        let b = beltrami(&u);
        let far = far_from_zeros(&mesh, &zeros);
        let spectrum = length_spectrum(&rep, classes);
        let mut pullback = Vec::new();
        let mut pullback_translation = Vec::new();
        let mut max_axis_defect: f64 = 0.0;
        for w in pullback_classes.classes() {
            let p = pullback_length(&u, w, &opts.pullback)?;
            if !p.path.is_empty() {
                if let Ok(a) = sl2c::axis_defect(&p.path, &rep.evaluate(w)) {
                    max_axis_defect = max_axis_defect.max(a);
                }
            }
            pullback.push(p.length);
            pullback_translation.push(p.translation_length);
        }
        samples.push(RaySample {
            t,
            energy: report.energy(),
            sweeps: report.sweeps,
            converged: report.converged,
            monotone: report.is_monotone(),
            hopf_norm: h.l1_norm(),
            hopf_residual: h.residual,
            zeros,
            beltrami_median: b.median_log_inverse(&far),
            translation: spectrum.values.clone(),
            pullback,
            pullback_translation,
            max_axis_defect,
        });
        raw.push(spectrum);
        hopf_samples.push(h.normalized());
        beltrami_fields.push(b);
        previous = Some(u);
    }

    let hopf_cauchy = hopf_samples.windows(2).map(|w| w[1].relative_l1(&w[0])).collect();
    let pullback_proj: Vec<Option<Vec<f64>>> = samples.iter().map(|s| projectivized(&s.pullback)).collect();
    let pullback_cauchy =
        pullback_proj.windows(2).filter_map(|w| Some(max_diff(w[0].as_ref()?, w[1].as_ref()?))).collect();
    let (limit, translation_cauchy, rate_limit, support) = match limit_from_spectra(schedule, &raw) {
        Ok((last, diag)) => (last.values, diag.cauchy_defects, diag.rate_limit.values, diag.support),
        Err(e) => {
            flags.push(format!("no projective limit: {e}"));
            (Vec::new(), Vec::new(), Vec::new(), Vec::new())
        }
    };
    let flat_comparison = match flat {
        Some(f) if !limit.is_empty() => {
            let p = projectivize(f)?;
            Some(FlatComparison {
                rate_defect: max_diff(&rate_limit, &p.values),
                iterate_defect: max_diff(&limit, &p.values),
                flat: p.values,
            })
        }
        _ => None,
    };
    Ok(RayReport {
        family: family.describe(),
        level,
        schedule: schedule.to_vec(),
        classes: classes.classes().iter().map(|w| w.to_string()).collect(),
        pullback_classes: pullback_classes.classes().iter().map(|w| w.to_string()).collect(),
        samples,
        hopf_cauchy,
        translation_cauchy,
        pullback_cauchy,
        limit,
        rate_limit,
        support,
        flat_comparison,
        flags,
        hopf_samples,
        beltrami_fields,
    })
}
