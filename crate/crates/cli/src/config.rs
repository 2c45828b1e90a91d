//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use degenlab::flat::Convention;
use degenlab::harmonic::{PullbackOptions, SolveOptions, SweepMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Fuchsian,
    Twist,
    Diagonal,
    Unitary,
    File,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    Embedding,
    Random,
}

/// Every key an experiment may read. Keys a subcommand needs but which are
/// missing are reported as validation errors by that subcommand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "two")]
    pub genus: usize,
    /// Class cutoff `N`.
    pub n: Option<usize>,
    pub family: Option<FamilyKind>,
    pub handle: Option<usize>,
    pub periods: Option<Vec<f64>>,
    pub rep_file: Option<PathBuf>,
    /// Family parameter for single-sample experiments.
    pub t: Option<f64>,
    pub schedule: Option<Vec<f64>>,
    pub level: Option<usize>,
    pub surface: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convention: Convention,

    pub tol: Option<f64>,
    pub grad_tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub relax: Option<f64>,
    pub degenerate_energy: Option<f64>,
    pub mode: Option<SweepMode>,
    #[serde(default)]
    pub init: InitKind,

    /// Class cutoff for pullback lengths.
    pub pullback_n: Option<usize>,
    pub tube_radius: Option<f64>,
    pub tube_margin: Option<f64>,
    pub pullback_starts: Option<usize>,

    /// Largest relative L¹ distance accepted by `hopf-uniqueness`.
    pub agreement: Option<f64>,

    pub prongs: Option<Vec<usize>>,
    pub tree_vertices: Option<usize>,

    pub mesh_cache: Option<PathBuf>,
}

fn two() -> usize {
    2
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let mut c: Config =
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut c.rep_file, &mut c.surface, &mut c.mesh_cache].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    /// SHA-256 of the canonical JSON form, after command-line overrides.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn require<T: Clone>(value: &Option<T>, key: &str) -> Result<T, CliError> {
        value.clone().ok_or_else(|| CliError::Validation(format!("missing key `{key}`")))
    }

    pub fn class_cutoff(&self) -> Result<usize, CliError> {
        let n = Self::require(&self.n, "n")?;
        if !(1..=8).contains(&n) {
            return Err(CliError::Validation(format!("`n` must be in 1..=8, got {n}")));
        }
        Ok(n)
    }

    /// Solver options; tolerances have no defaults and must be present.
    pub fn solve_options(&self) -> Result<SolveOptions, CliError> {
        let opts = SolveOptions {
            tol: Self::require(&self.tol, "tol")?,
            grad_tol: self.grad_tol,
            max_sweeps: Self::require(&self.max_sweeps, "max_sweeps")?,
            degenerate_energy: Self::require(&self.degenerate_energy, "degenerate_energy")?,
            relax: Self::require(&self.relax, "relax")?,
            mode: self.mode.unwrap_or(SweepMode::GaussSeidel),
        };
        opts.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(opts)
    }

    pub fn pullback_options(&self) -> PullbackOptions {
        let d = PullbackOptions::default();
        PullbackOptions {
            tube_radius: self.tube_radius.unwrap_or(d.tube_radius),
            margin: self.tube_margin.unwrap_or(d.margin),
            starts: self.pullback_starts.unwrap_or(d.starts),
            ..d
        }
    }

    pub fn cache_dir(&self, out: &Path) -> PathBuf {
        self.mesh_cache.clone().unwrap_or_else(|| out.join("mesh-cache"))
    }
}
