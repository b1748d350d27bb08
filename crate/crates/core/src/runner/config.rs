//! Experiment configuration, read from TOML.
//!
//! ```toml
//! hamiltonian = "../data/beh2/beh2_r1.326.fcidump"   # FCIDUMP, or cached .json
//! bond_length = 1.326
//! initial = "fock"                # fock | transverse
//! start = "auto"                  # auto | hf | plus | zero | relaxed
//! ansatz = { kind = "hea", layers = 8 }   # or { kind = "uccsd" }
//! schedule = "linear"             # linear | cubic
//! steps = 5
//! method = "aavqe"                # aavqe | vaqc | aqcpqc | gaqcpqc | gaqcpqc_vqe
//! optimizer = { kind = "nsgd", epochs = 100, learning_rate = 0.01 }
//! seed = 0
//! oracle = true
//! unchecked = false
//!
//! [method_options]                # optional overrides of the method defaults
//! hvp = "exact_hessian"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuation::{HvpMode, MethodConfig, Schedule, StepOrdering};
use crate::error::{Error, Result};
use crate::optimizers::OptimizerConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialHamiltonian {
    #[default]
    Fock,
    Transverse,
}

impl InitialHamiltonian {
    pub fn name(&self) -> &'static str {
        match self {
            InitialHamiltonian::Fock => "fock",
            InitialHamiltonian::Transverse => "transverse",
        }
    }
}

/// How the stationary starting point for `H0` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// `hf` for HEA with Fock, `plus` for HEA with transverse, `zero` for UCCSD.
    #[default]
    Auto,
    /// HEA angles preparing the Hartree–Fock determinant.
    Hf,
    /// HEA angles preparing `|+⟩^{⊗n}`.
    Plus,
    /// All-zero UCCSD amplitudes.
    Zero,
    /// `plus` angles, perturbed with the run seed, then minimized on `H0`.
    Relaxed,
}

impl StartKind {
    pub fn name(&self) -> &'static str {
        match self {
            StartKind::Auto => "auto",
            StartKind::Hf => "hf",
            StartKind::Plus => "plus",
            StartKind::Zero => "zero",
            StartKind::Relaxed => "relaxed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnsatzConfig {
    Hea { layers: usize },
    Uccsd,
}

impl AnsatzConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AnsatzConfig::Hea { .. } => "hea",
            AnsatzConfig::Uccsd => "uccsd",
        }
    }

    pub fn layers(&self) -> Option<usize> {
        match self {
            AnsatzConfig::Hea { layers } => Some(*layers),
            AnsatzConfig::Uccsd => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodOptions {
    pub negative_curvature_abort: Option<bool>,
    pub pinv_cutoff: Option<f64>,
    pub psd_tol: Option<f64>,
    pub null_scan_dims: Option<usize>,
    pub hvp: Option<HvpMode>,
    pub cg_tol: Option<f64>,
    pub cg_max_iter: Option<usize>,
    pub curvature_memory: Option<usize>,
    pub ordering: Option<StepOrdering>,
}

fn default_steps() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_perturbation() -> f64 {
    0.1
}

fn default_schedule() -> Schedule {
    Schedule::Linear
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hamiltonian: PathBuf,
    #[serde(default)]
    pub bond_length: Option<f64>,
    #[serde(default)]
    pub initial: InitialHamiltonian,
    #[serde(default)]
    pub start: StartKind,
    pub ansatz: AnsatzConfig,
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
    #[serde(default = "default_steps")]
    pub steps: usize,
    pub method: String,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub method_options: MethodOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub oracle: bool,
    /// Skip the starting-point guard.
    #[serde(default)]
    pub unchecked: bool,
    /// Half-width of the uniform perturbation used by the `relaxed` start.
    #[serde(default = "default_perturbation")]
    pub relax_perturbation: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Directory relative paths are resolved against; not part of the schema.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn hamiltonian_path(&self) -> PathBuf {
        self.resolve(&self.hamiltonian)
    }

    pub fn method_config(&self) -> Result<MethodConfig> {
        let mut m = MethodConfig::named(&self.method, self.optimizer.clone())?;
        let o = &self.method_options;
        if let Some(v) = o.negative_curvature_abort {
            m.negative_curvature_abort = v;
        }
        if let Some(v) = o.pinv_cutoff {
            m.pinv_cutoff = v;
        }
        if let Some(v) = o.psd_tol {
            m.psd_tol = v;
        }
        if let Some(v) = o.null_scan_dims {
            m.null_scan_dims = v;
        }
        if let Some(v) = o.hvp {
            m.hvp = v;
        }
        if let Some(v) = o.cg_tol {
            m.cg_tol = v;
        }
        if o.cg_max_iter.is_some() {
            m.cg_max_iter = o.cg_max_iter;
        }
        if let Some(v) = o.curvature_memory {
            m.curvature_memory = v;
        }
        if let Some(v) = o.ordering {
            m.ordering = v;
        }
        m.validate()?;
        Ok(m)
    }

    /// The start actually used once `auto` is resolved.
    pub fn effective_start(&self) -> StartKind {
        match (self.start, self.ansatz, self.initial) {
            (StartKind::Auto, AnsatzConfig::Uccsd, _) => StartKind::Zero,
            (StartKind::Auto, AnsatzConfig::Hea { .. }, InitialHamiltonian::Fock) => StartKind::Hf,
            (StartKind::Auto, AnsatzConfig::Hea { .. }, InitialHamiltonian::Transverse) => StartKind::Plus,
            (s, _, _) => s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if let AnsatzConfig::Hea { layers } = self.ansatz {
            if layers == 0 {
                return Err(Error::Config("HEA needs at least one layer".into()));
            }
        }
        match (self.effective_start(), self.ansatz) {
            (StartKind::Zero, AnsatzConfig::Hea { .. }) => {
                return Err(Error::Config("start 'zero' applies to UCCSD only".into()))
            }
            (StartKind::Hf | StartKind::Plus | StartKind::Relaxed, AnsatzConfig::Uccsd) => {
                return Err(Error::Config("UCCSD starts from zero amplitudes".into()))
            }
            _ => {}
        }
        if !(self.relax_perturbation >= 0.0) {
            return Err(Error::Config("relax_perturbation must be non-negative".into()));
        }
        if let Some(r) = self.bond_length {
            if !(r > 0.0) {
                return Err(Error::Config(format!("bond length {r} must be positive")));
            }
        }
        self.schedule.validate()?;
        self.optimizer.validate()?;
        self.method_config()?;
        Ok(())
    }
}
