//! Classical optimizers and the variational eigensolver loop built on them.

pub mod lbfgs;
pub mod nsgd;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::derivatives::EnergyFunctional;
use crate::error::Result;

pub use lbfgs::{lbfgs_minimize, lbfgs_newton_direction, LbfgsConfig, LbfgsHistory};
pub use nsgd::{nsgd_minimize, NsgdConfig};

/// Smooth objective queried separately for values and gradients, so line
/// searches can skip gradients they do not need.
pub trait Objective {
    fn value(&mut self, x: &[f64]) -> Result<f64>;
    fn gradient(&mut self, x: &[f64]) -> Result<DVector<f64>>;
}

pub struct FnObjective<V, G> {
    value: V,
    gradient: G,
}

impl<V, G> FnObjective<V, G>
where
    V: FnMut(&[f64]) -> Result<f64>,
    G: FnMut(&[f64]) -> Result<DVector<f64>>,
{
    pub fn new(value: V, gradient: G) -> Self {
        FnObjective { value, gradient }
    }
}

impl<V, G> Objective for FnObjective<V, G>
where
    V: FnMut(&[f64]) -> Result<f64>,
    G: FnMut(&[f64]) -> Result<DVector<f64>>,
{
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        (self.value)(x)
    }

    fn gradient(&mut self, x: &[f64]) -> Result<DVector<f64>> {
        (self.gradient)(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Converged,
    MaxIter,
    CurvatureAbort,
    LineSearchFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub theta_final: Vec<f64>,
    pub energy_final: f64,
    pub iterations: usize,
    /// Infinity norm of the gradient at `theta_final`.
    pub grad_norm: f64,
    pub exit_reason: ExitReason,
    /// Value or gradient requests made of the objective.
    pub objective_calls: usize,
    /// Objective at each accepted iterate (L-BFGS) or epoch (N-SGD).
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Lbfgs(LbfgsConfig),
    Nsgd(NsgdConfig),
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Lbfgs(LbfgsConfig::default())
    }
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Lbfgs(_) => "lbfgs",
            OptimizerConfig::Nsgd(_) => "nsgd",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerConfig::Lbfgs(c) => c.validate(),
            OptimizerConfig::Nsgd(c) => c.validate(),
        }
    }

    /// Same settings with the stochastic seed replaced.
    pub fn with_seed(&self, seed: u64) -> OptimizerConfig {
        match self {
            OptimizerConfig::Nsgd(c) => OptimizerConfig::Nsgd(NsgdConfig { seed, ..c.clone() }),
            other => other.clone(),
        }
    }
}

/// Minimizes `θ ↦ E(θ, t)` from `theta0`.
///
/// The optimizer sees the energy without identity terms; `energy_final` is
/// re-evaluated in full at the returned parameters.
pub fn vqe(f: &EnergyFunctional, t: f64, theta0: &[f64], optimizer: &OptimizerConfig) -> Result<OptimizerResult> {
    let mut obj = FnObjective::new(|x: &[f64]| f.energy_traceless(x, t), |x: &[f64]| f.gradient(x, t));
    let mut result = match optimizer {
        OptimizerConfig::Lbfgs(c) => lbfgs_minimize(&mut obj, theta0, c)?,
        OptimizerConfig::Nsgd(c) => nsgd_minimize(&mut obj, theta0, c)?,
    };
    let constant = f.constant_at(t)?;
    result.values.iter_mut().for_each(|v| *v += constant);
    result.energy_final = f.energy(&result.theta_final, t)?;
    Ok(result)
}
