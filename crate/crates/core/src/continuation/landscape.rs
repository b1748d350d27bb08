use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Schedule;
use crate::derivatives::{EnergyFunctional, HVP_STEP};
use crate::error::{Error, Result};
use crate::exact;
use crate::optimizers::{self, lbfgs_minimize, nsgd_minimize, FnObjective, OptimizerConfig, OptimizerResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HvpMode {
    /// Central difference of gradients along the direction.
    #[default]
    GradientDifference,
    /// Multiply by the full parameter-shift Hessian.
    ExactHessian,
}

/// A parametrized path of energy surfaces `E(θ, t)`, `t ∈ [0, 1]`.
///
/// The continuation driver only talks to this trait, so analytic toy
/// surfaces and circuit energies run through the same code.
pub trait EnergyLandscape: Sync {
    fn n_params(&self) -> usize;
    fn schedule(&self) -> Schedule;
    fn energy(&self, theta: &[f64], t: f64) -> Result<f64>;
    fn gradient(&self, theta: &[f64], t: f64) -> Result<DVector<f64>>;
    fn hessian(&self, theta: &[f64], t: f64) -> Result<DMatrix<f64>>;
    /// `∂_t ∇_θ E`.
    fn q_vector(&self, theta: &[f64], t: f64) -> Result<DVector<f64>>;

    fn q_tilde(&self, theta: &[f64], t: f64, h: f64) -> Result<DVector<f64>> {
        Ok(self.q_vector(theta, t)? * h)
    }

    fn hessian_vector_product(&self, theta: &[f64], t: f64, v: &DVector<f64>, mode: HvpMode) -> Result<DVector<f64>> {
        if v.len() != self.n_params() {
            return Err(Error::Dimension(format!("vector of length {} for {} parameters", v.len(), self.n_params())));
        }
        match mode {
            HvpMode::ExactHessian => Ok(self.hessian(theta, t)? * v),
            HvpMode::GradientDifference => {
                let norm = v.norm();
                if norm == 0.0 {
                    return Ok(DVector::zeros(v.len()));
                }
                let u = v / norm;
                let x = DVector::from_column_slice(theta);
                let plus = self.gradient((&x + &u * HVP_STEP).as_slice(), t)?;
                let minus = self.gradient((&x - &u * HVP_STEP).as_slice(), t)?;
                Ok((plus - minus) * (norm / (2.0 * HVP_STEP)))
            }
        }
    }

    /// Minimizes `E(·, t)` from `theta0`.
    fn minimize(&self, t: f64, theta0: &[f64], optimizer: &OptimizerConfig) -> Result<OptimizerResult> {
        let mut obj = FnObjective::new(|x: &[f64]| self.energy(x, t), |x: &[f64]| self.gradient(x, t));
        match optimizer {
            OptimizerConfig::Lbfgs(c) => lbfgs_minimize(&mut obj, theta0, c),
            OptimizerConfig::Nsgd(c) => nsgd_minimize(&mut obj, theta0, c),
        }
    }

    /// Exact ground energy of the path at `t`, when one is available.
    fn exact_ground_energy(&self, _t: f64) -> Result<Option<f64>> {
        Ok(None)
    }

    /// Running count of expensive evaluations, for bookkeeping.
    fn evaluations(&self) -> u64 {
        0
    }
}

impl EnergyLandscape for EnergyFunctional {
    fn n_params(&self) -> usize {
        EnergyFunctional::n_params(self)
    }

    fn schedule(&self) -> Schedule {
        EnergyFunctional::schedule(self)
    }

    fn energy(&self, theta: &[f64], t: f64) -> Result<f64> {
        EnergyFunctional::energy(self, theta, t)
    }

    fn gradient(&self, theta: &[f64], t: f64) -> Result<DVector<f64>> {
        EnergyFunctional::gradient(self, theta, t)
    }

    fn hessian(&self, theta: &[f64], t: f64) -> Result<DMatrix<f64>> {
        EnergyFunctional::hessian(self, theta, t)
    }

    fn q_vector(&self, theta: &[f64], t: f64) -> Result<DVector<f64>> {
        EnergyFunctional::q_vector(self, theta, t)
    }

    fn q_tilde(&self, theta: &[f64], t: f64, h: f64) -> Result<DVector<f64>> {
        EnergyFunctional::q_tilde(self, theta, t, h)
    }

    fn minimize(&self, t: f64, theta0: &[f64], optimizer: &OptimizerConfig) -> Result<OptimizerResult> {
        optimizers::vqe(self, t, theta0, optimizer)
    }

    fn exact_ground_energy(&self, t: f64) -> Result<Option<f64>> {
        Ok(Some(exact::ground_energy(&self.hamiltonian_at(t)?)?))
    }

    fn evaluations(&self) -> u64 {
        EnergyFunctional::evaluations(self)
    }
}
