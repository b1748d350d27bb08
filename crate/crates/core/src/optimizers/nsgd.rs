//! Gradient descent with additive, decaying Gaussian gradient noise.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ExitReason, Objective, OptimizerResult};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NsgdConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Noise variance decays as `η/(1+t)^γ`.
    pub decay: f64,
    pub seed: u64,
    /// Test hook: with noise off the method is plain gradient descent.
    pub noise_enabled: bool,
}

impl Default for NsgdConfig {
    fn default() -> Self {
        NsgdConfig {
            epochs: 100,
            learning_rate: 0.01,
            decay: 0.55,
            seed: 0,
            noise_enabled: true,
        }
    }
}

impl NsgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.decay > 0.0) {
            return Err(Error::Config("N-SGD needs positive learning rate and decay".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("N-SGD needs at least one epoch".into()));
        }
        Ok(())
    }
}

/// Runs `epochs` noisy steps and returns the best iterate seen (final one included).
pub fn nsgd_minimize<O: Objective>(obj: &mut O, x0: &[f64], cfg: &NsgdConfig) -> Result<OptimizerResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eta = cfg.learning_rate;
    let mut x = DVector::from_column_slice(x0);
    let mut best: Option<(f64, DVector<f64>, f64)> = None;
    let mut values = Vec::with_capacity(cfg.epochs + 1);
    let mut calls = 0;

    let consider = |f: f64, x: &DVector<f64>, gnorm: f64, best: &mut Option<(f64, DVector<f64>, f64)>| {
        if best.as_ref().is_none_or(|b| f < b.0) {
            *best = Some((f, x.clone(), gnorm));
        }
    };

    for epoch in 0..cfg.epochs {
        let f = obj.value(x.as_slice())?;
        let g = obj.gradient(x.as_slice())?;
        calls += 1;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("N-SGD epoch {epoch}")));
        }
        values.push(f);
        consider(f, &x, g.amax(), &mut best);
        let mut step = g;
        if cfg.noise_enabled {
            let sigma = (eta / (1.0 + epoch as f64).powf(cfg.decay)).sqrt();
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
            for v in step.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
        x.axpy(-eta, &step, 1.0);
    }
    let f = obj.value(x.as_slice())?;
    let g = obj.gradient(x.as_slice())?;
    calls += 1;
    if !f.is_finite() {
        return Err(Error::NonFinite("N-SGD final iterate".into()));
    }
    values.push(f);
    consider(f, &x, g.amax(), &mut best);
    let (f_best, x_best, g_best) = best.expect("at least one epoch ran");
    Ok(OptimizerResult {
        theta_final: x_best.as_slice().to_vec(),
        energy_final: f_best,
        iterations: cfg.epochs,
        grad_norm: g_best,
        exit_reason: ExitReason::MaxIter,
        objective_calls: calls,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::FnObjective;

    fn bowl() -> impl Objective {
        FnObjective::new(
            |x: &[f64]| Ok(x.iter().map(|v| v * v).sum::<f64>()),
            |x: &[f64]| Ok(DVector::from_iterator(x.len(), x.iter().map(|v| 2.0 * v))),
        )
    }

    #[test]
    fn noiseless_is_gradient_descent() {
        let cfg = NsgdConfig {
            noise_enabled: false,
            epochs: 10,
            ..NsgdConfig::default()
        };
        let r = nsgd_minimize(&mut bowl(), &[1.0, -2.0], &cfg).unwrap();
        // x_k = (1 − 2η)^k x_0, monotone so the last iterate is the best
        let factor = (1.0f64 - 0.02).powi(10);
        assert!((r.theta_final[0] - factor).abs() < 1e-15);
        assert!((r.theta_final[1] + 2.0 * factor).abs() < 1e-15);
    }

    #[test]
    fn seeded_runs_identical() {
        let cfg = NsgdConfig {
            seed: 42,
            ..NsgdConfig::default()
        };
        let a = nsgd_minimize(&mut bowl(), &[0.5, 0.5, 0.5], &cfg).unwrap();
        let b = nsgd_minimize(&mut bowl(), &[0.5, 0.5, 0.5], &cfg).unwrap();
        assert_eq!(a, b);
        let c = nsgd_minimize(&mut bowl(), &[0.5, 0.5, 0.5], &NsgdConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn best_seen_is_returned() {
        let r = nsgd_minimize(&mut bowl(), &[0.0, 0.0], &NsgdConfig::default()).unwrap();
        // starting at the minimum, noise can only make things worse
        assert_eq!(r.theta_final, vec![0.0, 0.0]);
        assert_eq!(r.energy_final, 0.0);
    }

    #[test]
    fn stationary_point_without_noise_stays() {
        let cfg = NsgdConfig {
            noise_enabled: false,
            ..NsgdConfig::default()
        };
        let r = nsgd_minimize(&mut bowl(), &[0.0], &cfg).unwrap();
        assert_eq!(r.theta_final, vec![0.0]);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut obj = FnObjective::new(|_: &[f64]| Ok(0.0), |_: &[f64]| Ok(DVector::from_element(1, f64::INFINITY)));
        assert!(nsgd_minimize(&mut obj, &[0.0], &NsgdConfig::default()).is_err());
    }
}
