//! Predictor-corrector path following along `H(t) = H0 + s(t)(H1 − H0)`.
//!
//! A run starts at a stationary point of `E(·, 0)` and visits
//! `t_k = k/steps`, applying an optional tangent predictor and an optional
//! variational corrector at each step. The five named methods are fixed
//! combinations of the two:
//!
//! | method           | predictor            | corrector |
//! |------------------|----------------------|-----------|
//! | AAVQE            | none                 | VQE       |
//! | VAQC             | Euler (pseudo-inverse) | VQE     |
//! | AQC-PQC          | constrained least squares | none |
//! | G-AQC-PQC        | CG on Hessian-vector products | none |
//! | G-AQC-PQC-VQE    | CG on Hessian-vector products | VQE |

pub mod landscape;
pub mod predictors;
pub mod schedule;
pub mod trace;

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::OptimizerConfig;

pub use landscape::{EnergyLandscape, HvpMode};
pub use predictors::{CgSettings, CurvatureMemory, Prediction};
pub use schedule::{make_schedule, Schedule};
pub use trace::{RunTrace, StepRecord, TraceMeta};

/// Largest `‖∇E(θ*, 0)‖∞` accepted as a stationary starting point.
pub const START_STATIONARITY_TOL: f64 = 1e-6;

/// If `‖∇E(θ*, 1)‖∞` is this small as well, no gradient-driven method can
/// leave `θ*` and the run is refused.
pub const ZERO_GRADIENT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    #[default]
    None,
    EulerPinv,
    AqcpqcConstrained,
    LbfgsNewton,
}

impl Predictor {
    pub fn name(&self) -> &'static str {
        match self {
            Predictor::None => "none",
            Predictor::EulerPinv => "euler_pinv",
            Predictor::AqcpqcConstrained => "aqcpqc_constrained",
            Predictor::LbfgsNewton => "lbfgs_newton",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corrector {
    #[default]
    None,
    Vqe(OptimizerConfig),
}

impl Corrector {
    pub fn name(&self) -> String {
        match self {
            Corrector::None => "none".into(),
            Corrector::Vqe(o) => format!("vqe_{}", o.name()),
        }
    }
}

/// Where the corrector sits relative to the predictor and the advance of `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOrdering {
    /// Predict from `t`, then correct at `t + h`.
    #[default]
    PredictThenCorrect,
    /// Predict from `t`, correct at `t`, apply the prediction, then advance.
    /// Kept for comparison with published pseudocode; paths without a
    /// predictor ignore it.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub predictor: Predictor,
    pub corrector: Corrector,
    pub negative_curvature_abort: bool,
    /// Relative eigenvalue cutoff of the pseudo-inverse.
    pub pinv_cutoff: f64,
    pub psd_tol: f64,
    /// Null directions scanned when repairing an indefinite Hessian.
    pub null_scan_dims: usize,
    pub hvp: HvpMode,
    pub cg_tol: f64,
    /// Defaults to the number of parameters.
    pub cg_max_iter: Option<usize>,
    pub curvature_memory: usize,
    pub ordering: StepOrdering,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            predictor: Predictor::None,
            corrector: Corrector::Vqe(OptimizerConfig::default()),
            negative_curvature_abort: false,
            pinv_cutoff: 1e-8,
            psd_tol: 1e-8,
            null_scan_dims: 2,
            hvp: HvpMode::GradientDifference,
            cg_tol: 1e-6,
            cg_max_iter: None,
            curvature_memory: 10,
            ordering: StepOrdering::PredictThenCorrect,
        }
    }
}

impl MethodConfig {
    pub fn aavqe(optimizer: OptimizerConfig) -> Self {
        MethodConfig {
            predictor: Predictor::None,
            corrector: Corrector::Vqe(optimizer),
            ..Default::default()
        }
    }

    pub fn vaqc(optimizer: OptimizerConfig) -> Self {
        MethodConfig {
            predictor: Predictor::EulerPinv,
            corrector: Corrector::Vqe(optimizer),
            ..Default::default()
        }
    }

    pub fn aqcpqc() -> Self {
        MethodConfig {
            predictor: Predictor::AqcpqcConstrained,
            corrector: Corrector::None,
            ..Default::default()
        }
    }

    pub fn gaqcpqc() -> Self {
        MethodConfig {
            predictor: Predictor::LbfgsNewton,
            corrector: Corrector::None,
            negative_curvature_abort: true,
            ..Default::default()
        }
    }

    pub fn gaqcpqc_vqe(optimizer: OptimizerConfig) -> Self {
        MethodConfig {
            corrector: Corrector::Vqe(optimizer),
            ..Self::gaqcpqc()
        }
    }

    /// Builds one of the named methods: `aavqe`, `vaqc`, `aqcpqc`,
    /// `gaqcpqc`, `gaqcpqc_vqe` (case and `-` insensitive).
    pub fn named(name: &str, optimizer: OptimizerConfig) -> Result<Self> {
        let key: String = name.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.as_str() {
            "aavqe" => Ok(Self::aavqe(optimizer)),
            "vaqc" => Ok(Self::vaqc(optimizer)),
            "aqcpqc" => Ok(Self::aqcpqc()),
            "gaqcpqc" => Ok(Self::gaqcpqc()),
            "gaqcpqcvqe" => Ok(Self::gaqcpqc_vqe(optimizer)),
            _ => Err(Error::Config(format!("unknown method '{name}'"))),
        }
    }

    /// Name of the method this combination corresponds to, or `custom`.
    pub fn method_name(&self) -> &'static str {
        match (self.predictor, &self.corrector) {
            (Predictor::None, Corrector::Vqe(_)) => "AAVQE",
            (Predictor::EulerPinv, Corrector::Vqe(_)) => "VAQC",
            (Predictor::AqcpqcConstrained, Corrector::None) => "AQC-PQC",
            (Predictor::LbfgsNewton, Corrector::None) => "G-AQC-PQC",
            (Predictor::LbfgsNewton, Corrector::Vqe(_)) => "G-AQC-PQC-VQE",
            _ => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.predictor == Predictor::None && self.corrector == Corrector::None {
            return Err(Error::Config("method needs a predictor or a corrector".into()));
        }
        if !(self.pinv_cutoff >= 0.0) || !(self.psd_tol >= 0.0) || !(self.cg_tol >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        if let Corrector::Vqe(o) = &self.corrector {
            o.validate()?;
        }
        Ok(())
    }
}

/// A checked starting point on a landscape.
#[derive(Debug)]
pub struct ContinuationProblem<'a, L: EnergyLandscape + ?Sized> {
    landscape: &'a L,
    theta_start: Vec<f64>,
    steps: usize,
    seed: u64,
    oracle: bool,
}

impl<'a, L: EnergyLandscape + ?Sized> ContinuationProblem<'a, L> {
    /// Checks that `theta_start` is stationary for `E(·, 0)` and that the
    /// gradient at `t = 1` does not vanish there too. `unchecked` skips both.
    pub fn new(landscape: &'a L, theta_start: Vec<f64>, steps: usize, unchecked: bool) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if theta_start.len() != landscape.n_params() {
            return Err(Error::Dimension(format!(
                "{} start parameters for {} circuit parameters",
                theta_start.len(),
                landscape.n_params()
            )));
        }
        if !unchecked {
            let g0 = landscape.gradient(&theta_start, 0.0)?.amax();
            if !(g0 <= START_STATIONARITY_TOL) {
                return Err(Error::Guard(format!(
                    "start is not stationary for H0: ‖∇E(θ, 0)‖∞ = {g0:.3e} > {START_STATIONARITY_TOL:e}"
                )));
            }
            let g1 = landscape.gradient(&theta_start, 1.0)?.amax();
            if g1 <= ZERO_GRADIENT_TOL {
                return Err(Error::Guard(format!(
                    "gradient vanishes at both ends of the path (‖∇E(θ, 1)‖∞ = {g1:.3e}); the start cannot move"
                )));
            }
        }
        Ok(ContinuationProblem {
            landscape,
            theta_start,
            steps,
            seed: 0,
            oracle: false,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Record the exact ground energy at every step.
    pub fn with_oracle(mut self, oracle: bool) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn landscape(&self) -> &L {
        self.landscape
    }

    pub fn theta_start(&self) -> &[f64] {
        &self.theta_start
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Seed for step `k`; step 0 uses the run seed itself.
pub fn derive_seed(seed: u64, k: usize) -> u64 {
    if k == 0 {
        return seed;
    }
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run<L: EnergyLandscape + ?Sized>(problem: &ContinuationProblem<'_, L>, cfg: &MethodConfig) -> Result<(Vec<f64>, RunTrace)> {
    run_observed(problem, cfg, |_| {})
}

/// Like [`run`], handing every record to `on_step` as soon as it exists, so
/// a failing step still leaves the earlier ones behind.
pub fn run_observed<L: EnergyLandscape + ?Sized>(
    problem: &ContinuationProblem<'_, L>,
    cfg: &MethodConfig,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<(Vec<f64>, RunTrace)> {
    cfg.validate()?;
    let f = problem.landscape;
    let schedule = f.schedule();
    let steps = problem.steps;
    let h = 1.0 / steps as f64;
    let n = f.n_params();
    let cg = CgSettings {
        hvp: cfg.hvp,
        tol: cfg.cg_tol,
        max_iter: cfg.cg_max_iter.unwrap_or(n.max(1)),
        negative_curvature_abort: cfg.negative_curvature_abort,
    };
    let mut memory = CurvatureMemory::new(cfg.curvature_memory);
    let literal = cfg.ordering == StepOrdering::Literal && cfg.predictor != Predictor::None;
    let seeds: Vec<u64> = (0..steps).map(|k| derive_seed(problem.seed, k)).collect();

    let mut theta = problem.theta_start.clone();
    let mut records = Vec::with_capacity(steps);
    for k in 0..steps {
        let clock = Instant::now();
        let evals_before = f.evaluations();
        let t = k as f64 * h;
        let t_next = if k + 1 == steps { 1.0 } else { (k + 1) as f64 * h };
        let theta_before = theta.clone();

        let prediction = match cfg.predictor {
            Predictor::None => Prediction {
                eps: DVector::zeros(n),
                ..Default::default()
            },
            Predictor::EulerPinv => predictors::euler_pinv(f, &theta, t, h, cfg.pinv_cutoff)?,
            Predictor::AqcpqcConstrained => {
                predictors::aqcpqc_constrained(f, &theta, t, h, cfg.pinv_cutoff, cfg.psd_tol, cfg.null_scan_dims)?
            }
            Predictor::LbfgsNewton => predictors::gaqcpqc(f, &theta, t, h, &cg, &mut memory)?,
        };
        let eps = prediction.eps;
        let mut flags = prediction.flags;
        for flag in &flags {
            log::warn!("step {k}: {flag}");
        }
        let add = |x: &[f64]| -> Vec<f64> { x.iter().zip(eps.iter()).map(|(a, b)| a + b).collect() };
        let correct_at = if literal { t } else { t_next };
        let base = if literal { theta.clone() } else { add(&theta) };
        let theta_after_predictor = add(&theta);

        let (theta_after_corrector, corrector_iterations) = match &cfg.corrector {
            Corrector::None => (base, 0),
            Corrector::Vqe(opt) => {
                let r = f.minimize(correct_at, &base, &opt.with_seed(seeds[k]))?;
                if r.exit_reason != crate::optimizers::ExitReason::Converged && matches!(opt, OptimizerConfig::Lbfgs(_)) {
                    flags.push(format!("corrector_{}", serde_json::to_value(r.exit_reason)?.as_str().unwrap_or("exit")));
                }
                (r.theta_final, r.iterations)
            }
        };
        theta = if literal { add(&theta_after_corrector) } else { theta_after_corrector.clone() };

        let energy = f.energy(&theta, t_next)?;
        let energy_after_predictor = f.energy(&theta_after_predictor, t_next)?;
        let grad_norm = f.gradient(&theta, t_next)?.amax();
        if !energy.is_finite() || theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("step {k} produced non-finite parameters or energy")));
        }
        let exact_ground = if problem.oracle { f.exact_ground_energy(t_next)? } else { None };
        let record = StepRecord {
            step: k,
            t: t_next,
            s: schedule.value(t_next),
            theta_before,
            theta_after_predictor,
            theta_after_corrector,
            theta_out: theta.clone(),
            energy,
            energy_after_predictor,
            grad_norm,
            eps_norm: eps.norm(),
            exact_ground,
            error: exact_ground.map(|e| energy - e),
            wall_time_s: clock.elapsed().as_secs_f64(),
            flags,
            cg_iterations: prediction.cg_iterations,
            corrector_iterations,
            evaluations: f.evaluations() - evals_before,
        };
        on_step(&record);
        records.push(record);
    }

    let meta = TraceMeta {
        method: cfg.method_name().to_string(),
        predictor: cfg.predictor.name().to_string(),
        corrector: cfg.corrector.name(),
        ordering: serde_json::to_value(cfg.ordering)?.as_str().unwrap_or_default().to_string(),
        schedule: schedule.name().to_string(),
        steps,
        n_params: n,
        seed: problem.seed,
        corrector_seeds: seeds,
        theta_initial: problem.theta_start.clone(),
        config: serde_json::to_value(cfg)?,
    };
    Ok((theta, RunTrace { meta, records }))
}
