//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use log::debug;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{ExitReason, Objective, OptimizerResult};
use crate::error::{Error, Result};

/// Pairs with `sᵀy ≤ CURVATURE_EPS·‖s‖‖y‖` are not stored.
pub const CURVATURE_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbfgsConfig {
    pub history_size: usize,
    /// Infinity-norm gradient tolerance.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            history_size: 10,
            grad_tol: 1e-8,
            max_iter: 400,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Config(format!(
                "Wolfe constants need 0 < c1 < c2 < 1, got {} and {}",
                self.c1, self.c2
            )));
        }
        if self.history_size == 0 || self.max_line_search == 0 {
            return Err(Error::Config("history size and line-search budget must be positive".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::Config("gradient tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Curvature pairs `(s, y)` of the most recent steps, oldest first.
#[derive(Clone, Debug, Default)]
pub struct LbfgsHistory {
    capacity: usize,
    pairs: VecDeque<(DVector<f64>, DVector<f64>)>,
}

impl LbfgsHistory {
    pub fn new(capacity: usize) -> Self {
        LbfgsHistory {
            capacity: capacity.max(1),
            pairs: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(DVector<f64>, DVector<f64>)> {
        self.pairs.iter()
    }

    /// Stores the pair unless it fails the curvature test; reports whether it was kept.
    pub fn push(&mut self, s: DVector<f64>, y: DVector<f64>) -> bool {
        let sy = s.dot(&y);
        if !(sy > CURVATURE_EPS * s.norm() * y.norm()) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
        true
    }

    /// Two-loop recursion: the inverse-Hessian approximation applied to `v`.
    pub fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        two_loop(self.pairs.iter(), v)
    }
}

fn two_loop<'a>(
    pairs: impl DoubleEndedIterator<Item = &'a (DVector<f64>, DVector<f64>)> + Clone,
    v: &DVector<f64>,
) -> DVector<f64> {
    let mut q = v.clone();
    let mut alphas = Vec::new();
    let mut last = None;
    for (s, y) in pairs.clone().rev() {
        let rho = 1.0 / y.dot(s);
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push((a, rho));
        if last.is_none() {
            last = Some((s, y));
        }
    }
    if let Some((s, y)) = last {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y), (a, rho)) in pairs.zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    q
}

/// Approximate `−A⁻¹·rhs` from curvature pairs of `A`; `−rhs` with no history.
pub fn lbfgs_newton_direction(history: &[(DVector<f64>, DVector<f64>)], rhs: &DVector<f64>) -> DVector<f64> {
    -two_loop(history.iter(), rhs)
}

struct Trial {
    alpha: f64,
    x: DVector<f64>,
    f: f64,
    g: Option<DVector<f64>>,
    dphi: f64,
}

struct LineSearch<'a, O: Objective> {
    obj: &'a mut O,
    x0: &'a DVector<f64>,
    d: &'a DVector<f64>,
    f0: f64,
    dphi0: f64,
    cfg: &'a LbfgsConfig,
    evals: usize,
}

impl<O: Objective> LineSearch<'_, O> {
    fn value(&mut self, alpha: f64) -> Result<Trial> {
        self.evals += 1;
        let x = self.x0 + self.d * alpha;
        let f = self.obj.value(x.as_slice())?;
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("objective at step {alpha}")));
        }
        Ok(Trial {
            alpha,
            x,
            f,
            g: None,
            dphi: f64::NAN,
        })
    }

    fn slope(&mut self, t: &mut Trial) -> Result<()> {
        if t.g.is_none() {
            let g = self.obj.gradient(t.x.as_slice())?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("gradient".into()));
            }
            t.dphi = g.dot(self.d);
            t.g = Some(g);
        }
        Ok(())
    }

    fn armijo_fails(&self, t: &Trial) -> bool {
        t.f > self.f0 + self.cfg.c1 * t.alpha * self.dphi0
    }

    fn curvature_holds(&self, t: &Trial) -> bool {
        t.dphi.abs() <= -self.cfg.c2 * self.dphi0
    }

    /// Returns an accepted trial, or `None` when no decrease was found.
    fn search(&mut self, alpha0: f64) -> Result<Option<Trial>> {
        let mut prev = Trial {
            alpha: 0.0,
            x: self.x0.clone(),
            f: self.f0,
            g: None,
            dphi: self.dphi0,
        };
        let mut alpha = alpha0;
        let mut first = true;
        while self.evals < self.cfg.max_line_search {
            let mut t = self.value(alpha)?;
            if self.armijo_fails(&t) || (!first && t.f >= prev.f) {
                return self.zoom(prev, t);
            }
            self.slope(&mut t)?;
            if self.curvature_holds(&t) {
                return Ok(Some(t));
            }
            if t.dphi >= 0.0 {
                return self.zoom(t, prev);
            }
            first = false;
            alpha = 2.0 * t.alpha;
            prev = t;
        }
        Ok(accept_lo(prev))
    }

    fn zoom(&mut self, mut lo: Trial, mut hi: Trial) -> Result<Option<Trial>> {
        while self.evals < self.cfg.max_line_search {
            let width = (hi.alpha - lo.alpha).abs();
            if width <= f64::EPSILON * lo.alpha.abs().max(hi.alpha.abs()) {
                break;
            }
            let alpha = interpolate(&lo, &hi);
            let mut t = self.value(alpha)?;
            if self.armijo_fails(&t) || t.f >= lo.f {
                hi = t;
            } else {
                self.slope(&mut t)?;
                if self.curvature_holds(&t) {
                    return Ok(Some(t));
                }
                if t.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = std::mem::replace(&mut lo, t);
                } else {
                    lo = t;
                }
            }
        }
        Ok(accept_lo(lo))
    }
}

/// Falls back to the best sufficient-decrease point found, if it moved at all.
fn accept_lo(lo: Trial) -> Option<Trial> {
    (lo.alpha > 0.0).then_some(lo)
}

/// Cubic interpolation on the bracket, safeguarded towards bisection.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let mid = 0.5 * (a + b);
    let (lo_bound, hi_bound) = {
        let (l, h) = if a < b { (a, b) } else { (b, a) };
        (l + 0.1 * (h - l), h - 0.1 * (h - l))
    };
    if lo.dphi.is_nan() || hi.dphi.is_nan() {
        // quadratic through f(a), f'(a), f(b)
        if lo.dphi.is_nan() {
            return mid;
        }
        let denom = 2.0 * (hi.f - lo.f - lo.dphi * (b - a));
        if denom > 0.0 {
            let c = a - lo.dphi * (b - a) * (b - a) / denom;
            if c.is_finite() && c > lo_bound && c < hi_bound {
                return c;
            }
        }
        return mid;
    }
    let d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.dphi * hi.dphi;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let c = b - (b - a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2);
    if c.is_finite() && c > lo_bound && c < hi_bound {
        c
    } else {
        mid
    }
}

pub fn lbfgs_minimize<O: Objective>(obj: &mut O, x0: &[f64], cfg: &LbfgsConfig) -> Result<OptimizerResult> {
    cfg.validate()?;
    let mut x = DVector::from_column_slice(x0);
    let mut f = obj.value(x.as_slice())?;
    let mut g = obj.gradient(x.as_slice())?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective at the starting point".into()));
    }
    let mut history = LbfgsHistory::new(cfg.history_size);
    let mut values = vec![f];
    let mut iterations = 0;
    let mut reason = ExitReason::MaxIter;
    let mut evaluations = 1;

    loop {
        if g.amax() <= cfg.grad_tol {
            reason = ExitReason::Converged;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        let mut d = -history.apply_inverse(&g);
        let mut dphi0 = g.dot(&d);
        if !(dphi0 < 0.0) {
            debug!("L-BFGS direction not descending; resetting memory");
            history.clear();
            d = -&g;
            dphi0 = g.dot(&d);
        }
        let alpha0 = if history.is_empty() {
            (1.0 / g.norm()).min(1.0)
        } else {
            1.0
        };
        let mut ls = LineSearch {
            obj,
            x0: &x,
            d: &d,
            f0: f,
            dphi0,
            cfg,
            evals: 0,
        };
        let found = ls.search(alpha0)?;
        evaluations += ls.evals;
        let Some(mut t) = found else {
            if history.is_empty() {
                reason = ExitReason::LineSearchFailed;
                break;
            }
            history.clear();
            continue;
        };
        if t.g.is_none() {
            let mut ls = LineSearch {
                obj,
                x0: &x,
                d: &d,
                f0: f,
                dphi0,
                cfg,
                evals: 0,
            };
            ls.slope(&mut t)?;
        }
        let g_new = t.g.take().expect("slope evaluated");
        history.push(&t.x - &x, &g_new - &g);
        x = t.x;
        f = t.f;
        g = g_new;
        values.push(f);
        iterations += 1;
    }
    Ok(OptimizerResult {
        grad_norm: g.amax(),
        theta_final: x.as_slice().to_vec(),
        energy_final: f,
        iterations,
        exit_reason: reason,
        objective_calls: evaluations,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::FnObjective;
    use nalgebra::DMatrix;

    fn quadratic(diag: Vec<f64>) -> impl Objective {
        let d2 = diag.clone();
        FnObjective::new(
            move |x: &[f64]| Ok(0.5 * x.iter().zip(&diag).map(|(a, d)| d * a * a).sum::<f64>()),
            move |x: &[f64]| Ok(DVector::from_iterator(x.len(), x.iter().zip(&d2).map(|(a, d)| d * a))),
        )
    }

    fn rosenbrock() -> impl Objective {
        FnObjective::new(
            |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            |x: &[f64]| {
                Ok(DVector::from_vec(vec![
                    -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                    200.0 * (x[1] - x[0] * x[0]),
                ]))
            },
        )
    }

    #[test]
    fn diagonal_quadratic() {
        let r = lbfgs_minimize(&mut quadratic(vec![1.0, 10.0]), &[1.0, 1.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(r.exit_reason, ExitReason::Converged);
        assert!(r.grad_norm <= 1e-8);
        assert!(r.iterations <= 20);
        assert!(r.theta_final.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn rosenbrock_valley() {
        let r = lbfgs_minimize(&mut rosenbrock(), &[-1.2, 1.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(r.exit_reason, ExitReason::Converged);
        let err = ((r.theta_final[0] - 1.0).powi(2) + (r.theta_final[1] - 1.0).powi(2)).sqrt();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn stationary_start() {
        let r = lbfgs_minimize(&mut quadratic(vec![2.0, 3.0]), &[0.0, 0.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.exit_reason, ExitReason::Converged);
        assert_eq!(r.theta_final, vec![0.0, 0.0]);
    }

    #[test]
    fn monotone_values() {
        let r = lbfgs_minimize(&mut rosenbrock(), &[-1.2, 1.0], &LbfgsConfig::default()).unwrap();
        assert!(r.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn non_finite_objective_aborts() {
        let mut obj = FnObjective::new(|_: &[f64]| Ok(f64::NAN), |x: &[f64]| Ok(DVector::from_element(x.len(), 1.0)));
        assert!(matches!(
            lbfgs_minimize(&mut obj, &[1.0], &LbfgsConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn bad_wolfe_constants() {
        let cfg = LbfgsConfig {
            c1: 0.9,
            c2: 0.1,
            ..LbfgsConfig::default()
        };
        assert!(matches!(
            lbfgs_minimize(&mut quadratic(vec![1.0]), &[1.0], &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn newton_direction_empty_history() {
        let d = lbfgs_newton_direction(&[], &DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(d, DVector::from_vec(vec![-1.0, 0.0]));
        let z = lbfgs_newton_direction(&[], &DVector::zeros(2));
        assert_eq!(z, DVector::zeros(2));
    }

    #[test]
    fn newton_direction_recovers_inverse() {
        // two A-conjugate steps of a 2×2 SPD quadratic pin down A⁻¹ exactly
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let s1 = DVector::from_vec(vec![1.0, 0.0]);
        let as1 = &a * &s1;
        let s2 = DVector::from_vec(vec![-as1[1], as1[0]]);
        let pairs = vec![(s1.clone(), &a * &s1), (s2.clone(), &a * &s2)];
        let rhs = DVector::from_vec(vec![0.3, -1.7]);
        let want = -a.clone().try_inverse().unwrap() * &rhs;
        let got = lbfgs_newton_direction(&pairs, &rhs);
        assert!((got - want).amax() < 1e-8);
        assert_eq!(lbfgs_newton_direction(&pairs, &DVector::zeros(2)), DVector::zeros(2));
    }

    #[test]
    fn history_skips_bad_curvature() {
        let mut h = LbfgsHistory::new(2);
        assert!(!h.push(DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![-1.0, 0.0])));
        assert!(h.push(DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![1.0, 0.0])));
        assert!(h.push(DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![0.0, 2.0])));
        assert!(h.push(DVector::from_vec(vec![1.0, 1.0]), DVector::from_vec(vec![1.0, 2.0])));
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn directions_descend_on_ill_conditioned_problem() {
        let diag: Vec<f64> = (0..12).map(|k| 10f64.powf(k as f64 / 3.0)).collect();
        let x0 = vec![1.0; 12];
        let r = lbfgs_minimize(&mut quadratic(diag), &x0, &LbfgsConfig::default()).unwrap();
        assert_eq!(r.exit_reason, ExitReason::Converged);
        assert!(r.values.windows(2).all(|w| w[1] <= w[0]));
    }
}
