//! Energy functional `E(θ,t) = ⟨ψ(θ)|H(t)|ψ(θ)⟩` and its exact parameter-shift derivatives.
//!
//! One simulation yields the energies of both endpoint Hamiltonians, so every
//! derivative is assembled from endpoint pairs and then mixed with `s(t)`.
//! Derivatives use only the non-identity part of each Hamiltonian; constant
//! offsets therefore never perturb a trajectory.
//!
//! A parameter may drive several rotations (UCCSD). Each rotation angle is shifted
//! on its own and the chain rule `dE/dθ = Σ_k c_k ∂E/∂φ_k` sums the pieces; shifting
//! the shared parameter itself is not exact once it enters with several frequencies.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ansatz::ParamCircuit;
use crate::continuation::Schedule;
use crate::error::{Error, Result};
use crate::pauli::Observable;
use crate::statevector::{CompiledObservable, StateVector};

/// Symmetry defect above which a Hessian is reported as broken.
pub const HESSIAN_SYMMETRY_TOL: f64 = 1e-9;

/// Default step of the gradient-difference Hessian-vector product.
pub const HVP_STEP: f64 = 1e-4;

#[derive(Debug)]
pub struct EnergyFunctional {
    circuit: ParamCircuit,
    h0: Observable,
    h1: Observable,
    schedule: Schedule,
    c0: CompiledObservable,
    c1: CompiledObservable,
    evaluations: AtomicU64,
}

impl Clone for EnergyFunctional {
    fn clone(&self) -> Self {
        EnergyFunctional {
            circuit: self.circuit.clone(),
            h0: self.h0.clone(),
            h1: self.h1.clone(),
            schedule: self.schedule,
            c0: self.c0.clone(),
            c1: self.c1.clone(),
            evaluations: AtomicU64::new(self.evaluations()),
        }
    }
}

/// Per-rotation shift slot: operation index, owning parameter, multiplier.
#[derive(Clone, Copy)]
struct Shift {
    op: usize,
    param: usize,
    multiplier: f64,
}

impl EnergyFunctional {
    pub fn new(
        circuit: ParamCircuit,
        h0: Observable,
        h1: Observable,
        schedule: Schedule,
    ) -> Result<Self> {
        let n = circuit.n_qubits();
        if h0.n_qubits() != n || h1.n_qubits() != n {
            return Err(Error::Dimension(format!(
                "circuit on {n} qubits, Hamiltonians on {} and {}",
                h0.n_qubits(),
                h1.n_qubits()
            )));
        }
        let c0 = CompiledObservable::new(&h0)?;
        let c1 = CompiledObservable::new(&h1)?;
        Ok(EnergyFunctional {
            circuit,
            h0,
            h1,
            schedule,
            c0,
            c1,
            evaluations: AtomicU64::new(0),
        })
    }

    pub fn circuit(&self) -> &ParamCircuit {
        &self.circuit
    }

    pub fn h0(&self) -> &Observable {
        &self.h0
    }

    pub fn h1(&self) -> &Observable {
        &self.h1
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    /// Circuit simulations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// `H(t)` as an explicit observable.
    pub fn hamiltonian_at(&self, t: f64) -> Result<Observable> {
        let s = self.s(t)?;
        Observable::axpy(1.0 - s, &self.h0, s, &self.h1)
    }

    fn s(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
        }
        Ok(self.schedule.value(t))
    }

    fn shifts(&self) -> Vec<Shift> {
        (0..self.n_params())
            .flat_map(|j| {
                self.circuit.occurrences(j).iter().map(move |o| Shift {
                    op: o.op,
                    param: j,
                    multiplier: o.multiplier,
                })
            })
            .collect()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "{} parameters for a {}-parameter circuit",
                theta.len(),
                self.n_params()
            )));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("parameters".into()));
        }
        Ok(())
    }

    /// Traceless endpoint energies of one simulation.
    fn pair(&self, theta: &[f64], offsets: &[(usize, f64)], state: &mut StateVector) -> Result<(f64, f64)> {
        self.circuit.prepare_into(theta, offsets, state)?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        Ok((
            self.c0.expectation_traceless(state),
            self.c1.expectation_traceless(state),
        ))
    }

    fn scratch(&self) -> StateVector {
        StateVector::zero_state(self.circuit.n_qubits()).expect("circuit width already validated")
    }

    /// Evaluates all offset patterns in parallel, returning results in input order.
    fn pairs(&self, theta: &[f64], patterns: &[Vec<(usize, f64)>]) -> Result<Vec<(f64, f64)>> {
        patterns
            .par_iter()
            .map_init(|| self.scratch(), |state, offs| self.pair(theta, offs, state))
            .collect()
    }

    /// `(⟨H0⟩, ⟨H1⟩)` at `θ`, constants included.
    pub fn endpoint_energies(&self, theta: &[f64]) -> Result<(f64, f64)> {
        self.check_theta(theta)?;
        let (a, b) = self.pair(theta, &[], &mut self.scratch())?;
        Ok((a + self.c0.constant(), b + self.c1.constant()))
    }

    pub fn energy(&self, theta: &[f64], t: f64) -> Result<f64> {
        let s = self.s(t)?;
        let (e0, e1) = self.endpoint_energies(theta)?;
        Ok((1.0 - s) * e0 + s * e1)
    }

    /// Energy without the identity coefficients; differences match `energy` exactly.
    pub fn energy_traceless(&self, theta: &[f64], t: f64) -> Result<f64> {
        let s = self.s(t)?;
        self.check_theta(theta)?;
        let (e0, e1) = self.pair(theta, &[], &mut self.scratch())?;
        Ok((1.0 - s) * e0 + s * e1)
    }

    /// Identity coefficient of `H(t)`.
    pub fn constant_at(&self, t: f64) -> Result<f64> {
        let s = self.s(t)?;
        Ok((1.0 - s) * self.c0.constant() + s * self.c1.constant())
    }

    /// Parameter-shift gradients of `⟨H0⟩` and `⟨H1⟩`.
    pub fn endpoint_gradients(&self, theta: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_theta(theta)?;
        let shifts = self.shifts();
        let patterns: Vec<Vec<(usize, f64)>> = shifts
            .iter()
            .flat_map(|s| [vec![(s.op, FRAC_PI_2)], vec![(s.op, -FRAC_PI_2)]])
            .collect();
        let values = self.pairs(theta, &patterns)?;
        let p = self.n_params();
        let mut g0 = DVector::zeros(p);
        let mut g1 = DVector::zeros(p);
        for (k, s) in shifts.iter().enumerate() {
            let (plus, minus) = (values[2 * k], values[2 * k + 1]);
            g0[s.param] += s.multiplier * 0.5 * (plus.0 - minus.0);
            g1[s.param] += s.multiplier * 0.5 * (plus.1 - minus.1);
        }
        Ok((g0, g1))
    }

    pub fn gradient(&self, theta: &[f64], t: f64) -> Result<DVector<f64>> {
        let s = self.s(t)?;
        let (g0, g1) = self.endpoint_gradients(theta)?;
        Ok(g0 * (1.0 - s) + g1 * s)
    }

    /// Parameter-shift Hessians of `⟨H0⟩` and `⟨H1⟩`, symmetrized.
    pub fn endpoint_hessians(&self, theta: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.check_theta(theta)?;
        let shifts = self.shifts();
        let m = shifts.len();
        let mut patterns: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
        let mut index = Vec::new();
        for a in 0..m {
            for b in a..m {
                index.push((a, b, patterns.len()));
                let (oa, ob) = (shifts[a].op, shifts[b].op);
                if a == b {
                    patterns.push(vec![(oa, PI)]);
                    patterns.push(vec![(oa, -PI)]);
                } else {
                    for (da, db) in [
                        (FRAC_PI_2, FRAC_PI_2),
                        (FRAC_PI_2, -FRAC_PI_2),
                        (-FRAC_PI_2, FRAC_PI_2),
                        (-FRAC_PI_2, -FRAC_PI_2),
                    ] {
                        patterns.push(vec![(oa, da), (ob, db)]);
                    }
                }
            }
        }
        let values = self.pairs(theta, &patterns)?;
        let centre = values[0];
        let p = self.n_params();
        let mut a0 = DMatrix::zeros(p, p);
        let mut a1 = DMatrix::zeros(p, p);
        for (a, b, at) in index {
            let (d0, d1) = if a == b {
                let (pl, mi) = (values[at], values[at + 1]);
                (
                    0.25 * (pl.0 - 2.0 * centre.0 + mi.0),
                    0.25 * (pl.1 - 2.0 * centre.1 + mi.1),
                )
            } else {
                let v = &values[at..at + 4];
                (
                    0.25 * (v[0].0 - v[1].0 - v[2].0 + v[3].0),
                    0.25 * (v[0].1 - v[1].1 - v[2].1 + v[3].1),
                )
            };
            let (sa, sb) = (shifts[a], shifts[b]);
            let w = sa.multiplier * sb.multiplier;
            a0[(sa.param, sb.param)] += w * d0;
            a1[(sa.param, sb.param)] += w * d1;
            if a != b {
                a0[(sb.param, sa.param)] += w * d0;
                a1[(sb.param, sa.param)] += w * d1;
            }
        }
        Ok((symmetrize(a0), symmetrize(a1)))
    }

    pub fn hessian(&self, theta: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let s = self.s(t)?;
        let (a0, a1) = self.endpoint_hessians(theta)?;
        Ok(a0 * (1.0 - s) + a1 * s)
    }

    /// `Q = ṡ(t)·∇⟨H1 − H0⟩`.
    pub fn q_vector(&self, theta: &[f64], t: f64) -> Result<DVector<f64>> {
        self.s(t)?;
        let (g0, g1) = self.endpoint_gradients(theta)?;
        Ok((g1 - g0) * self.schedule.derivative(t))
    }

    /// `Q̃ = h·Q`.
    pub fn q_tilde(&self, theta: &[f64], t: f64, h: f64) -> Result<DVector<f64>> {
        if !(h >= 0.0) {
            return Err(Error::Domain(format!("step {h} must be non-negative")));
        }
        Ok(self.q_vector(theta, t)? * h)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Central finite-difference gradient of an arbitrary scalar function.
pub fn finite_difference_gradient(
    f: impl Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    step: f64,
) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + step;
        let plus = f(&y)?;
        y[i] = x[i] - step;
        let minus = f(&y)?;
        y[i] = x[i];
        g[i] = (plus - minus) / (2.0 * step);
    }
    Ok(g)
}
