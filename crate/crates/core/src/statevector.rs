//! Dense noiseless statevector simulation.
//!
//! Qubit `q` is bit `q` of the amplitude index (little-endian). Rotations use the
//! half-angle convention `exp(-i·angle/2·P)`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Observable, PauliString, Phase, MAX_DENSE_QUBITS};

/// Imaginary residue tolerated in an expectation value before it is discarded.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

/// Coefficient imaginary parts above this make an observable non-Hermitian.
pub const HERMITIAN_COEFF_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// `exp(-i·angle/2·axis)`; the axis is never the identity.
    PauliRotation { axis: PauliString, angle: f64 },
    ControlledZ { control: usize, target: usize },
}

impl Gate {
    pub fn rotation(axis: PauliString, angle: f64) -> Result<Gate> {
        if axis.is_identity() {
            return Err(Error::Contract("rotation axis must not be the identity".into()));
        }
        if !angle.is_finite() {
            return Err(Error::NonFinite("rotation angle".into()));
        }
        Ok(Gate::PauliRotation { axis, angle })
    }

    pub fn cz(control: usize, target: usize) -> Result<Gate> {
        if control == target {
            return Err(Error::Contract(format!("CZ on a single qubit {control}")));
        }
        Ok(Gate::ControlledZ { control, target })
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        match self {
            Gate::PauliRotation { axis, .. } if axis.n_qubits() != n_qubits => {
                Err(Error::Dimension(format!(
                    "rotation axis on {} qubits applied to {n_qubits}-qubit state",
                    axis.n_qubits()
                )))
            }
            Gate::ControlledZ { control, target } if *control >= n_qubits || *target >= n_qubits => {
                Err(Error::Dimension(format!(
                    "CZ({control},{target}) out of range for {n_qubits} qubits"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state; character `i` of `bits` sets qubit `i`.
    pub fn init_basis(n_qubits: usize, bits: &str) -> Result<StateVector> {
        if bits.chars().count() != n_qubits {
            return Err(Error::Dimension(format!(
                "bitstring '{bits}' does not have {n_qubits} characters"
            )));
        }
        let mut index = 0usize;
        for (q, ch) in bits.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => index |= 1 << q,
                other => return Err(Error::parse(0, format!("invalid bit '{other}'"))),
            }
        }
        let mut s = Self::zero_state(n_qubits)?;
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Result<StateVector> {
        if n_qubits == 0 || n_qubits > MAX_DENSE_QUBITS + 10 {
            return Err(Error::Capacity(format!("cannot allocate {n_qubits} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// `|+⟩^{⊗n}`.
    pub fn init_plus(n_qubits: usize) -> Result<StateVector> {
        let mut s = Self::zero_state(n_qubits)?;
        let a = FRAC_1_SQRT_2.powi(n_qubits as i32);
        s.amps.iter_mut().for_each(|x| *x = Complex64::new(a, 0.0));
        Ok(s)
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<StateVector> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {n_qubits} qubits",
                amps.len()
            )));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension("inner product of different registers".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|`, insensitive to global phase.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// Reset to `|0…0⟩` without reallocating.
    pub fn reset(&mut self) {
        self.amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        self.amps[0] = Complex64::new(1.0, 0.0);
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        match gate {
            Gate::PauliRotation { axis, angle } => self.rotate(axis, *angle),
            Gate::ControlledZ { control, target } => self.controlled_z(*control, *target),
        }
        Ok(())
    }

    pub fn apply_gates<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    pub(crate) fn rotate(&mut self, axis: &PauliString, angle: f64) {
        let (sin, cos) = (0.5 * angle).sin_cos();
        let c = Complex64::new(cos, 0.0);
        // -i·sin·(phase of the string)
        let ms = Complex64::new(0.0, -sin) * Phase::from_exponent(axis.y_count()).to_complex();
        let x = axis.x_mask() as usize;
        let z = axis.z_mask() as usize;
        if x == 0 {
            for (i, a) in self.amps.iter_mut().enumerate() {
                let sign = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                *a *= c + ms * sign;
            }
            return;
        }
        let high = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for i in 0..self.amps.len() {
            if i & high != 0 {
                continue;
            }
            let j = i ^ x;
            let (a, b) = (self.amps[i], self.amps[j]);
            // (P psi)[i] = phase·(-1)^{|j & z|}·psi[j]
            let si = if (j & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let sj = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            self.amps[i] = c * a + ms * (b * si);
            self.amps[j] = c * b + ms * (a * sj);
        }
    }

    pub(crate) fn controlled_z(&mut self, control: usize, target: usize) {
        let mask = (1usize << control) | (1usize << target);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *a = -*a;
            }
        }
    }

    /// `P|ψ⟩` for a single string.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::Dimension("Pauli string width differs from state".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (j, a) in self.amps.iter().enumerate() {
            let (phase, i) = p.act_on_basis(j as u64);
            out[i as usize] = phase.to_complex() * a;
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// `⟨ψ|H|ψ⟩`, evaluated term by term as `Σ c·⟨ψ|(Pψ)⟩`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::Dimension(format!(
                "{}-qubit observable on {}-qubit state",
                obs.n_qubits(),
                self.n_qubits
            )));
        }
        if !obs.is_hermitian(HERMITIAN_COEFF_TOL) {
            return Err(Error::Contract("expectation requires a Hermitian observable".into()));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for term in obs.terms() {
            let p_psi = self.apply_pauli(&term.string)?;
            let ev: Complex64 = self.inner(&p_psi)?;
            total += term.coeff * ev;
        }
        if total.im.abs() > EXPECTATION_IMAG_TOL {
            return Err(Error::Contract(format!(
                "expectation has imaginary residue {}",
                total.im
            )));
        }
        Ok(total.re)
    }
}

/// A Hermitian observable pre-arranged for repeated expectation values.
///
/// Terms sharing an X mask touch the same amplitude pairs, so each group is folded
/// into one vector of per-index factors; the identity coefficient is kept apart
/// so energy differences never see it.
#[derive(Clone, Debug)]
pub struct CompiledObservable {
    n_qubits: usize,
    constant: f64,
    diagonal: Vec<f64>,
    off_diagonal: Vec<(usize, Vec<Complex64>)>,
}

impl CompiledObservable {
    pub fn new(obs: &Observable) -> Result<Self> {
        let obs = obs.clone().into_hermitian(HERMITIAN_COEFF_TOL)?;
        let n = obs.n_qubits();
        if n > MAX_DENSE_QUBITS + 10 {
            return Err(Error::Capacity(format!("{n} qubits")));
        }
        let dim = 1usize << n;
        let mut constant = 0.0;
        let mut diagonal = vec![0.0; dim];
        let mut groups: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
        let mut has_diag = false;
        for term in obs.terms() {
            let p = term.string;
            let c = term.coeff.re;
            if p.is_identity() {
                constant += c;
            } else if p.is_diagonal() {
                has_diag = true;
                for (i, d) in diagonal.iter_mut().enumerate() {
                    let (phase, _) = p.act_on_basis(i as u64);
                    *d += c * phase.to_complex().re;
                }
            } else {
                let factors = groups
                    .entry(p.x_mask())
                    .or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
                // row i receives P|i ^ x⟩
                for (i, f) in factors.iter_mut().enumerate() {
                    let (phase, _) = p.act_on_basis((i as u64) ^ p.x_mask());
                    *f += phase.to_complex() * c;
                }
            }
        }
        if !has_diag {
            diagonal.clear();
        }
        Ok(Self {
            n_qubits: n,
            constant,
            diagonal,
            off_diagonal: groups.into_iter().map(|(x, f)| (x as usize, f)).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Expectation without the identity contribution.
    pub fn expectation_traceless(&self, state: &StateVector) -> f64 {
        let amps = state.amplitudes();
        let mut total = 0.0;
        if !self.diagonal.is_empty() {
            total += amps
                .iter()
                .zip(&self.diagonal)
                .map(|(a, d)| a.norm_sqr() * d)
                .sum::<f64>();
        }
        for (x, factors) in &self.off_diagonal {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, f) in factors.iter().enumerate() {
                acc += amps[i].conj() * f * amps[i ^ x];
            }
            total += acc.re;
        }
        total
    }

    pub fn expectation(&self, state: &StateVector) -> f64 {
        self.constant + self.expectation_traceless(state)
    }
}
