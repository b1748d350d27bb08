//! Parameterized circuits: the hardware-efficient ansatz and a one-step UCCSD.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::chemistry::fermion::{jordan_wigner_raw, FermionOperator, Ladder};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, MAX_QUBITS};
use crate::statevector::{Gate, StateVector};

/// Real part above this makes an excitation generator non-anti-Hermitian.
const GENERATOR_REAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitOp {
    Fixed(Gate),
    /// Bound to `PauliRotation(axis, multiplier·θ[param])`.
    Slot {
        param: usize,
        axis: PauliString,
        multiplier: f64,
    },
}

/// Where a parameter enters the circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occurrence {
    pub op: usize,
    pub multiplier: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    ops: Vec<CircuitOp>,
    occurrences: Vec<Vec<Occurrence>>,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize, ops: Vec<CircuitOp>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("{n_qubits} qubits")));
        }
        let n_params = ops
            .iter()
            .filter_map(|op| match op {
                CircuitOp::Slot { param, .. } => Some(param + 1),
                CircuitOp::Fixed(_) => None,
            })
            .max()
            .unwrap_or(0);
        let mut occurrences = vec![Vec::new(); n_params];
        for (i, op) in ops.iter().enumerate() {
            match op {
                CircuitOp::Slot {
                    param,
                    axis,
                    multiplier,
                } => {
                    if !multiplier.is_finite() || *multiplier == 0.0 {
                        return Err(Error::Contract(format!("slot multiplier {multiplier}")));
                    }
                    if axis.is_identity() || axis.n_qubits() != n_qubits {
                        return Err(Error::Contract("slot axis must be a non-identity string of the circuit width".into()));
                    }
                    occurrences[*param].push(Occurrence {
                        op: i,
                        multiplier: *multiplier,
                    });
                }
                CircuitOp::Fixed(g) => check_gate(g, n_qubits)?,
            }
        }
        if let Some(j) = occurrences.iter().position(Vec::is_empty) {
            return Err(Error::Contract(format!("parameter {j} never used")));
        }
        Ok(ParamCircuit {
            n_qubits,
            ops,
            occurrences,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.occurrences.len()
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn occurrences(&self, param: usize) -> &[Occurrence] {
        &self.occurrences[param]
    }

    pub fn n_occurrences(&self) -> usize {
        self.occurrences.iter().map(Vec::len).sum()
    }

    pub fn cz_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, CircuitOp::Fixed(Gate::ControlledZ { .. })))
            .count()
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "{} parameters given, circuit has {}",
                theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }

    pub fn bind(&self, theta: &[f64]) -> Result<Vec<Gate>> {
        self.check_len(theta)?;
        Ok(self
            .ops
            .iter()
            .map(|op| match op {
                CircuitOp::Fixed(g) => g.clone(),
                CircuitOp::Slot {
                    param,
                    axis,
                    multiplier,
                } => Gate::PauliRotation {
                    axis: *axis,
                    angle: multiplier * theta[*param],
                },
            })
            .collect())
    }

    /// Runs the circuit on `|0…0⟩` into `state`, adding `offsets[k].1` to the angle
    /// of operation `offsets[k].0`.
    pub fn prepare_into(
        &self,
        theta: &[f64],
        offsets: &[(usize, f64)],
        state: &mut StateVector,
    ) -> Result<()> {
        self.check_len(theta)?;
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Dimension("state width differs from circuit".into()));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("circuit parameters".into()));
        }
        state.reset();
        for (i, op) in self.ops.iter().enumerate() {
            match op {
                CircuitOp::Fixed(Gate::PauliRotation { axis, angle }) => state.rotate(axis, *angle),
                CircuitOp::Fixed(Gate::ControlledZ { control, target }) => {
                    state.controlled_z(*control, *target)
                }
                CircuitOp::Slot {
                    param,
                    axis,
                    multiplier,
                } => {
                    let mut angle = multiplier * theta[*param];
                    for &(k, delta) in offsets {
                        if k == i {
                            angle += delta;
                        }
                    }
                    state.rotate(axis, angle);
                }
            }
        }
        Ok(())
    }

    pub fn prepare(&self, theta: &[f64]) -> Result<StateVector> {
        let mut s = StateVector::zero_state(self.n_qubits)?;
        self.prepare_into(theta, &[], &mut s)?;
        Ok(s)
    }
}

fn check_gate(g: &Gate, n: usize) -> Result<()> {
    match g {
        Gate::PauliRotation { axis, .. } if axis.n_qubits() != n => {
            Err(Error::Dimension("fixed rotation width differs from circuit".into()))
        }
        Gate::ControlledZ { control, target } if *control >= n || *target >= n => {
            Err(Error::Dimension(format!("CZ({control},{target}) on {n} qubits")))
        }
        _ => Ok(()),
    }
}

/// `layers` blocks of [Ry, Rz on every qubit; CZ on every pair] then a final
/// Ry, Rz layer. Parameter `2n·b + 2q` is the Ry of qubit `q` in layer `b`,
/// the next one its Rz.
pub fn build_hea(n: usize, layers: usize) -> Result<ParamCircuit> {
    if n < 2 {
        return Err(Error::Contract("the entangling layer needs at least two qubits".into()));
    }
    if layers == 0 {
        return Err(Error::Contract("at least one layer".into()));
    }
    let mut ops = Vec::new();
    let mut param = 0;
    for layer in 0..=layers {
        for q in 0..n {
            for p in [Pauli::Y, Pauli::Z] {
                ops.push(CircuitOp::Slot {
                    param,
                    axis: PauliString::single(n, q, p)?,
                    multiplier: 1.0,
                });
                param += 1;
            }
        }
        if layer < layers {
            for i in 0..n {
                for j in i + 1..n {
                    ops.push(CircuitOp::Fixed(Gate::cz(i, j)?));
                }
            }
        }
    }
    ParamCircuit::new(n, ops)
}

pub fn hea_param_count(n: usize, layers: usize) -> usize {
    2 * n * (layers + 1)
}

fn parse_bits(bits: &str, n: usize) -> Result<Vec<bool>> {
    if bits.chars().count() != n {
        return Err(Error::Dimension(format!("reference '{bits}' is not {n} bits")));
    }
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Contract(format!("invalid bit '{other}'"))),
        })
        .collect()
}

/// HEA angles preparing the computational basis state `reference_bits`.
pub fn hf_params_for_hea(n: usize, layers: usize, reference_bits: &str) -> Result<Vec<f64>> {
    let bits = parse_bits(reference_bits, n)?;
    let mut theta = vec![0.0; hea_param_count(n, layers)];
    for (q, &b) in bits.iter().enumerate() {
        if b {
            theta[2 * q] = PI;
        }
    }
    let circuit = build_hea(n, layers)?;
    let out = circuit.prepare(&theta)?;
    let reference = StateVector::init_basis(n, reference_bits)?;
    let fidelity = reference.overlap(&out)?;
    if (fidelity - 1.0).abs() > 1e-10 {
        return Err(Error::Contract(format!("reference preparation fidelity {fidelity}")));
    }
    Ok(theta)
}

/// HEA angles preparing `|+⟩^{⊗n}`: every final-layer Ry at π/2.
pub fn plus_params_for_hea(n: usize, layers: usize) -> Result<Vec<f64>> {
    let mut theta = vec![0.0; hea_param_count(n, layers)];
    for q in 0..n {
        theta[2 * n * layers + 2 * q] = FRAC_PI_2;
    }
    Ok(theta)
}

/// A spin-conserving excitation, spin-orbitals listed as (from, to).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Excitation {
    Single { i: usize, a: usize },
    Double { i: usize, j: usize, a: usize, b: usize },
}

/// Singles then doubles, each in lexicographic index order. Spin-orbital `k` has
/// spin `k mod 2`.
pub fn enumerate_excitations(reference: &[bool]) -> Vec<Excitation> {
    let occ: Vec<usize> = (0..reference.len()).filter(|&k| reference[k]).collect();
    let virt: Vec<usize> = (0..reference.len()).filter(|&k| !reference[k]).collect();
    let spin = |k: usize| k % 2;
    let mut out = Vec::new();
    for &i in &occ {
        for &a in &virt {
            if spin(i) == spin(a) {
                out.push(Excitation::Single { i, a });
            }
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in virt.iter().enumerate() {
                for &b in &virt[y + 1..] {
                    if spin(i) + spin(j) == spin(a) + spin(b) {
                        out.push(Excitation::Double { i, j, a, b });
                    }
                }
            }
        }
    }
    out
}

fn excitation_generator(n: usize, e: &Excitation) -> Result<FermionOperator> {
    let mut t = FermionOperator::zero(n);
    let ops = match *e {
        Excitation::Single { i, a } => vec![Ladder::create(a), Ladder::annihilate(i)],
        Excitation::Double { i, j, a, b } => vec![
            Ladder::create(a),
            Ladder::create(b),
            Ladder::annihilate(j),
            Ladder::annihilate(i),
        ],
    };
    t.push(num_complex::Complex64::new(1.0, 0.0), ops)?;
    let mut g = t.clone();
    g.extend(&t.adjoint().scaled(num_complex::Complex64::new(-1.0, 0.0)))?;
    Ok(g)
}

/// Single Trotter step of `exp(Σ_k θ_k (T_k − T_k†))` on `reference_bits`.
///
/// Each generator maps to `Σ i·g·P`; `exp(iθgP) = exp(−i(−2gθ)/2·P)`, so every
/// string becomes a slot with multiplier `−2g`.
pub fn build_uccsd(
    n_spatial_orbitals: usize,
    n_electrons: usize,
    reference_bits: &str,
) -> Result<ParamCircuit> {
    let n = 2 * n_spatial_orbitals;
    let bits = parse_bits(reference_bits, n)?;
    let filled = bits.iter().filter(|&&b| b).count();
    if filled != n_electrons || n_electrons > n {
        return Err(Error::Contract(format!(
            "reference '{reference_bits}' does not hold {n_electrons} electrons"
        )));
    }
    let mut ops = Vec::new();
    for (q, &b) in bits.iter().enumerate() {
        if b {
            ops.push(CircuitOp::Fixed(Gate::rotation(
                PauliString::single(n, q, Pauli::X)?,
                PI,
            )?));
        }
    }
    let excitations = enumerate_excitations(&bits);
    if excitations.is_empty() {
        return Err(Error::Contract("reference admits no excitations".into()));
    }
    for (k, e) in excitations.iter().enumerate() {
        let image = jordan_wigner_raw(&excitation_generator(n, e)?)?;
        for term in image.terms() {
            if term.coeff.re.abs() > GENERATOR_REAL_TOL {
                return Err(Error::Contract("excitation generator is not anti-Hermitian".into()));
            }
            ops.push(CircuitOp::Slot {
                param: k,
                axis: term.string,
                multiplier: -2.0 * term.coeff.im,
            });
        }
    }
    ParamCircuit::new(n, ops)
}
