//! Pauli strings in symplectic (two-bitmask) form and real-weighted sums of them.
//!
//! A string on `n` qubits is stored as an X mask and a Z mask. Qubit `i` carries
//! `I` when neither bit is set, `X` for the x-bit alone, `Z` for the z-bit alone
//! and `Y` when both are set. With `Y = iXZ` every string equals
//! `i^{|x & z|} X^x Z^z`, which is the identity all phase bookkeeping here uses.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold below which merged coefficients are discarded (hartree).
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// Largest register that may be expanded into a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 14;

/// Largest register representable by the `u64` masks.
pub const MAX_QUBITS: usize = 64;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// One of the four phases `+1, +i, -1, -i`, stored as the exponent of `i`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn from_exponent(k: u32) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn exponent(self) -> u32 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

/// A tensor product of single-qubit Paulis on `n_qubits` qubits.
///
/// Field order makes the derived `Ord` lexicographic on `(z_mask, x_mask)` for
/// strings of equal width, which is the canonical term order of [`Observable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    z_mask: u64,
    x_mask: u64,
}

fn width_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(
            (1..=MAX_QUBITS).contains(&n_qubits),
            "qubit count must be in 1..=64"
        );
        Self {
            n_qubits,
            z_mask: 0,
            x_mask: 0,
        }
    }

    pub fn from_masks(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Capacity(format!(
                "{n_qubits} qubits not representable (1..=64)"
            )));
        }
        let allowed = width_mask(n_qubits);
        if (x_mask | z_mask) & !allowed != 0 {
            return Err(Error::Dimension(format!(
                "masks x={x_mask:#x} z={z_mask:#x} exceed {n_qubits} qubits"
            )));
        }
        Ok(Self {
            n_qubits,
            z_mask,
            x_mask,
        })
    }

    /// A single Pauli acting on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        if qubit >= n_qubits {
            return Err(Error::Dimension(format!(
                "qubit {qubit} out of range for {n_qubits} qubits"
            )));
        }
        let (x, z) = pauli.bits();
        Self::from_masks(
            n_qubits,
            if x { 1 << qubit } else { 0 },
            if z { 1 << qubit } else { 0 },
        )
    }

    /// Build from `(qubit, pauli)` pairs. Repeated qubits are rejected.
    pub fn from_ops(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut out = Self::from_masks(n_qubits, 0, 0)?;
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::Dimension(format!(
                    "qubit {q} out of range for {n_qubits} qubits"
                )));
            }
            if out.get(q) != Pauli::I {
                return Err(Error::Contract(format!("qubit {q} assigned twice")));
            }
            let (x, z) = p.bits();
            if x {
                out.x_mask |= 1 << q;
            }
            if z {
                out.z_mask |= 1 << q;
            }
        }
        Ok(out)
    }

    /// Parse a label such as `"XZIY"`; character `i` acts on qubit `i`.
    pub fn parse(label: &str) -> Result<Self> {
        let chars: Vec<char> = label.chars().collect();
        let n = chars.len();
        let mut x = 0u64;
        let mut z = 0u64;
        for (i, c) in chars.iter().enumerate() {
            let p = match c.to_ascii_uppercase() {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::parse(0, format!("invalid Pauli label '{other}'")));
                }
            };
            let (bx, bz) = p.bits();
            if i < 64 {
                x |= (bx as u64) << i;
                z |= (bz as u64) << i;
            }
        }
        Self::from_masks(n, x, z)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(
            self.x_mask >> qubit & 1 == 1,
            self.z_mask >> qubit & 1 == 1,
        )
    }

    /// Number of qubits carrying `Y`; the string equals `i^{n_y} X^x Z^z`.
    pub fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        s % 2 == 0
    }

    pub fn label(&self) -> String {
        (0..self.n_qubits).map(|q| self.get(q).label()).collect()
    }

    /// Apply the string to computational basis state `|basis⟩`:
    /// returns `(phase, target)` with `P|basis⟩ = phase·|target⟩`.
    pub fn act_on_basis(&self, basis: u64) -> (Phase, u64) {
        let sign = 2 * ((basis & self.z_mask).count_ones() % 2);
        (
            Phase::from_exponent(self.y_count() + sign),
            basis ^ self.x_mask,
        )
    }

    /// Operator product `self · other = phase · product`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!(
                "cannot multiply {}-qubit and {}-qubit strings",
                self.n_qubits, other.n_qubits
            )));
        }
        let x = self.x_mask ^ other.x_mask;
        let z = self.z_mask ^ other.z_mask;
        // X^a Z^b X^c Z^d = (-1)^{|b & c|} X^{a^c} Z^{b^d}
        let swap = (self.z_mask & other.x_mask).count_ones();
        let k = self.y_count() + other.y_count() + 2 * swap + 4 * 64 - (x & z).count_ones();
        Ok((
            Phase::from_exponent(k),
            PauliString {
                n_qubits: self.n_qubits,
                z_mask: z,
                x_mask: x,
            },
        ))
    }

    /// Dense `2^n × 2^n` matrix of the string (little-endian qubit order).
    pub fn to_dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        Observable::from_terms(
            self.n_qubits,
            vec![PauliTerm::new(Complex64::new(1.0, 0.0), *self)],
        )?
        .to_dense_matrix()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: Complex64, string: PauliString) -> Self {
        Self { coeff, string }
    }

    pub fn real(coeff: f64, string: PauliString) -> Self {
        Self::new(Complex64::new(coeff, 0.0), string)
    }
}

/// A finite weighted sum of Pauli strings on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Observable {
    /// The zero operator.
    pub fn zero(n_qubits: usize) -> Self {
        assert!(
            (1..=MAX_QUBITS).contains(&n_qubits),
            "qubit count must be in 1..=64"
        );
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        let mut o = Self::zero(n_qubits);
        o.terms
            .push(PauliTerm::real(coeff, PauliString::identity(n_qubits)));
        o
    }

    pub fn from_terms(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Capacity(format!("{n_qubits} qubits not representable")));
        }
        for term in &terms {
            if term.string.n_qubits() != n_qubits {
                return Err(Error::Dimension(format!(
                    "term {} acts on {} qubits, observable on {n_qubits}",
                    term.string,
                    term.string.n_qubits()
                )));
            }
            if !term.coeff.re.is_finite() || !term.coeff.im.is_finite() {
                return Err(Error::NonFinite(format!("coefficient of {}", term.string)));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    /// Build from `(coefficient, label)` pairs with real coefficients.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Contract("no terms supplied; use Observable::zero".into()))?;
        let n = first.1.len();
        let parsed = terms
            .iter()
            .map(|&(c, l)| Ok(PauliTerm::real(c, PauliString::parse(l)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, parsed)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PauliTerm) -> Result<()> {
        if term.string.n_qubits() != self.n_qubits {
            return Err(Error::Dimension(format!(
                "term on {} qubits pushed to {}-qubit observable",
                term.string.n_qubits(),
                self.n_qubits
            )));
        }
        self.terms.push(term);
        Ok(())
    }

    /// Merge equal strings, drop merged terms with `|coeff| <= drop_tol`, sort canonically.
    pub fn simplify(&self, drop_tol: f64) -> Observable {
        let mut merged: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.string).or_default() += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() > drop_tol)
            .map(|(s, c)| PauliTerm::new(c, s))
            .collect();
        Observable {
            n_qubits: self.n_qubits,
            terms,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Observable {
        Observable {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.coeff * factor, t.string))
                .collect(),
        }
    }

    /// Simplified `alpha·a + beta·b`.
    pub fn axpy(alpha: f64, a: &Observable, beta: f64, b: &Observable) -> Result<Observable> {
        a.check_width(b)?;
        let mut terms = Vec::with_capacity(a.len() + b.len());
        terms.extend(a.terms.iter().map(|t| PauliTerm::new(t.coeff * alpha, t.string)));
        terms.extend(b.terms.iter().map(|t| PauliTerm::new(t.coeff * beta, t.string)));
        Ok(Observable {
            n_qubits: a.n_qubits,
            terms,
        }
        .simplify(DEFAULT_DROP_TOL))
    }

    /// Unsimplified sum.
    pub fn add(&self, other: &Observable) -> Result<Observable> {
        self.check_width(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(Observable {
            n_qubits: self.n_qubits,
            terms,
        })
    }

    /// Simplified operator product `self · other`.
    pub fn multiply(&self, other: &Observable) -> Result<Observable> {
        self.check_width(other)?;
        let mut merged: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for a in &self.terms {
            for b in &other.terms {
                let (phase, s) = a.string.multiply(&b.string)?;
                *merged.entry(s).or_default() += a.coeff * b.coeff * phase.to_complex();
            }
        }
        Ok(Observable {
            n_qubits: self.n_qubits,
            terms: merged
                .into_iter()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(s, c)| PauliTerm::new(c, s))
                .collect(),
        })
    }

    /// Hermitian adjoint: conjugates every coefficient.
    pub fn adjoint(&self) -> Observable {
        Observable {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.coeff.conj(), t.string))
                .collect(),
        }
    }

    /// True when every coefficient's imaginary part is within `tol` after merging.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.simplify(0.0).terms.iter().all(|t| t.coeff.im.abs() <= tol)
    }

    /// Assert Hermiticity and drop the imaginary residue of each coefficient.
    pub fn into_hermitian(self, tol: f64) -> Result<Observable> {
        let s = self.simplify(0.0);
        if let Some(bad) = s.terms.iter().find(|t| t.coeff.im.abs() > tol) {
            return Err(Error::Contract(format!(
                "observable not Hermitian: term {} has coefficient {}",
                bad.string, bad.coeff
            )));
        }
        let terms = s
            .terms
            .into_iter()
            .map(|t| PauliTerm::real(t.coeff.re, t.string))
            .collect();
        Ok(Observable {
            n_qubits: self.n_qubits,
            terms,
        }
        .simplify(DEFAULT_DROP_TOL))
    }

    /// Coefficient of the identity string (after merging).
    pub fn constant(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.string.is_identity())
            .map(|t| t.coeff)
            .sum()
    }

    pub fn to_dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::Capacity(format!(
                "dense expansion limited to {MAX_DENSE_QUBITS} qubits, got {}",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            for col in 0..dim {
                let (phase, row) = t.string.act_on_basis(col as u64);
                m[(row as usize, col)] += t.coeff * phase.to_complex();
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ObservableJson::from(self)).expect("observable serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ObservableJson::from(self)).expect("observable serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Observable> {
        let raw: ObservableJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    fn check_width(&self, other: &Observable) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!(
                "observables on {} and {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if t.coeff.im == 0.0 {
                write!(f, "{}·{}", t.coeff.re, t.string)?;
            } else {
                write!(f, "({})·{}", t.coeff, t.string)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coeff: [f64; 2],
    pauli: String,
}

#[derive(Serialize, Deserialize)]
struct ObservableJson {
    n_qubits: usize,
    terms: Vec<TermJson>,
}

impl From<&Observable> for ObservableJson {
    fn from(o: &Observable) -> Self {
        Self {
            n_qubits: o.n_qubits,
            terms: o
                .terms
                .iter()
                .map(|t| TermJson {
                    coeff: [t.coeff.re, t.coeff.im],
                    pauli: t.string.label(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ObservableJson> for Observable {
    type Error = Error;

    fn try_from(raw: ObservableJson) -> Result<Self> {
        let terms = raw
            .terms
            .into_iter()
            .map(|t| {
                let s = PauliString::parse(&t.pauli)?;
                Ok(PauliTerm::new(Complex64::new(t.coeff[0], t.coeff[1]), s))
            })
            .collect::<Result<Vec<_>>>()?;
        Observable::from_terms(raw.n_qubits, terms)
    }
}
