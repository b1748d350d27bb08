//! Second-quantized operators and the Jordan-Wigner map onto qubits.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Observable, Pauli, PauliString, PauliTerm, DEFAULT_DROP_TOL, MAX_QUBITS};

/// A single creation (`dagger`) or annihilation operator on one spin-orbital.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Ladder { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Ladder { mode, dagger: false }
    }

    fn adjoint(self) -> Self {
        Ladder {
            mode: self.mode,
            dagger: !self.dagger,
        }
    }
}

/// Coefficient times an ordered product of ladder operators, applied right to left.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coeff: Complex64,
    pub ops: Vec<Ladder>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FermionOperator {
    n_modes: usize,
    terms: Vec<FermionTerm>,
}

impl FermionOperator {
    pub fn zero(n_modes: usize) -> Self {
        FermionOperator {
            n_modes,
            terms: Vec::new(),
        }
    }

    pub fn constant(n_modes: usize, value: f64) -> Self {
        let mut op = Self::zero(n_modes);
        op.terms.push(FermionTerm {
            coeff: Complex64::new(value, 0.0),
            ops: Vec::new(),
        });
        op
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[FermionTerm] {
        &self.terms
    }

    pub fn push(&mut self, coeff: Complex64, ops: Vec<Ladder>) -> Result<()> {
        if let Some(bad) = ops.iter().find(|l| l.mode >= self.n_modes) {
            return Err(Error::Dimension(format!(
                "mode {} outside {} spin-orbitals",
                bad.mode, self.n_modes
            )));
        }
        if !coeff.re.is_finite() || !coeff.im.is_finite() {
            return Err(Error::NonFinite("fermion coefficient".into()));
        }
        self.terms.push(FermionTerm { coeff, ops });
        Ok(())
    }

    /// `c·a†_p a_q`.
    pub fn push_hopping(&mut self, coeff: f64, p: usize, q: usize) -> Result<()> {
        self.push(
            Complex64::new(coeff, 0.0),
            vec![Ladder::create(p), Ladder::annihilate(q)],
        )
    }

    pub fn extend(&mut self, other: &FermionOperator) -> Result<()> {
        if other.n_modes != self.n_modes {
            return Err(Error::Dimension("fermion operators on different mode counts".into()));
        }
        self.terms.extend(other.terms.iter().cloned());
        Ok(())
    }

    pub fn scaled(&self, factor: Complex64) -> FermionOperator {
        FermionOperator {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|t| FermionTerm {
                    coeff: t.coeff * factor,
                    ops: t.ops.clone(),
                })
                .collect(),
        }
    }

    pub fn multiply(&self, other: &FermionOperator) -> Result<FermionOperator> {
        if other.n_modes != self.n_modes {
            return Err(Error::Dimension("fermion operators on different mode counts".into()));
        }
        let mut out = Self::zero(self.n_modes);
        for a in &self.terms {
            for b in &other.terms {
                let mut ops = a.ops.clone();
                ops.extend_from_slice(&b.ops);
                out.terms.push(FermionTerm {
                    coeff: a.coeff * b.coeff,
                    ops,
                });
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> FermionOperator {
        FermionOperator {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|t| FermionTerm {
                    coeff: t.coeff.conj(),
                    ops: t.ops.iter().rev().map(|l| l.adjoint()).collect(),
                })
                .collect(),
        }
    }

    /// Canonical normal-ordered form: creators left of annihilators, each group in
    /// descending mode order, repeated operators eliminated, like terms merged.
    pub fn normal_ordered(&self, drop_tol: f64) -> FermionOperator {
        let mut acc: BTreeMap<Vec<Ladder>, Complex64> = BTreeMap::new();
        let mut stack: Vec<(Complex64, Vec<Ladder>)> =
            self.terms.iter().map(|t| (t.coeff, t.ops.clone())).collect();
        while let Some((coeff, mut ops)) = stack.pop() {
            let mut sign = 1.0;
            // bubble sort with anticommutation; a contraction spawns a shorter term
            'outer: loop {
                let mut swapped = false;
                for i in 0..ops.len().saturating_sub(1) {
                    let (l, r) = (ops[i], ops[i + 1]);
                    if l == r {
                        // a†a† or aa on the same mode vanishes
                        ops.clear();
                        sign = 0.0;
                        break 'outer;
                    }
                    if before(r, l) {
                        if l.mode == r.mode && !l.dagger && r.dagger {
                            // a_p a†_p = 1 - a†_p a_p
                            let mut contracted = ops[..i].to_vec();
                            contracted.extend_from_slice(&ops[i + 2..]);
                            stack.push((coeff * sign, contracted));
                        }
                        ops.swap(i, i + 1);
                        sign = -sign;
                        swapped = true;
                    }
                }
                if !swapped {
                    break;
                }
            }
            if sign != 0.0 {
                *acc.entry(ops).or_insert(Complex64::new(0.0, 0.0)) += coeff * sign;
            }
        }
        FermionOperator {
            n_modes: self.n_modes,
            terms: acc
                .into_iter()
                .filter(|(_, c)| c.norm() > drop_tol)
                .map(|(ops, coeff)| FermionTerm { coeff, ops })
                .collect(),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let mut diff = self.clone();
        diff.terms
            .extend(self.adjoint().scaled(Complex64::new(-1.0, 0.0)).terms);
        diff.normal_ordered(tol).terms.is_empty()
    }
}

/// Normal ordering: creators first (descending mode), then annihilators (descending mode).
fn before(a: Ladder, b: Ladder) -> bool {
    match (a.dagger, b.dagger) {
        (true, false) => true,
        (false, true) => false,
        _ => a.mode > b.mode,
    }
}

/// Qubit image of one ladder operator: `½ Z_{<j} (X_j ∓ iY_j)`.
fn ladder_image(n: usize, l: Ladder) -> Result<Observable> {
    let parity: Vec<(usize, Pauli)> = (0..l.mode).map(|k| (k, Pauli::Z)).collect();
    let mut x_ops = parity.clone();
    x_ops.push((l.mode, Pauli::X));
    let mut y_ops = parity;
    y_ops.push((l.mode, Pauli::Y));
    let y_coeff = if l.dagger { -0.5 } else { 0.5 };
    Observable::from_terms(
        n,
        vec![
            PauliTerm::real(0.5, PauliString::from_ops(n, &x_ops)?),
            PauliTerm::new(Complex64::new(0.0, y_coeff), PauliString::from_ops(n, &y_ops)?),
        ],
    )
}

/// Jordan-Wigner image with complex coefficients kept; no Hermiticity requirement.
pub fn jordan_wigner_raw(fo: &FermionOperator) -> Result<Observable> {
    let n = fo.n_modes;
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Capacity(format!("{n} spin-orbitals")));
    }
    let images: Vec<Observable> = (0..n)
        .flat_map(|m| [Ladder::annihilate(m), Ladder::create(m)])
        .map(|l| ladder_image(n, l))
        .collect::<Result<_>>()?;
    let image = |l: Ladder| &images[2 * l.mode + usize::from(l.dagger)];

    let mut out = Observable::zero(n);
    for term in &fo.terms {
        let mut prod = Observable::identity(n, 1.0);
        for &l in &term.ops {
            prod = prod.multiply(image(l))?;
        }
        for t in prod.scaled(term.coeff).terms() {
            out.push(*t)?;
        }
        // keep intermediate sums small on large operators
        if out.len() > 4096 {
            out = out.simplify(0.0);
        }
    }
    Ok(out.simplify(DEFAULT_DROP_TOL))
}

/// Jordan-Wigner image of a Hermitian operator; coefficients come back real.
pub fn jordan_wigner(fo: &FermionOperator) -> Result<Observable> {
    jordan_wigner_raw(fo)?.into_hermitian(DEFAULT_DROP_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(fo: &FermionOperator) -> DMatrix<Complex64> {
        jordan_wigner_raw(fo).unwrap().to_dense_matrix().unwrap()
    }

    fn single(n: usize, l: Ladder) -> FermionOperator {
        let mut op = FermionOperator::zero(n);
        op.push(Complex64::new(1.0, 0.0), vec![l]).unwrap();
        op
    }

    #[test]
    fn number_operator() {
        let mut op = FermionOperator::zero(1);
        op.push_hopping(1.0, 0, 0).unwrap();
        let want = Observable::from_labels(&[(0.5, "I"), (-0.5, "Z")]).unwrap();
        assert_eq!(jordan_wigner(&op).unwrap(), want.simplify(0.0));
    }

    #[test]
    fn hopping_term() {
        let mut op = FermionOperator::zero(2);
        op.push_hopping(1.0, 0, 1).unwrap();
        op.push_hopping(1.0, 1, 0).unwrap();
        let want = Observable::from_labels(&[(0.5, "XX"), (0.5, "YY")]).unwrap();
        assert_eq!(jordan_wigner(&op).unwrap(), want.simplify(0.0));
    }

    #[test]
    fn canonical_anticommutation() {
        let n = 3;
        let id = DMatrix::<Complex64>::identity(1 << n, 1 << n);
        for i in 0..n {
            for j in 0..n {
                let a = dense(&single(n, Ladder::annihilate(i)));
                let ad = dense(&single(n, Ladder::create(j)));
                let anti = &a * &ad + &ad * &a;
                let want = if i == j { id.clone() } else { id.clone() * Complex64::new(0.0, 0.0) };
                assert_eq!(anti, want);
                let b = dense(&single(n, Ladder::annihilate(j)));
                let zero = &a * &b + &b * &a;
                assert!(zero.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
            }
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut op = FermionOperator::zero(2);
        op.push_hopping(1.0, 0, 1).unwrap();
        assert!(!op.is_hermitian(1e-12));
        assert!(matches!(jordan_wigner(&op), Err(Error::Contract(_))));
    }

    #[test]
    fn normal_ordering_preserves_operator() {
        let n = 3;
        let mut op = FermionOperator::zero(n);
        op.push(
            Complex64::new(0.7, 0.2),
            vec![Ladder::annihilate(0), Ladder::create(0), Ladder::create(2), Ladder::annihilate(1)],
        )
        .unwrap();
        op.push(
            Complex64::new(-1.1, 0.0),
            vec![Ladder::annihilate(2), Ladder::create(1), Ladder::annihilate(1), Ladder::create(2)],
        )
        .unwrap();
        let no = op.normal_ordered(0.0);
        let diff = dense(&op) - dense(&no);
        assert!(diff.iter().all(|z| z.norm() < 1e-12));
        for t in no.terms() {
            for w in t.ops.windows(2) {
                assert!(before(w[0], w[1]));
            }
        }
    }

    #[test]
    fn mode_out_of_range() {
        let mut op = FermionOperator::zero(2);
        assert!(op.push_hopping(1.0, 0, 2).is_err());
    }
}
