//! Active-space electronic Hamiltonians and the simple initial Hamiltonians.
//!
//! Spin-orbitals are interleaved: spin-orbital `2p` is spatial orbital `p` with
//! spin up and `2p + 1` is the same orbital with spin down.

use num_complex::Complex64;

use super::fcidump::IntegralData;
use super::fermion::{jordan_wigner, FermionOperator, Ladder};
use crate::error::{Error, Result};
use crate::pauli::{Observable, Pauli, PauliString, PauliTerm, DEFAULT_DROP_TOL};

pub fn spin_orbital(p: usize, beta: bool) -> usize {
    2 * p + usize::from(beta)
}

/// `Ê_pq = Σ_σ a†_{pσ} a_{qσ}`.
pub fn excitation_operator(n_orbitals: usize, p: usize, q: usize) -> Result<FermionOperator> {
    let mut op = FermionOperator::zero(2 * n_orbitals);
    for beta in [false, true] {
        op.push_hopping(1.0, spin_orbital(p, beta), spin_orbital(q, beta))?;
    }
    Ok(op)
}

/// `K + Σ h_pq Ê_pq + ½ Σ (pq|rs)(Ê_pq Ê_rs − δ_qr Ê_ps)`.
pub fn build_active_hamiltonian(d: &IntegralData) -> Result<FermionOperator> {
    d.validate()?;
    let m = d.n_orbitals;
    let mut h = FermionOperator::constant(2 * m, d.core_energy);
    let e: Vec<Vec<FermionOperator>> = (0..m)
        .map(|p| (0..m).map(|q| excitation_operator(m, p, q)).collect())
        .collect::<Result<_>>()?;
    for p in 0..m {
        for q in 0..m {
            let hpq = d.h(p, q);
            if hpq != 0.0 {
                h.extend(&e[p][q].scaled(Complex64::new(hpq, 0.0)))?;
            }
        }
    }
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let g = d.g(p, q, r, s);
                    if g == 0.0 {
                        continue;
                    }
                    let half = Complex64::new(0.5 * g, 0.0);
                    h.extend(&e[p][q].multiply(&e[r][s])?.scaled(half))?;
                    if q == r {
                        h.extend(&e[p][s].scaled(-half))?;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Qubit Hamiltonian of the active space, constant carried on the identity.
pub fn molecular_hamiltonian(d: &IntegralData) -> Result<Observable> {
    jordan_wigner(&build_active_hamiltonian(d)?)
}

/// Folds doubly-occupied `core` orbitals of full-space integrals into effective
/// one-electron integrals and a scalar shift over `active`.
pub fn fold_core(full: &IntegralData, core: &[usize], active: &[usize]) -> Result<IntegralData> {
    full.validate()?;
    let m = full.n_orbitals;
    if core.iter().chain(active).any(|&i| i >= m) {
        return Err(Error::Dimension("orbital index beyond NORB".into()));
    }
    if core.iter().any(|i| active.contains(i)) {
        return Err(Error::Contract("orbital listed as both core and active".into()));
    }
    if 2 * core.len() > full.n_electrons {
        return Err(Error::Contract("more core electrons than electrons".into()));
    }
    let mut k = full.core_energy;
    for &i in core {
        k += 2.0 * full.h(i, i);
        for &j in core {
            k += 2.0 * full.g(i, i, j, j) - full.g(i, j, j, i);
        }
    }
    let n = active.len();
    let mut out = IntegralData::new(n, full.n_electrons - 2 * core.len());
    out.ms2 = full.ms2;
    out.isym = full.isym;
    out.orbsym = active.iter().map(|&a| full.orbsym[a]).collect();
    out.core_energy = k;
    out.orbital_energies = full
        .orbital_energies
        .as_ref()
        .map(|e| active.iter().map(|&a| e[a]).collect());
    for (p, &ap) in active.iter().enumerate() {
        for (q, &aq) in active.iter().enumerate() {
            let mut v = full.h(ap, aq);
            for &i in core {
                v += 2.0 * full.g(ap, aq, i, i) - full.g(ap, i, i, aq);
            }
            out.h_core[p * n + q] = v;
            for (r, &ar) in active.iter().enumerate() {
                for (s, &as_) in active.iter().enumerate() {
                    out.eri[((p * n + q) * n + r) * n + s] = full.g(ap, aq, ar, as_);
                }
            }
        }
    }
    Ok(out)
}

/// `Σ_i ε_i (I − Z_i)/2` over spin-orbitals.
pub fn fock_hamiltonian(spin_orbital_energies: &[f64]) -> Result<Observable> {
    let n = spin_orbital_energies.len();
    if n == 0 {
        return Err(Error::Contract("no orbital energies".into()));
    }
    let mut terms = Vec::with_capacity(n + 1);
    let total: f64 = spin_orbital_energies.iter().sum();
    terms.push(PauliTerm::real(0.5 * total, PauliString::identity(n)));
    for (i, &e) in spin_orbital_energies.iter().enumerate() {
        terms.push(PauliTerm::real(-0.5 * e, PauliString::single(n, i, Pauli::Z)?));
    }
    Ok(Observable::from_terms(n, terms)?.simplify(DEFAULT_DROP_TOL))
}

/// Spatial orbital energies duplicated onto both spins of the interleaved layout.
pub fn spin_orbital_energies(spatial: &[f64]) -> Vec<f64> {
    spatial.iter().flat_map(|&e| [e, e]).collect()
}

/// `−Σ_i X_i`.
pub fn transverse_hamiltonian(n: usize) -> Result<Observable> {
    if n == 0 {
        return Err(Error::Contract("transverse Hamiltonian needs a qubit".into()));
    }
    let terms = (0..n)
        .map(|i| Ok(PauliTerm::real(-1.0, PauliString::single(n, i, Pauli::X)?)))
        .collect::<Result<_>>()?;
    Observable::from_terms(n, terms)
}

/// Aufbau occupation: ones on the lowest `n_electrons` spin-orbitals.
pub fn hf_bitstring(n_electrons: usize, n_spin_orbitals: usize) -> Result<String> {
    if n_electrons > n_spin_orbitals {
        return Err(Error::Contract(format!(
            "{n_electrons} electrons in {n_spin_orbitals} spin-orbitals"
        )));
    }
    Ok((0..n_spin_orbitals)
        .map(|i| if i < n_electrons { '1' } else { '0' })
        .collect())
}

/// Number operator `Σ_i a†_i a_i` on `n` modes, for symmetry checks.
pub fn number_operator(n: usize) -> Result<FermionOperator> {
    let mut op = FermionOperator::zero(n);
    for i in 0..n {
        op.push(Complex64::new(1.0, 0.0), vec![Ladder::create(i), Ladder::annihilate(i)])?;
    }
    Ok(op)
}
