use std::path::PathBuf;

use homotopy_vqe::chemistry::{
    fold_core, fock_hamiltonian, hf_bitstring, jordan_wigner, molecular_hamiltonian,
    number_operator, read_fcidump, spin_orbital_energies, IntegralData,
};
use homotopy_vqe::exact::{ground_state, spectrum};
use homotopy_vqe::statevector::StateVector;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/beh2")
}

fn sidecar(label: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(data_dir().join(format!("beh2_r{label}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn random_integrals(m: usize, n_electrons: usize, seed: u64) -> IntegralData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = IntegralData::new(m, n_electrons);
    for p in 0..m {
        for q in 0..=p {
            d.set_h(p, q, rng.random_range(-1.0..1.0));
        }
    }
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    if d.g(p, q, r, s) == 0.0 {
                        d.set_g(p, q, r, s, rng.random_range(-0.5..0.5));
                    }
                }
            }
        }
    }
    d.core_energy = rng.random_range(-2.0..2.0);
    d
}

/// Applies `a_mode` (or its adjoint) to an occupation bitstring; `None` when it annihilates.
fn ladder(dagger: bool, mode: usize, det: u64) -> Option<(f64, u64)> {
    let occupied = det >> mode & 1 == 1;
    if occupied == dagger {
        return None;
    }
    let below = (det & ((1u64 << mode) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, det ^ (1u64 << mode)))
}

/// Hamiltonian matrix over all occupation-number states, built from the
/// spin-orbital form `Σ h a†a + ½ Σ ⟨PQ|RS⟩ a†_P a†_Q a_S a_R`.
fn determinant_matrix(d: &IntegralData) -> DMatrix<f64> {
    let m = d.n_orbitals;
    let n = 2 * m;
    let dim = 1usize << n;
    let spatial = |so: usize| so / 2;
    let spin = |so: usize| so % 2;
    let mut h = DMatrix::<f64>::identity(dim, dim) * d.core_energy;
    for det in 0..dim as u64 {
        for p in 0..n {
            for q in 0..n {
                if spin(p) != spin(q) {
                    continue;
                }
                let v = d.h(spatial(p), spatial(q));
                let Some((s1, k1)) = ladder(false, q, det) else { continue };
                let Some((s2, k2)) = ladder(true, p, k1) else { continue };
                h[(k2 as usize, det as usize)] += v * s1 * s2;
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        if spin(p) != spin(r) || spin(q) != spin(s) {
                            continue;
                        }
                        // ⟨pq|rs⟩ = (pr|qs)
                        let v = d.g(spatial(p), spatial(r), spatial(q), spatial(s));
                        if v == 0.0 {
                            continue;
                        }
                        let Some((s1, k1)) = ladder(false, r, det) else { continue };
                        let Some((s2, k2)) = ladder(false, s, k1) else { continue };
                        let Some((s3, k3)) = ladder(true, q, k2) else { continue };
                        let Some((s4, k4)) = ladder(true, p, k3) else { continue };
                        h[(k4 as usize, det as usize)] += 0.5 * v * s1 * s2 * s3 * s4;
                    }
                }
            }
        }
    }
    h
}

fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn jw_spectrum_matches_determinant_oracle() {
    for (m, seed) in [(1, 1), (2, 2), (3, 3)] {
        let d = random_integrals(m, m, seed);
        let oracle = determinant_matrix(&d);
        assert!((&oracle - oracle.transpose()).amax() < 1e-12);
        let want = sorted_eigs(oracle);
        let got = spectrum(&molecular_hamiltonian(&d).unwrap()).unwrap().eigenvalues;
        assert_eq!(want.len(), got.len());
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).abs() <= 1e-9, "m={m}: {a} vs {b}");
        }
    }
}

#[test]
fn hamiltonian_conserves_particle_number() {
    let d = random_integrals(3, 2, 9);
    let h = molecular_hamiltonian(&d).unwrap().to_dense_matrix().unwrap();
    let n = jordan_wigner(&number_operator(6).unwrap())
        .unwrap()
        .to_dense_matrix()
        .unwrap();
    let comm = &h * &n - &n * &h;
    assert!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-9);
}

#[test]
fn beh2_fixtures_match_sidecar_energies() {
    for label in ["1.326", "1.5", "2", "3", "3.3"] {
        let d = read_fcidump(data_dir().join(format!("beh2_r{label}.fcidump"))).unwrap();
        let side = sidecar(label);
        let h = molecular_hamiltonian(&d).unwrap();
        assert!(h.terms().iter().all(|t| t.coeff.im == 0.0));
        let (e_fci, _) = ground_state(&h).unwrap();
        let want = side["e_fci"].as_f64().unwrap();
        assert!((e_fci - want).abs() <= 1e-6, "r={label}: {e_fci} vs {want}");

        let hf = StateVector::init_basis(8, &hf_bitstring(4, 8).unwrap()).unwrap();
        let e_hf = hf.expectation(&h).unwrap();
        let e_scf = side["e_scf"].as_f64().unwrap();
        assert!((e_hf - e_scf).abs() <= 1e-8, "r={label}: {e_hf} vs {e_scf}");
        assert!(e_fci <= e_hf + 1e-12);
    }
}

#[test]
fn core_folding_reproduces_active_space_file() {
    let full = read_fcidump(data_dir().join("beh2_r1.326_full.fcidump")).unwrap();
    let cas = read_fcidump(data_dir().join("beh2_r1.326.fcidump")).unwrap();
    let folded = fold_core(&full, &[0], &[1, 2, 3, 4]).unwrap();
    assert_eq!(folded.n_electrons, 4);
    assert!((folded.core_energy - cas.core_energy).abs() <= 1e-8);
    for (a, b) in folded.h_core.iter().zip(&cas.h_core) {
        assert!((a - b).abs() <= 1e-8);
    }
    for (a, b) in folded.eri.iter().zip(&cas.eri) {
        assert!((a - b).abs() <= 1e-8);
    }
    assert_eq!(folded.orbital_energies, cas.orbital_energies.map(|e| e.to_vec()));
}

#[test]
fn fock_ground_state_is_hf_at_equilibrium() {
    let d = read_fcidump(data_dir().join("beh2_r1.326.fcidump")).unwrap();
    let eps = spin_orbital_energies(d.orbital_energies.as_ref().unwrap());
    let (_, v) = ground_state(&fock_hamiltonian(&eps).unwrap()).unwrap();
    let hf = StateVector::init_basis(8, "11110000").unwrap();
    assert!((hf.overlap(&v).unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn fock_ground_state_reflects_negative_virtuals() {
    // the highest geometry has a virtual orbital below zero, so filling it lowers the energy
    let d = read_fcidump(data_dir().join("beh2_r3.3.fcidump")).unwrap();
    let spatial = d.orbital_energies.clone().unwrap();
    let eps = spin_orbital_energies(&spatial);
    let (e0, _) = ground_state(&fock_hamiltonian(&eps).unwrap()).unwrap();
    let negative: f64 = eps.iter().filter(|e| **e < 0.0).sum();
    assert!((e0 - negative).abs() <= 1e-10);
    let hf = StateVector::init_basis(8, "11110000").unwrap();
    let e_hf = hf.expectation(&fock_hamiltonian(&eps).unwrap()).unwrap();
    if spatial[2..].iter().any(|e| *e < 0.0) {
        assert!(e0 < e_hf);
    }
}

#[test]
fn constant_shift_moves_energy_only() {
    let d = read_fcidump(data_dir().join("beh2_r1.326.fcidump")).unwrap();
    let mut shifted = d.clone();
    shifted.core_energy = 0.0;
    let a = ground_state(&molecular_hamiltonian(&d).unwrap()).unwrap().0;
    let b = ground_state(&molecular_hamiltonian(&shifted).unwrap()).unwrap().0;
    assert!((a - b - d.core_energy).abs() <= 1e-9);
}
