//! Dense exact diagonalization used as the reference oracle.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::continuation::Schedule;
use crate::error::{Error, Result};
use crate::pauli::{Observable, MAX_DENSE_QUBITS};
use crate::statevector::StateVector;

/// Two eigenvalues closer than this count as one level when measuring gaps.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub ground_vector: StateVector,
    pub degeneracy_tol: f64,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `λ₁ − λ₀` with `λ₁` the first level above the ground level; zero when
    /// the whole spectrum is degenerate.
    pub fn gap(&self) -> f64 {
        spectral_gap(&self.eigenvalues, self.degeneracy_tol)
    }
}

fn spectral_gap(sorted: &[f64], tol: f64) -> f64 {
    let e0 = sorted[0];
    sorted
        .iter()
        .find(|&&e| e > e0 + tol)
        .map_or(0.0, |&e1| e1 - e0)
}

fn dense(obs: &Observable) -> Result<DMatrix<Complex64>> {
    if obs.n_qubits() > MAX_DENSE_QUBITS {
        return Err(Error::Capacity(format!(
            "{} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}",
            obs.n_qubits()
        )));
    }
    if !obs.is_hermitian(crate::statevector::HERMITIAN_COEFF_TOL) {
        return Err(Error::Contract("diagonalization requires a Hermitian observable".into()));
    }
    obs.to_dense_matrix()
}

fn sorted_eigen(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

fn eigenvalues_only(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn spectrum(obs: &Observable) -> Result<SpectrumResult> {
    let n = obs.n_qubits();
    let (values, vectors) = sorted_eigen(dense(obs)?);
    let ground = StateVector::from_amplitudes(n, vectors.column(0).iter().copied().collect())?;
    Ok(SpectrumResult {
        eigenvalues: values,
        ground_vector: ground,
        degeneracy_tol: DEGENERACY_TOL,
    })
}

/// Smallest eigenvalue and a unit eigenvector.
pub fn ground_state(obs: &Observable) -> Result<(f64, StateVector)> {
    let s = spectrum(obs)?;
    Ok((s.eigenvalues[0], s.ground_vector))
}

pub fn ground_energy(obs: &Observable) -> Result<f64> {
    Ok(eigenvalues_only(dense(obs)?)[0])
}

/// Residual `‖Hv − λv‖` of a claimed eigenpair.
pub fn residual(obs: &Observable, value: f64, vector: &StateVector) -> Result<f64> {
    let m = dense(obs)?;
    let v = nalgebra::DVector::from_column_slice(vector.amplitudes());
    Ok((&m * &v - v * Complex64::new(value, 0.0)).norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapPoint {
    pub t: f64,
    pub s: f64,
    pub gap: f64,
}

fn grid(resolution: usize) -> Result<Vec<f64>> {
    if resolution < 2 {
        return Err(Error::Domain("gap grid needs at least two points".into()));
    }
    Ok((0..resolution)
        .map(|k| k as f64 / (resolution - 1) as f64)
        .collect())
}

fn check_pair(h0: &Observable, h1: &Observable) -> Result<()> {
    if h0.n_qubits() != h1.n_qubits() {
        return Err(Error::Dimension("initial and target Hamiltonians differ in width".into()));
    }
    Ok(())
}

/// Gap of `H0 + s(t)(H1 − H0)` on a uniform grid in `t` including both ends.
pub fn gap_profile(
    h0: &Observable,
    h1: &Observable,
    schedule: &Schedule,
    resolution: usize,
) -> Result<Vec<GapPoint>> {
    check_pair(h0, h1)?;
    let m0 = dense(h0)?;
    let m1 = dense(h1)?;
    grid(resolution)?
        .into_par_iter()
        .map(|t| {
            let s = schedule.value(t);
            let h = &m0 * Complex64::new(1.0 - s, 0.0) + &m1 * Complex64::new(s, 0.0);
            let eig = eigenvalues_only(h);
            Ok(GapPoint {
                t,
                s,
                gap: spectral_gap(&eig, DEGENERACY_TOL),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioDiagnostic {
    pub sup: f64,
    pub argmax_t: f64,
}

/// Grid supremum of `ṡ(t)·‖H1 − H0‖₂ / g(s)²`.
pub fn ratio_diagnostic(
    h0: &Observable,
    h1: &Observable,
    schedule: &Schedule,
    resolution: usize,
) -> Result<RatioDiagnostic> {
    check_pair(h0, h1)?;
    let diff = Observable::axpy(1.0, h1, -1.0, h0)?;
    let norm = if diff.is_empty() {
        0.0
    } else {
        eigenvalues_only(dense(&diff)?)
            .iter()
            .fold(0.0f64, |a, e| a.max(e.abs()))
    };
    let profile = gap_profile(h0, h1, schedule, resolution)?;
    let mut best = RatioDiagnostic {
        sup: 0.0,
        argmax_t: 0.0,
    };
    for p in profile {
        let num = schedule.derivative(p.t) * norm;
        let ratio = if num == 0.0 {
            0.0
        } else if p.gap == 0.0 {
            f64::INFINITY
        } else {
            num / (p.gap * p.gap)
        };
        if ratio > best.sup {
            best = RatioDiagnostic {
                sup: ratio,
                argmax_t: p.t,
            };
        }
    }
    Ok(best)
}

pub fn write_gap_csv(points: &[GapPoint], mut out: impl Write) -> Result<()> {
    writeln!(out, "t,s,g")?;
    for p in points {
        writeln!(out, "{},{},{}", p.t, p.s, p.gap)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemistry::transverse_hamiltonian;

    fn obs(labels: &[(f64, &str)]) -> Observable {
        Observable::from_labels(labels).unwrap()
    }

    #[test]
    fn transverse_ground_state() {
        let (e0, v) = ground_state(&transverse_hamiltonian(3).unwrap()).unwrap();
        assert!((e0 + 3.0).abs() < 1e-12);
        let plus = StateVector::init_plus(3).unwrap();
        assert!((plus.overlap(&v).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn z_ground_state() {
        let (e0, v) = ground_state(&obs(&[(1.0, "Z")])).unwrap();
        assert!((e0 + 1.0).abs() < 1e-15);
        assert!((v.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transverse_spectrum_binomial() {
        for n in 1..=4usize {
            let s = spectrum(&transverse_hamiltonian(n).unwrap()).unwrap();
            let mut want = Vec::new();
            for k in 0..=n {
                let binom = (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
                want.extend(std::iter::repeat_n(-(n as f64) + 2.0 * k as f64, binom));
            }
            for (a, b) in s.eigenvalues.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_shift() {
        let h = obs(&[(0.3, "XZ"), (-0.7, "ZI"), (0.2, "YY")]);
        let shifted = h.add(&Observable::identity(2, -15.0)).unwrap();
        let (a, _) = ground_state(&h).unwrap();
        let (b, _) = ground_state(&shifted).unwrap();
        assert!((b - (a - 15.0)).abs() < 1e-10);
    }

    #[test]
    fn residuals_small() {
        let h = obs(&[(0.3, "XZI"), (-0.7, "ZIY"), (0.2, "YYX"), (1.1, "IIZ")]);
        let s = spectrum(&h).unwrap();
        assert!(residual(&h, s.eigenvalues[0], &s.ground_vector).unwrap() <= 1e-8);
    }

    #[test]
    fn gap_of_identical_pair_is_constant() {
        let h = obs(&[(0.5, "ZI"), (0.25, "IX"), (0.1, "XX")]);
        let g0 = spectrum(&h).unwrap().gap();
        for p in gap_profile(&h, &h, &Schedule::Cubic, 11).unwrap() {
            assert!((p.gap - g0).abs() < 1e-10);
        }
        let r = ratio_diagnostic(&h, &h, &Schedule::Linear, 11).unwrap();
        assert_eq!(r.sup, 0.0);
    }

    #[test]
    fn one_qubit_gap_closed_form() {
        let h0 = obs(&[(-1.0, "Z")]);
        let h1 = obs(&[(-1.0, "X")]);
        let prof = gap_profile(&h0, &h1, &Schedule::Linear, 101).unwrap();
        for p in &prof {
            let want = 2.0 * ((1.0 - p.s).powi(2) + p.s * p.s).sqrt();
            assert!((p.gap - want).abs() < 1e-10);
        }
        let min = prof.iter().min_by(|a, b| a.gap.total_cmp(&b.gap)).unwrap();
        assert!((min.s - 0.5).abs() < 1e-12);
        assert!((min.gap - 2f64.sqrt()).abs() < 1e-10);
        // ‖X − Z‖₂ = √2 and g(½)² = 2
        let r = ratio_diagnostic(&h0, &h1, &Schedule::Linear, 101).unwrap();
        assert!((r.argmax_t - 0.5).abs() < 1e-12);
        assert!((r.sup - 2f64.sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn capacity_guard() {
        let h = transverse_hamiltonian(MAX_DENSE_QUBITS + 1).unwrap();
        assert!(matches!(ground_state(&h), Err(Error::Capacity(_))));
    }

    #[test]
    fn grid_needs_two_points() {
        let h = obs(&[(1.0, "Z")]);
        assert!(gap_profile(&h, &h, &Schedule::Linear, 1).is_err());
    }
}
