//! Tangent predictors: each returns a parameter update `ε` that moves a
//! stationary point of `E(·, t)` towards one of `E(·, t + h)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::landscape::{EnergyLandscape, HvpMode};
use crate::error::{Error, Result};
use crate::optimizers::lbfgs_newton_direction;

pub const FLAG_STALL: &str = "stall";
pub const FLAG_PSD_REPAIRED: &str = "psd_repaired";
pub const FLAG_PSD_VIOLATION: &str = "psd_violation";
pub const FLAG_NEGATIVE_CURVATURE: &str = "negative_curvature";
pub const FLAG_CG_NOT_CONVERGED: &str = "cg_not_converged";

/// Null-space scan offsets, tried in order of increasing magnitude.
const NULL_SCAN_GRID: [f64; 8] = [0.05, -0.05, 0.1, -0.1, 0.2, -0.2, 0.4, -0.4];

#[derive(Clone, Debug, Default)]
pub struct Prediction {
    pub eps: DVector<f64>,
    pub flags: Vec<String>,
    pub cg_iterations: usize,
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix applied to `b`.
/// Eigenvalues with `|λ| ≤ cutoff·max|λ|` are treated as zero.
pub fn symmetric_pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, cutoff: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.amax();
    let mut x = DVector::zeros(b.len());
    if scale == 0.0 {
        return x;
    }
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff * scale {
            let v = eig.eigenvectors.column(k);
            x.axpy(v.dot(b) / lambda, &v.into_owned(), 1.0);
        }
    }
    x
}

/// Eigenvectors of `a` whose eigenvalues fall under the relative cutoff.
pub fn null_space(a: &DMatrix<f64>, cutoff: f64) -> Vec<DVector<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.amax();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| scale == 0.0 || eig.eigenvalues[k].abs() <= cutoff * scale)
        .collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].abs().total_cmp(&eig.eigenvalues[j].abs()));
    idx.into_iter().map(|k| eig.eigenvectors.column(k).into_owned()).collect()
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

fn check_finite(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Predictor(format!("{what} is not finite")))
    }
}

fn stall_flags(eps: &DVector<f64>, rhs: &DVector<f64>) -> Vec<String> {
    if eps.iter().all(|&e| e == 0.0) && rhs.iter().any(|&q| q != 0.0) {
        vec![FLAG_STALL.to_string()]
    } else {
        Vec::new()
    }
}

/// First-order Euler step `ε = −h·A⁺Q` on the stationarity condition.
pub fn euler_pinv<L: EnergyLandscape + ?Sized>(f: &L, theta: &[f64], t: f64, h: f64, cutoff: f64) -> Result<Prediction> {
    let a = f.hessian(theta, t)?;
    let q = f.q_vector(theta, t)?;
    check_finite(&q, "Q")?;
    let eps = -symmetric_pinv_solve(&a, &q, cutoff) * h;
    check_finite(&eps, "Euler step")?;
    let flags = stall_flags(&eps, &q);
    Ok(Prediction {
        eps,
        flags,
        cg_iterations: 0,
    })
}

/// Least-squares step `ε = −A⁺Q̃`, followed by a check that the Hessian at
/// `(θ + ε, t + h)` is positive semidefinite. On failure, offsets along the
/// null space of `A` (which leave the linear model unchanged) are scanned.
pub fn aqcpqc_constrained<L: EnergyLandscape + ?Sized>(
    f: &L,
    theta: &[f64],
    t: f64,
    h: f64,
    cutoff: f64,
    psd_tol: f64,
    scan_dims: usize,
) -> Result<Prediction> {
    let a = f.hessian(theta, t)?;
    let qt = f.q_tilde(theta, t, h)?;
    check_finite(&qt, "Q̃")?;
    let eps = -symmetric_pinv_solve(&a, &qt, cutoff);
    check_finite(&eps, "constrained step")?;
    let mut flags = stall_flags(&eps, &qt);
    let t_next = (t + h).min(1.0);
    let x = DVector::from_column_slice(theta);
    let psd = |e: &DVector<f64>| -> Result<bool> { Ok(min_eigenvalue(&f.hessian((&x + e).as_slice(), t_next)?) >= -psd_tol) };
    if psd(&eps)? {
        return Ok(Prediction {
            eps,
            flags,
            cg_iterations: 0,
        });
    }
    for u in null_space(&a, cutoff).into_iter().take(scan_dims) {
        for &alpha in &NULL_SCAN_GRID {
            let cand = &eps + &u * alpha;
            if psd(&cand)? {
                flags.push(FLAG_PSD_REPAIRED.to_string());
                return Ok(Prediction {
                    eps: cand,
                    flags,
                    cg_iterations: 0,
                });
            }
        }
    }
    flags.push(FLAG_PSD_VIOLATION.to_string());
    Ok(Prediction {
        eps,
        flags,
        cg_iterations: 0,
    })
}

/// Settings of the Hessian-free predictor.
#[derive(Clone, Copy, Debug)]
pub struct CgSettings {
    pub hvp: HvpMode,
    /// Relative residual target `‖r‖ ≤ tol·‖Q̃‖`.
    pub tol: f64,
    pub max_iter: usize,
    pub negative_curvature_abort: bool,
}

/// Curvature pairs `(d, A·d)` collected by CG across steps.
#[derive(Clone, Debug, Default)]
pub struct CurvatureMemory {
    pairs: Vec<(DVector<f64>, DVector<f64>)>,
    capacity: usize,
}

impl CurvatureMemory {
    pub fn new(capacity: usize) -> Self {
        CurvatureMemory {
            pairs: Vec::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(DVector<f64>, DVector<f64>)] {
        &self.pairs
    }

    pub fn push(&mut self, d: DVector<f64>, ad: DVector<f64>) {
        let sy = d.dot(&ad);
        if self.capacity == 0 || !(sy > 1e-10 * d.norm() * ad.norm()) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.remove(0);
        }
        self.pairs.push((d, ad));
    }
}

/// Solves `A·ε = −Q̃` with conjugate gradients on Hessian-vector products,
/// seeded from the curvature memory. Returns the iterate with the smallest
/// residual seen.
pub fn gaqcpqc<L: EnergyLandscape + ?Sized>(
    f: &L,
    theta: &[f64],
    t: f64,
    h: f64,
    cg: &CgSettings,
    memory: &mut CurvatureMemory,
) -> Result<Prediction> {
    let qt = f.q_tilde(theta, t, h)?;
    check_finite(&qt, "Q̃")?;
    let n = qt.len();
    let b = -&qt;
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(Prediction {
            eps: DVector::zeros(n),
            flags: Vec::new(),
            cg_iterations: 0,
        });
    }
    let hvp = |v: &DVector<f64>| f.hessian_vector_product(theta, t, v, cg.hvp);

    let mut x = if memory.is_empty() {
        DVector::zeros(n)
    } else {
        lbfgs_newton_direction(memory.pairs(), &qt)
    };
    let mut r = if x.iter().all(|&v| v == 0.0) { b.clone() } else { &b - hvp(&x)? };
    let mut best = (r.norm(), x.clone());
    let mut d = r.clone();
    let mut rr = r.dot(&r);
    let mut flags = Vec::new();
    let mut iterations = 0;
    let target = cg.tol * b_norm;

    while best.0 > target && iterations < cg.max_iter {
        let ad = hvp(&d)?;
        check_finite(&ad, "Hessian-vector product")?;
        iterations += 1;
        let curvature = d.dot(&ad);
        if curvature < 0.0 && cg.negative_curvature_abort {
            flags.push(FLAG_NEGATIVE_CURVATURE.to_string());
            break;
        }
        if curvature == 0.0 {
            break;
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &d, 1.0);
        r.axpy(-alpha, &ad, 1.0);
        memory.push(d.clone(), ad);
        let res = r.norm();
        if res < best.0 {
            best = (res, x.clone());
        }
        let rr_new = r.dot(&r);
        d = &r + &d * (rr_new / rr);
        rr = rr_new;
    }
    if best.0 > target && !flags.iter().any(|f| f == FLAG_NEGATIVE_CURVATURE) {
        flags.push(FLAG_CG_NOT_CONVERGED.to_string());
    }
    check_finite(&best.1, "CG solution")?;
    Ok(Prediction {
        eps: best.1,
        flags,
        cg_iterations: iterations,
    })
}
