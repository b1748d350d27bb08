use approx::assert_abs_diff_eq;
use homotopy_vqe::ansatz::build_hea;
use homotopy_vqe::chemistry::{emit_fcidump, molecular_hamiltonian, parse_fcidump, IntegralData};
use homotopy_vqe::continuation::predictors::{min_eigenvalue, symmetric_pinv_solve};
use homotopy_vqe::continuation::{CurvatureMemory, Schedule};
use homotopy_vqe::derivatives::EnergyFunctional;
use homotopy_vqe::optimizers::{lbfgs_minimize, FnObjective, LbfgsConfig};
use homotopy_vqe::pauli::{Observable, PauliString, PauliTerm};
use homotopy_vqe::statevector::StateVector;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    let m = (1u64 << n) - 1;
    (any::<u64>(), any::<u64>()).prop_map(move |(x, z)| PauliString::from_masks(n, x & m, z & m).unwrap())
}

fn observable(n: usize) -> impl Strategy<Value = Observable> {
    prop::collection::vec((-1.0f64..1.0, pauli(n)), 1..8).prop_map(move |terms| {
        Observable::from_terms(n, terms.into_iter().map(|(c, p)| PauliTerm::real(c, p)).collect()).unwrap()
    })
}

fn angles(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0f64..4.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_is_associative_with_phase(a in pauli(5), b in pauli(5), c in pauli(5)) {
        let (p_ab, ab) = a.multiply(&b).unwrap();
        let (p_ab_c, left) = ab.multiply(&c).unwrap();
        let (p_bc, bc) = b.multiply(&c).unwrap();
        let (p_a_bc, right) = a.multiply(&bc).unwrap();
        prop_assert_eq!(left, right);
        prop_assert_eq!((p_ab.exponent() + p_ab_c.exponent()) % 4, (p_bc.exponent() + p_a_bc.exponent()) % 4);
    }

    #[test]
    fn pauli_squares_to_identity(a in pauli(6)) {
        let (phase, p) = a.multiply(&a).unwrap();
        prop_assert!(p.is_identity());
        prop_assert_eq!(phase.exponent(), 0);
    }

    #[test]
    fn commutation_matches_product_order(a in pauli(4), b in pauli(4)) {
        let (p_ab, ab) = a.multiply(&b).unwrap();
        let (p_ba, ba) = b.multiply(&a).unwrap();
        prop_assert_eq!(ab, ba);
        let same = p_ab == p_ba;
        prop_assert_eq!(same, a.commutes_with(&b));
    }

    #[test]
    fn circuits_preserve_norm(theta in angles(24)) {
        let c = build_hea(4, 2).unwrap();
        let psi = c.prepare(&theta[..c.n_params()]).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_is_bounded_by_coefficients(o in observable(3), theta in angles(18)) {
        let c = build_hea(3, 2).unwrap();
        let psi = c.prepare(&theta[..c.n_params()]).unwrap();
        let bound: f64 = o.terms().iter().map(|t| t.coeff.norm()).sum();
        prop_assert!(psi.expectation(&o).unwrap().abs() <= bound + 1e-12);
    }

    #[test]
    fn energy_is_linear_in_schedule(h0 in observable(2), h1 in observable(2), theta in angles(12), t in 0.0f64..1.0) {
        let f = EnergyFunctional::new(build_hea(2, 2).unwrap(), h0, h1, Schedule::Cubic).unwrap();
        let theta = &theta[..f.n_params()];
        let (e0, e1) = f.endpoint_energies(theta).unwrap();
        let s = Schedule::Cubic.value(t);
        assert_abs_diff_eq!(f.energy(theta, t).unwrap(), (1.0 - s) * e0 + s * e1, epsilon = 1e-12);
    }

    #[test]
    fn schedules_are_monotone_with_matching_derivative(t in 0.001f64..0.999) {
        for s in [Schedule::Linear, Schedule::Cubic] {
            prop_assert!(s.derivative(t) >= 0.0);
            let h = 1e-6;
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, s.derivative(t), epsilon = 1e-8);
        }
    }

    #[test]
    fn pinv_solves_consistent_systems(entries in prop::collection::vec(-1.0f64..1.0, 16), rank in 1usize..=4) {
        let m = DMatrix::from_column_slice(4, 4, &entries);
        let full = &m * m.transpose();
        // project out a random subspace to make the matrix singular
        let eig = full.clone().symmetric_eigen();
        let mut d = eig.eigenvalues.clone();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
        for &i in &order[rank..] {
            d[i] = 0.0;
        }
        let a = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
        prop_assume!(order[..rank].iter().all(|&i| d[i] > 1e-3));
        let x_true = DVector::from_fn(4, |i, _| entries[i]);
        let b = &a * &x_true;
        let x = symmetric_pinv_solve(&a, &b, 1e-8);
        prop_assert!((&a * &x - &b).amax() < 1e-9);
        // minimum norm: no component along the null space
        for &i in &order[rank..] {
            prop_assert!(eig.eigenvectors.column(i).dot(&x).abs() < 1e-8);
        }
        prop_assert!(min_eigenvalue(&a) > -1e-10);
    }

    #[test]
    fn curvature_memory_keeps_only_positive_pairs(pairs in prop::collection::vec((angles(3), angles(3)), 1..20)) {
        let mut memory = CurvatureMemory::new(5);
        for (s, y) in &pairs {
            memory.push(DVector::from_column_slice(s), DVector::from_column_slice(y));
        }
        prop_assert!(memory.len() <= 5);
        for (s, y) in memory.pairs() {
            prop_assert!(s.dot(y) > 0.0);
        }
    }

    #[test]
    fn lbfgs_never_increases_the_objective(center in angles(3), x0 in angles(3)) {
        let c = DVector::from_column_slice(&center);
        let mut obj = FnObjective::new(
            |x: &[f64]| {
                let d = DVector::from_column_slice(x) - &c;
                Ok(d.norm_squared() + d[0].powi(4))
            },
            |x: &[f64]| {
                let d = DVector::from_column_slice(x) - &c;
                let mut g = 2.0 * &d;
                g[0] += 4.0 * d[0].powi(3);
                Ok(g)
            },
        );
        let r = lbfgs_minimize(&mut obj, &x0, &LbfgsConfig::default()).unwrap();
        for w in r.values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for (a, b) in r.theta_final.iter().zip(&center) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-3);
        }
    }

    #[test]
    fn fcidump_round_trip_preserves_hamiltonian(h in prop::collection::vec(-1.0f64..1.0, 3), g in prop::collection::vec(-0.5f64..0.5, 6)) {
        let mut d = IntegralData::new(2, 2);
        d.set_h(0, 0, h[0]);
        d.set_h(1, 0, h[1]);
        d.set_h(1, 1, h[2]);
        d.set_g(0, 0, 0, 0, g[0]);
        d.set_g(1, 1, 1, 1, g[1]);
        d.set_g(0, 0, 1, 1, g[2]);
        d.set_g(1, 0, 1, 0, g[3]);
        d.set_g(1, 0, 0, 0, g[4]);
        d.set_g(1, 0, 1, 1, g[5]);
        d.core_energy = h[0] * 3.0;
        let back = parse_fcidump(&emit_fcidump(&d)).unwrap();
        let a = molecular_hamiltonian(&d).unwrap();
        let b = molecular_hamiltonian(&back).unwrap();
        prop_assert!(Observable::axpy(1.0, &a, -1.0, &b).unwrap().simplify(1e-12).is_empty());
        let plus = StateVector::init_plus(4).unwrap();
        assert_abs_diff_eq!(plus.expectation(&a).unwrap(), plus.expectation(&b).unwrap(), epsilon = 1e-12);
    }
}
