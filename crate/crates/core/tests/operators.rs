mod common;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use xxz_rectify::lattice::{six_site_triangle, FieldAssignment};
use xxz_rectify::liouville::{devectorize, vectorize};
use xxz_rectify::operators::{
    build_hamiltonian, current_operator, magnetization, total_magnetization, ModelParams,
};
use xxz_rectify::sparse::{SparseOperator, I};

fn dense_kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (n, m) = (a.nrows(), b.nrows());
    Array2::from_shape_fn((n * m, n * m), |(r, c)| a[[r / m, c / m]] * b[[r % m, c % m]])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vec_abc_identity(d in 1usize..=8, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (a, b, c) = (
            common::random_matrix(&mut rng, d),
            common::random_matrix(&mut rng, d),
            common::random_matrix(&mut rng, d),
        );
        let lhs = vectorize(&a.dot(&b).dot(&c));
        let k = dense_kron(&c.t().to_owned(), &a);
        let rhs = k.dot(&ndarray::Array1::from(vectorize(&b)));
        let err = lhs.iter().zip(rhs.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-13, "error {err}");
        prop_assert_eq!(devectorize(&lhs).unwrap(), a.dot(&b).dot(&c));
    }

    /// i[H, σ^z_k] = -Σ_j J_kj: the current operators account for all the
    /// change of the local magnetization caused by H.
    #[test]
    fn continuity_identity(delta in -2.0f64..2.0, fields in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let spec = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
        let params = ModelParams::new(delta, FieldAssignment::from_values(fields));
        let h = build_hamiltonian(&spec, &params).unwrap();
        for k in 0..6 {
            let lhs = h.commutator(&magnetization(6, k).unwrap()).scale(I);
            let mut rhs = SparseOperator::zeros(64);
            for j in spec.neighbors(k) {
                rhs = rhs.sub(&current_operator(6, k, j, params.alpha).unwrap());
            }
            prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
        }
    }
}

#[test]
fn hamiltonian_is_hermitian_and_conserves_magnetization() {
    let spec = six_site_triangle(&[0], &[5]).unwrap();
    let params = ModelParams::new(0.7, FieldAssignment::from_values(vec![1.0, 2.0, 2.0, 3.0, 3.0, 3.0]));
    let h = build_hamiltonian(&spec, &params).unwrap();
    assert!(h.is_hermitian(1e-14));
    assert!(h.commutator(&total_magnetization(6)).max_abs() < 1e-13);
}

#[test]
fn current_on_two_site_states() {
    // (|↑↓⟩ + i|↓↑⟩)/√2 carries the largest possible current, 4α
    let mut psi = vec![C64::new(0.0, 0.0); 4];
    psi[0b01] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[0b10] = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let j01 = current_operator(2, 0, 1, 1.0).unwrap();
    let jpsi = j01.apply(&psi).unwrap();
    let value: C64 = psi.iter().zip(&jpsi).map(|(a, b)| a.conj() * b).sum();
    assert!(value.im.abs() < 1e-15);
    assert!((value.re.abs() - 4.0).abs() < 1e-14, "{value}");
    let j10 = current_operator(2, 1, 0, 1.0).unwrap();
    assert!(j01.add(&j10).max_abs() < 1e-15);
}
