mod common;

use common::{random_hermitian, random_state, random_unitary};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tsteer_core::qops::{
    evolve_unitary, expectation, measure, partial_trace_second, tensor, unitary_from_hamiltonian, DensityMatrix,
    MeasurementBasis,
};

fn assert_valid(rho: &DensityMatrix) {
    DensityMatrix::new(rho.matrix().clone()).expect("output violates density-matrix invariants");
}

fn bases() -> [MeasurementBasis; 3] {
    [MeasurementBasis::x(), MeasurementBasis::y(), MeasurementBasis::z()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn outputs_are_density_matrices(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(&mut rng, 2);
        let b = random_state(&mut rng, 2);
        let joint = tensor(&a, &b).unwrap();
        assert_valid(&joint);
        assert_valid(&partial_trace_second(&joint).unwrap());
        let u = random_unitary(&mut rng, 4);
        assert_valid(&evolve_unitary(&joint, &u).unwrap());
        let mixed = random_state(&mut rng, 4);
        assert_valid(&partial_trace_second(&mixed).unwrap());
        for basis in bases() {
            for branch in measure(&a, &basis).unwrap() {
                assert_valid(&branch.post_state);
            }
        }
    }

    #[test]
    fn measurement_is_normalized_and_projective(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, 2);
        for basis in bases() {
            let branches = measure(&rho, &basis).unwrap();
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            for b in &branches {
                let m = b.post_state.matrix();
                prop_assert!((m * m).approx_eq(m, 1e-12));
            }
            let e = expectation(&rho, &basis);
            prop_assert!((-1.0..=1.0).contains(&e));
            let from_probs: f64 = branches.iter().map(|b| b.outcome.value() * b.probability).sum();
            prop_assert!((e - from_probs).abs() <= 1e-12);
        }
    }

    #[test]
    fn partial_trace_inverts_tensor(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(&mut rng, 2);
        let b = random_state(&mut rng, 2);
        let back = partial_trace_second(&tensor(&a, &b).unwrap()).unwrap();
        prop_assert!(back.approx_eq(&a, 1e-12));
        let joint = tensor(&a, &b).unwrap();
        prop_assert!((joint.trace() - a.trace() * b.trace()).abs() <= 1e-12);
    }

    #[test]
    fn unitaries_compose_in_time(seed in any::<u64>(), t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(&mut rng, 4);
        let u1 = unitary_from_hamiltonian(&h, t1).unwrap();
        let u2 = unitary_from_hamiltonian(&h, t2).unwrap();
        let u12 = unitary_from_hamiltonian(&h, t1 + t2).unwrap();
        prop_assert!((&u1 * &u2).approx_eq(&u12, 1e-10));
        prop_assert!(u12.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn unitary_evolution_preserves_spectrum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, 4);
        let u = random_unitary(&mut rng, 4);
        let out = evolve_unitary(&rho, &u).unwrap();
        let (before, _) = rho.matrix().hermitian_eigen();
        let (after, _) = out.matrix().hermitian_eigen();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
