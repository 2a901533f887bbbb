use kext_core::qmat::{
    fidelity, partial_trace, permutation_unitary, random, tensor, DensityMatrix, HermitianMatrix, Permutation,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn random_dims(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let count = 2 + (rand::Rng::random::<u32>(rng) % 2) as usize;
    (0..count).map(|_| 2 + (rand::Rng::random::<u32>(rng) % 2) as usize).collect()
}

fn basis_oracle(perm: &Permutation, d: usize, k: usize) -> DMatrix<f64> {
    // column for |i_1..i_k> has a one at the index whose slot perm(j) holds i_j
    let n = d.pow(k as u32);
    let mut m = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut digits = vec![0; k];
        let mut x = col;
        for j in (0..k).rev() {
            digits[j] = x % d;
            x /= d;
        }
        let mut out = vec![0; k];
        for j in 0..k {
            out[perm.apply(j)] = digits[j];
        }
        let row = out.iter().fold(0, |acc, &v| acc * d + v);
        m[(row, col)] = 1.0;
    }
    m
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = random_dims(&mut rng);
        let rank = 1 + (rand::Rng::random::<u32>(&mut rng) % 4) as usize;
        let rho = random::state(&mut rng, &dims, rank);
        let mut keep: Vec<usize> = (0..dims.len()).collect();
        keep.shuffle(&mut rng);
        keep.truncate(1 + (rand::Rng::random::<u32>(&mut rng) as usize % (dims.len() - 1)));
        keep.sort();
        let out = partial_trace(rho.hermitian(), &dims, &keep).unwrap();
        prop_assert!((out.trace() - rho.hermitian().trace()).abs() < 1e-10);
        prop_assert!(out.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::state(&mut rng, &[2], 2);
        let b = random::state(&mut rng, &[3], 3);
        let out = partial_trace(&tensor(a.hermitian(), b.hermitian()), &[2, 3], &[0]).unwrap();
        prop_assert!(out.max_abs_diff(a.hermitian()) < 1e-12);
    }

    #[test]
    fn tensor_trace_is_multiplicative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::hermitian(&mut rng, 2);
        let b = random::hermitian(&mut rng, 3);
        let t = tensor(&a, &b);
        prop_assert!((t.trace() - a.trace() * b.trace()).abs() < 1e-10 * (1.0 + t.trace().abs()));
    }

    #[test]
    fn permutation_unitary_is_homomorphism(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a: Vec<usize> = (0..3).collect();
        let mut b: Vec<usize> = (0..3).collect();
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        let (pa, pb) = (Permutation::new(a).unwrap(), Permutation::new(b).unwrap());
        let d = 2;
        let lhs = permutation_unitary(&pa.compose(&pb), d, 3).unwrap();
        let rhs = permutation_unitary(&pa, d, 3).unwrap() * permutation_unitary(&pb, d, 3).unwrap();
        prop_assert!((lhs.clone() - rhs).camax() < 1e-14);
        let oracle = basis_oracle(&pa.compose(&pb), d, 3);
        prop_assert!(lhs.map(|z| z.re).relative_eq(&oracle, 0.0, 0.0));
    }

    #[test]
    fn fidelity_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = 1 + (rand::Rng::random::<u32>(&mut rng) % 4) as usize;
        let r2 = 1 + (rand::Rng::random::<u32>(&mut rng) % 4) as usize;
        let rho = random::state(&mut rng, &[2, 2], r1);
        let sigma = random::state(&mut rng, &[2, 2], r2);
        let f1 = fidelity(&rho, &sigma).unwrap();
        let f2 = fidelity(&sigma, &rho).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f1));
    }

    #[test]
    fn fidelity_with_pure_state_is_overlap(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random::state(&mut rng, &[3], 1);
        let rho = random::state(&mut rng, &[3], 3);
        let overlap = psi.hermitian().inner(rho.hermitian());
        prop_assert!((fidelity(&psi, &rho).unwrap() - overlap).abs() < 1e-9);
    }
}

#[test]
fn random_states_satisfy_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let rho = random::state(&mut rng, &[2, 3], 2);
        assert!(DensityMatrix::new(rho.hermitian().clone(), vec![2, 3]).is_ok());
        assert!(HermitianMatrix::new(rho.as_matrix().clone()).is_ok());
    }
}
