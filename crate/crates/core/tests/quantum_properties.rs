mod common;

use common::{random_pmf, random_state, random_unitary};
use cqmac_core::cq::{
    build_sigma, holevo_information, holevo_of, induce_cq4, sigma, ConditionalPmf, Cq2Channel, Cq4Channel, CqEnsemble,
    ProductInputPmf,
};
use cqmac_core::hermitian::{hermitian_eigenvalues, mix, tensor_states, von_neumann_entropy, DensityOperator};
use cqmac_core::regions::channel_bounds;
use cqmac_core::simplex::{shannon_entropy, uniform};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 128, ..ProptestConfig::default() }
}

fn random_cq4(rng: &mut ChaCha8Rng, dim: usize) -> Cq4Channel {
    let states = (0..16).map(|_| random_state(dim, 1 + (rand::Rng::gen_range(rng, 0..dim)), rng)).collect();
    Cq4Channel::new(2, 2, 2, states).unwrap()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn entropy_is_additive_under_tensor(seed: u64, da in 1usize..=4, db in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(da, da, &mut rng);
        let b = random_state(db, 1 + seed as usize % db, &mut rng);
        let ab = tensor_states(&a, &b).unwrap();
        let lhs = von_neumann_entropy(&ab);
        prop_assert!((lhs - von_neumann_entropy(&a) - von_neumann_entropy(&b)).abs() < 1e-8);
    }

    #[test]
    fn spectrum_is_unitarily_invariant(seed: u64, dim in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(dim, dim, &mut rng);
        let u = random_unitary(dim, &mut rng);
        let rotated = hermitian_eigenvalues(&rho.matrix().conjugate_by(&u).unwrap()).unwrap();
        for (x, y) in rotated.iter().zip(rho.spectrum()) {
            prop_assert!((x - y).abs() < 1e-8, "{rotated:?} vs {:?}", rho.spectrum());
        }
    }

    #[test]
    fn spectrum_sums_to_one(seed: u64, dim in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(dim, 1 + seed as usize % dim, &mut rng);
        prop_assert!((rho.spectrum().iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn entropy_is_concave(seed: u64, lambda in 0.0f64..=1.0, dim in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(dim, 1, &mut rng);
        let b = random_state(dim, dim, &mut rng);
        let m = mix(&[lambda, 1.0 - lambda], &[a.clone(), b.clone()]).unwrap();
        let rhs = lambda * von_neumann_entropy(&a) + (1.0 - lambda) * von_neumann_entropy(&b);
        prop_assert!(von_neumann_entropy(&m) >= rhs - 1e-8);
    }

    #[test]
    fn holevo_is_bounded(seed: u64, n in 1usize..=6, dim in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_pmf(n, &mut rng);
        let states: Vec<DensityOperator> = (0..n).map(|_| random_state(dim, 1 + seed as usize % dim, &mut rng)).collect();
        let chi = holevo_information(&CqEnsemble::from_states(p.clone(), states.clone()).unwrap()).unwrap();
        prop_assert!(chi >= -1e-10);
        prop_assert!(chi <= (dim as f64).log2() + 1e-8);
        prop_assert!(chi <= shannon_entropy(&p) + 1e-8);
        let refs: Vec<&DensityOperator> = states.iter().collect();
        prop_assert!((holevo_of(&p, &refs).unwrap() - chi).abs() < 1e-10);
    }

    #[test]
    fn sigma_chain_rule(seed: u64, dim in 2usize..=3) {
        use sigma::{U1, U2, V};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n4 = random_cq4(&mut rng, dim);
        let p = ProductInputPmf::new(
            random_pmf(2, &mut rng),
            random_pmf(2, &mut rng),
            random_pmf(2, &mut rng),
            random_pmf(2, &mut rng),
        )
        .unwrap();
        let s = build_sigma(&n4, &p).unwrap();
        let whole = s.conditional_qmi(&[V, U1, U2], &[]).unwrap();
        let aux = s.conditional_qmi(&[U1, U2], &[]).unwrap();
        let rest = s.conditional_qmi(&[V], &[U1, U2]).unwrap();
        prop_assert!((whole - aux - rest).abs() < 1e-7, "{whole} != {aux} + {rest}");
    }

    #[test]
    fn sum_bound_reduces_to_plain_information(seed: u64, dim in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n2 = Cq2Channel::new(2, 2, (0..4).map(|_| random_state(dim, dim, &mut rng)).collect()).unwrap();
        let id = ConditionalPmf::deterministic(1, 2, 2, |_, v| v).unwrap();
        let n4 = induce_cq4(&n2, &id, &id).unwrap();
        let p = ProductInputPmf::new(uniform(2), uniform(2), vec![1.0], vec![1.0]).unwrap();
        let b = channel_bounds(&n4, &p).unwrap();
        prop_assert!(b.i_max.abs() < 1e-12);
        // I(V;Z) from the states averaged over each value of the sum
        let avg: Vec<DensityOperator> = (0..2)
            .map(|v| mix(&[0.5, 0.5], &[n2.state(0, v).clone(), n2.state(1, 1 - v).clone()]).unwrap())
            .collect();
        let direct = holevo_of(&[0.5, 0.5], &[&avg[0], &avg[1]]).unwrap();
        prop_assert!((b.values[0] - direct).abs() < 1e-8, "{} vs {direct}", b.values[0]);
    }

    #[test]
    fn induced_entries_ignore_unused_auxiliary(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n2 = Cq2Channel::new(2, 2, (0..4).map(|_| random_state(2, 2, &mut rng)).collect()).unwrap();
        // the encoder ignores its auxiliary symbol
        let row = random_pmf(2, &mut rng);
        let table: Vec<f64> = (0..2).flat_map(|_| (0..2).flat_map(|v| if v == 0 { row.clone() } else { vec![row[1], row[0]] })).collect();
        let p = ConditionalPmf::new(2, 2, 2, table).unwrap();
        let n4 = induce_cq4(&n2, &p, &p).unwrap();
        for v1 in 0..2 {
            for v2 in 0..2 {
                let base = n4.state(v1, v2, 0, 0).matrix();
                for (a, b) in [(0, 1), (1, 0), (1, 1)] {
                    prop_assert!(n4.state(v1, v2, a, b).matrix().max_abs_diff(base) == 0.0);
                }
            }
        }
    }
}
