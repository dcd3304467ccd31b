mod common;

use common::{random_pmf, random_state};
use cqmac_core::cq::{example1_channel, induce_cq4, ConditionalPmf, Cq2Channel, Cq4Channel};
use cqmac_core::field::all_vectors;
use cqmac_core::hermitian::{hermitian_eigenvalues, ComplexMatrix, DensityOperator};
use cqmac_core::ncc::{
    index_vector, monte_carlo_error, random_code_pair, select_coset_reps, simulate_with, srm_decoder, vector_index,
    AuxCodebook, CodePair, NestedCosetCode, SimConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lift(n2: &Cq2Channel) -> Cq4Channel {
    let q = n2.alphabet_sizes().0;
    let id = ConditionalPmf::deterministic(1, q, q, |_, v| v).unwrap();
    induce_cq4(n2, &id, &id).unwrap()
}

/// Classical channel reading `x1 + x2` through a symmetric flip of probability `eps`.
fn noisy_xor(eps: f64) -> Cq2Channel {
    Cq2Channel::from_fn(2, 2, |a, b| {
        let x = a ^ b;
        let mut d = [eps, eps];
        d[x] = 1.0 - eps;
        DensityOperator::diagonal(&d).unwrap()
    })
    .unwrap()
}

#[test]
fn coset_sums_are_exact() {
    for q in [2usize, 3] {
        for n in 1..=5 {
            for (k, l) in [(0, 1), (1, 1), (1, 0), (2, 1), (1, 2)] {
                if q.pow(2 * (k + l) as u32) > 6561 {
                    continue;
                }
                for seed in 0..4 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let c1 = NestedCosetCode::random(q, n, k, l, &mut rng).unwrap();
                    let b2: Vec<u8> = (0..n).map(|i| ((seed as usize + i) % q) as u8).collect();
                    let c2 = c1.with_bias(b2.clone()).unwrap();
                    let f = c1.field();
                    let summed = c1.with_bias(f.add_vec(c1.bias(), &b2)).unwrap();
                    for a1 in all_vectors(q, k) {
                        for m1 in all_vectors(q, l) {
                            let v1 = c1.encode(&a1, &m1).unwrap();
                            for a2 in all_vectors(q, k) {
                                for m2 in all_vectors(q, l) {
                                    let v2 = c2.encode(&a2, &m2).unwrap();
                                    let expect = summed.encode(&f.add_vec(&a1, &a2), &f.add_vec(&m1, &m2)).unwrap();
                                    assert_eq!(f.add_vec(&v1, &v2), expect, "q={q} n={n} k={k} l={l}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn selected_representatives_are_typical_when_possible() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let code = NestedCosetCode::random(3, 5, 2, 1, &mut rng).unwrap();
    let p = [0.5, 0.3, 0.2];
    let sel = select_coset_reps(&code, &p, 0.25).unwrap();
    for m in 0..code.messages() {
        let v = code.encode(&sel.reps[m], &index_vector(m, 3, 1)).unwrap();
        if sel.theta[m] > 0 {
            assert!(cqmac_core::ncc::is_typical(&v, &p, 0.25));
        } else {
            assert_eq!(sel.reps[m], vec![0, 0]);
        }
    }
}

fn assert_complete(dec: &cqmac_core::ncc::SrmDecoder) {
    let total = dec.povm.total();
    let dim = total.dim();
    assert!(total.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-8);
    for e in dec.povm.elements.iter().chain(std::iter::once(&dec.povm.failure)) {
        assert!(hermitian_eigenvalues(e).unwrap().iter().all(|&x| x >= -1e-9));
    }
}

#[test]
fn square_root_measurement_is_complete_on_quantum_channels() {
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = 1 + seed as usize % 2;
        let n2 = Cq2Channel::new(2, 2, (0..4).map(|_| random_state(2, rank, &mut rng)).collect()).unwrap();
        let n4 = lift(&n2);
        let mut cfg = SimConfig::binary(3, 1, 1);
        cfg.seed = seed;
        let codes = random_code_pair(&cfg).unwrap();
        let prior = (seed % 2 == 1).then(|| random_pmf(codes.message_count(), &mut rng));
        let dec = srm_decoder(&n4, &codes, prior.as_deref()).unwrap();
        assert_complete(&dec);
    }
}

#[test]
fn square_root_measurement_matches_brute_force_ml_on_classical_channels() {
    let mut instances = 0;
    for n in 1..=4usize {
        for k in 0..n {
            for l in 1..=(n - k) {
                for eps in [0.0, 0.1, 0.3] {
                    for seed in 0..3u64 {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + n as u64);
                        let c1 = NestedCosetCode::random(2, n, k, l, &mut rng).unwrap();
                        let c2 = c1.with_bias((0..n).map(|i| ((seed as usize + i) % 2) as u8).collect()).unwrap();
                        let codes = CodePair::new(c1, c2, AuxCodebook::trivial(n), AuxCodebook::trivial(n)).unwrap();
                        let prior = (seed == 2).then(|| random_pmf(codes.message_count(), &mut rng));
                        let n4 = lift(&noisy_xor(eps));
                        let dec = srm_decoder(&n4, &codes, prior.as_deref()).unwrap();
                        assert_complete(&dec);
                        check_ml_agreement(&codes, &dec, prior.as_deref(), eps);
                        instances += 1;
                    }
                }
            }
        }
    }
    assert!(instances > 50);
}

/// Independent decoder: scores every target by summed likelihood of its
/// messages and compares the argmax sets with the measurement's diagonal.
fn check_ml_agreement(codes: &CodePair, dec: &cqmac_core::ncc::SrmDecoder, prior: Option<&[f64]>, eps: f64) {
    let n = codes.n();
    let count = codes.message_count();
    let targets = codes.index_count();
    for z in all_vectors(2, n) {
        let zi = vector_index(&z, 2);
        let mut score = vec![0.0; targets];
        for flat in 0..count {
            let m = codes.message(flat);
            let x: Vec<u8> = codes
                .code1
                .codeword(m.m1)
                .iter()
                .zip(codes.code2.codeword(m.m2))
                .map(|(a, b)| a ^ b)
                .collect();
            let like: f64 = x.iter().zip(&z).map(|(a, b)| if a == b { 1.0 - eps } else { eps }).product();
            let p = prior.map_or(1.0 / count as f64, |p| p[flat]);
            score[codes.decoder_flat(&codes.decoder_index(&m))] += p * like;
        }
        let best = score.iter().copied().fold(0.0, f64::max);
        if best == 0.0 {
            continue;
        }
        let lam: Vec<f64> = dec.povm.elements.iter().map(|e| e.get(zi, zi).re).collect();
        let lam_best = lam.iter().copied().fold(0.0, f64::max);
        let ml: Vec<usize> = (0..targets).filter(|&t| score[t] >= best * (1.0 - 1e-9)).collect();
        let pgm: Vec<usize> = (0..targets).filter(|&t| lam[t] >= lam_best * (1.0 - 1e-9)).collect();
        assert_eq!(ml, pgm, "outcome {z:?}");
    }
}

#[test]
fn xor_channel_decodes_without_error() {
    let n4 = lift(&noisy_xor(0.0));
    let mut cfg = SimConfig::binary(4, 1, 2);
    cfg.delta = 0.25;
    let r = monte_carlo_error(&cfg, &n4).unwrap();
    assert_eq!(r.error_rate, 0.0);
    assert!(r.ci_high < 0.01);
}

#[test]
fn less_noise_never_hurts() {
    let mut cfg = SimConfig::binary(4, 1, 2);
    cfg.delta = 0.25;
    cfg.trials = 3000;
    let codes = random_code_pair(&cfg).unwrap();
    let run = |eta: f64| {
        let n4 = lift(&example1_channel(eta).unwrap());
        let dec = srm_decoder(&n4, &codes, None).unwrap();
        simulate_with(&cfg, &codes, &dec).unwrap()
    };
    let (good, bad) = (run(0.05), run(0.45));
    assert!(good.error_rate <= bad.ci_high, "{} vs {}", good.error_rate, bad.ci_high);
    assert!(good.exact_error <= bad.exact_error);
}

#[test]
fn reports_are_reproducible() {
    let n4 = lift(&example1_channel(0.2).unwrap());
    let cfg = SimConfig { trials: 500, seed: 7, ..SimConfig::binary(3, 1, 1) };
    assert_eq!(monte_carlo_error(&cfg, &n4).unwrap(), monte_carlo_error(&cfg, &n4).unwrap());
}

#[test]
fn oversized_configurations_fail_before_allocating() {
    let n4 = lift(&example1_channel(0.2).unwrap());
    let big_code = SimConfig { k: 12, l: 9, ..SimConfig::binary(40, 1, 1) };
    assert!(monte_carlo_error(&big_code, &n4).unwrap_err().is_resource());
    let big_dim = SimConfig::binary(13, 1, 1);
    assert!(monte_carlo_error(&big_dim, &n4).unwrap_err().is_resource());
    let _ = index_vector(0, 2, 0);
}
