#![allow(dead_code)]

use cqmac_core::hermitian::{eigh, ComplexMatrix, DensityOperator};
use num_complex::Complex64;
use rand::Rng;

/// Ginibre-style random state `A A^dagger / Tr`, optionally rank-deficient.
pub fn random_state<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let a: Vec<Complex64> = (0..dim * rank)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let m = ComplexMatrix::from_fn(dim, |i, j| (0..rank).map(|k| a[i * rank + k] * a[j * rank + k].conj()).sum());
    let t = m.trace().re;
    let mut out = m.scale(1.0 / t);
    // exact Hermitian symmetry after rounding
    for i in 0..dim {
        for j in i..dim {
            let z = if i == j { Complex64::new(out.get(i, i).re, 0.0) } else { out.get(i, j) };
            out.set(i, j, z);
            out.set(j, i, z.conj());
        }
    }
    DensityOperator::new(out).expect("random state is valid")
}

/// Unitary from the eigenvectors of a random Hermitian matrix.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        h.set(i, i, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
        for j in i + 1..dim {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            h.set(i, j, z);
            h.set(j, i, z.conj());
        }
    }
    eigh(&h).expect("hermitian").vectors
}

pub fn random_pmf<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}
