//! Probability-vector helpers shared by the classical and quantum modules.

use crate::error::{Error, Result};

/// Tolerance for membership in the probability simplex.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// Checks that `p` is a probability vector within [`SIMPLEX_TOL`].
pub fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::NotSimplex(format!("{what}: empty")));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < -SIMPLEX_TOL) {
        return Err(Error::NotSimplex(format!("{what}: entry {x}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotSimplex(format!("{what}: sums to {sum:.12}")));
    }
    Ok(())
}

/// `-x log2 x` with `0 log 0 = 0`.
#[inline]
pub fn xlog2x_neg(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a (not necessarily normalized) mass vector.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().map(|&x| xlog2x_neg(x)).sum()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    xlog2x_neg(p) + xlog2x_neg(1.0 - p)
}

/// Uniform distribution over `n` symbols.
pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Point mass at `at` over `n` symbols.
pub fn point_mass(n: usize, at: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[at] = 1.0;
    p
}
