//! Arithmetic in prime fields `F_q`, elements stored as `u8` in `0..q`.

use crate::error::{Error, Result};

/// Largest field size supported by the lookup tables.
pub const MAX_FIELD_SIZE: usize = 251;

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Primes in `2..=n`, ascending.
pub fn primes_up_to(n: usize) -> Vec<usize> {
    (2..=n).filter(|&k| is_prime(k)).collect()
}

/// Prime field with precomputed multiplication and inverse tables.
#[derive(Clone, Debug)]
pub struct PrimeField {
    q: usize,
    mul: Vec<u8>,
    inv: Vec<u8>,
}

impl PrimeField {
    pub fn new(q: usize) -> Result<Self> {
        if !is_prime(q) || q > MAX_FIELD_SIZE {
            return Err(Error::Validation(format!(
                "field size {q} must be a prime not above {MAX_FIELD_SIZE}"
            )));
        }
        let mul = (0..q * q).map(|k| ((k / q) * (k % q) % q) as u8).collect::<Vec<_>>();
        let mut inv = vec![0u8; q];
        for a in 1..q {
            inv[a] = (1..q).find(|&b| a * b % q == 1).expect("prime field") as u8;
        }
        Ok(Self { q, mul, inv })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        let s = a as usize + b as usize;
        (if s >= self.q { s - self.q } else { s }) as u8
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            (self.q - a as usize) as u8
        }
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.q + b as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u8) -> Option<u8> {
        (a != 0).then(|| self.inv[a as usize])
    }

    /// `acc += c * row`, elementwise.
    pub fn axpy(&self, acc: &mut [u8], c: u8, row: &[u8]) {
        if c == 0 {
            return;
        }
        for (a, &r) in acc.iter_mut().zip(row) {
            *a = self.add(*a, self.mul(c, r));
        }
    }

    /// `coeffs * matrix` for a row-major matrix with `coeffs.len()` rows of length `n`.
    pub fn vec_mat(&self, coeffs: &[u8], matrix: &[Vec<u8>], n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        for (&c, row) in coeffs.iter().zip(matrix) {
            self.axpy(&mut out, c, row);
        }
        out
    }

    pub fn add_vec(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        a.iter().zip(b).map(|(&x, &y)| self.add(x, y)).collect()
    }

    /// Rank of a set of row vectors, by Gaussian elimination.
    pub fn rank(&self, rows: &[Vec<u8>]) -> usize {
        let mut m: Vec<Vec<u8>> = rows.to_vec();
        let cols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(rank, pivot);
            let inv = self.inv(m[rank][col]).expect("nonzero pivot");
            let pivot_row: Vec<u8> = m[rank].iter().map(|&x| self.mul(x, inv)).collect();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && row[col] != 0 {
                    let c = self.neg(row[col]);
                    self.axpy(row, c, &pivot_row);
                }
            }
            m[rank] = pivot_row;
            rank += 1;
        }
        rank
    }
}

/// Enumerates all vectors in `F_q^len` in lexicographic order (last position fastest).
pub fn all_vectors(q: usize, len: usize) -> impl Iterator<Item = Vec<u8>> {
    let count = q.checked_pow(len as u32).unwrap_or(usize::MAX);
    (0..count).map(move |mut k| {
        let mut v = vec![0u8; len];
        for slot in v.iter_mut().rev() {
            *slot = (k % q) as u8;
            k /= q;
        }
        v
    })
}
