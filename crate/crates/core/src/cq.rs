//! Classical-quantum channel models and the information quantities evaluated
//! on classical-quantum states.
//!
//! Classical registers are never embedded as quantum systems: every
//! conditional quantity is assembled from weighted Holevo terms over the
//! blocks indexed by the conditioning registers.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::JointPmf;
use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::hermitian::{
    hermitian_eigenvalues, mix, spectral_entropy, von_neumann_entropy, ComplexMatrix, DensityOperator,
};
use crate::simplex::check_simplex;

/// States whose entries differ by at most this much are treated as equal.
pub const STATE_EQ_TOL: f64 = 1e-10;

/// Two-sender channel: `(x1, x2) -> rho`.
#[derive(Clone, Debug)]
pub struct Cq2Channel {
    x1: usize,
    x2: usize,
    states: Vec<DensityOperator>,
}

impl Cq2Channel {
    /// `states[x1 * x2_size + x2]`.
    pub fn new(x1: usize, x2: usize, states: Vec<DensityOperator>) -> Result<Self> {
        if x1 == 0 || x2 == 0 || states.len() != x1 * x2 {
            return Err(Error::Validation(format!(
                "channel table has {} entries, expected {x1} x {x2}",
                states.len()
            )));
        }
        check_equal_dims(&states)?;
        Ok(Self { x1, x2, states })
    }

    pub fn from_fn(x1: usize, x2: usize, f: impl Fn(usize, usize) -> DensityOperator) -> Result<Self> {
        let states = (0..x1).flat_map(|a| (0..x2).map(move |b| (a, b))).map(|(a, b)| f(a, b)).collect();
        Self::new(x1, x2, states)
    }

    pub fn alphabet_sizes(&self) -> (usize, usize) {
        (self.x1, self.x2)
    }

    pub fn output_dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn state(&self, x1: usize, x2: usize) -> &DensityOperator {
        &self.states[x1 * self.x2 + x2]
    }

    /// Output states indexed by `x = x1 + x2 (mod q)`, if the channel depends
    /// on its inputs only through that sum.
    pub fn sum_states(&self, q: usize) -> Result<Vec<DensityOperator>> {
        if !is_prime(q) {
            return Err(Error::Validation(format!("{q} is not prime")));
        }
        if self.x1 != q || self.x2 != q {
            return Err(Error::Precondition(format!(
                "input alphabets {}x{} are not the field of size {q}",
                self.x1, self.x2
            )));
        }
        let mut reps: Vec<Option<(usize, usize)>> = vec![None; q];
        for a in 0..q {
            for b in 0..q {
                let x = (a + b) % q;
                match reps[x] {
                    None => reps[x] = Some((a, b)),
                    Some((ra, rb)) => {
                        let diff = self.state(a, b).matrix().max_abs_diff(self.state(ra, rb).matrix());
                        if diff > STATE_EQ_TOL {
                            return Err(Error::Precondition(format!(
                                "channel is not sum-determined: inputs ({ra}, {rb}) and ({a}, {b}) differ by {diff:.3e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(reps
            .into_iter()
            .map(|r| {
                let (a, b) = r.expect("every sum reached");
                self.state(a, b).clone()
            })
            .collect())
    }

    /// Parses a channel description (see [`ChannelSpec`]).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ChannelSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.into_channel()
    }

    pub fn to_spec(&self) -> ChannelSpec {
        let mut entries = Vec::with_capacity(self.states.len());
        for a in 0..self.x1 {
            for b in 0..self.x2 {
                let m = self.state(a, b).matrix();
                let d = m.dim();
                let matrix = (0..d)
                    .map(|i| (0..d).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
                    .collect();
                entries.push(ChannelEntry { input: [a, b], matrix });
            }
        }
        ChannelSpec { x1: self.x1, x2: self.x2, states: entries }
    }
}

fn check_equal_dims(states: &[DensityOperator]) -> Result<()> {
    let dim = states[0].dim();
    match states.iter().find(|s| s.dim() != dim) {
        Some(s) => Err(Error::DimensionMismatch { expected: dim, got: s.dim() }),
        None => Ok(()),
    }
}

/// On-disk channel description: alphabet sizes and one complex matrix per
/// input pair, entries written as `[re, im]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub x1: usize,
    pub x2: usize,
    pub states: Vec<ChannelEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub input: [usize; 2],
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl ChannelSpec {
    pub fn into_channel(self) -> Result<Cq2Channel> {
        let mut slots: Vec<Option<DensityOperator>> = vec![None; self.x1 * self.x2];
        for entry in self.states {
            let [a, b] = entry.input;
            if a >= self.x1 || b >= self.x2 {
                return Err(Error::Parse(format!("input ({a}, {b}) outside the alphabets")));
            }
            let data: Vec<Complex64> = entry
                .matrix
                .iter()
                .flat_map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)))
                .collect();
            let d = entry.matrix.len();
            if entry.matrix.iter().any(|row| row.len() != d) {
                return Err(Error::Parse(format!("input ({a}, {b}): matrix is not square")));
            }
            let rho = ComplexMatrix::new(data)
                .and_then(DensityOperator::new)
                .map_err(|e| Error::Validation(format!("input ({a}, {b}): {e}")))?;
            if slots[a * self.x2 + b].replace(rho).is_some() {
                return Err(Error::Parse(format!("input ({a}, {b}) listed twice")));
            }
        }
        let mut states = Vec::with_capacity(slots.len());
        for (k, s) in slots.into_iter().enumerate() {
            states.push(s.ok_or_else(|| {
                Error::Parse(format!("input ({}, {}) missing", k / self.x2, k % self.x2))
            })?);
        }
        Cq2Channel::new(self.x1, self.x2, states)
    }
}

/// Conditional PMF `p(x | u, v)`, one row per `(u, v)` with `u` slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalPmf {
    n_u: usize,
    n_v: usize,
    n_x: usize,
    table: Vec<f64>,
}

impl ConditionalPmf {
    pub fn new(n_u: usize, n_v: usize, n_x: usize, table: Vec<f64>) -> Result<Self> {
        if n_u * n_v * n_x == 0 || table.len() != n_u * n_v * n_x {
            return Err(Error::Validation(format!(
                "conditional table has {} entries, expected {n_u} x {n_v} x {n_x}",
                table.len()
            )));
        }
        for (r, row) in table.chunks(n_x).enumerate() {
            check_simplex(row, &format!("conditional row (u={}, v={})", r / n_v, r % n_v))?;
        }
        Ok(Self { n_u, n_v, n_x, table })
    }

    /// Deterministic map `x = f(u, v)`.
    pub fn deterministic(n_u: usize, n_v: usize, n_x: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let mut table = vec![0.0; n_u * n_v * n_x];
        for u in 0..n_u {
            for v in 0..n_v {
                let x = f(u, v);
                if x >= n_x {
                    return Err(Error::Validation(format!("output {x} outside alphabet of size {n_x}")));
                }
                table[(u * n_v + v) * n_x + x] = 1.0;
            }
        }
        Ok(Self { n_u, n_v, n_x, table })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.n_u, self.n_v, self.n_x)
    }

    pub fn row(&self, u: usize, v: usize) -> &[f64] {
        let start = (u * self.n_v + v) * self.n_x;
        &self.table[start..start + self.n_x]
    }

    /// Marginal of `x` under product inputs `p_u * p_v`.
    pub fn output_marginal(&self, p_u: &[f64], p_v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_x];
        for (u, &pu) in p_u.iter().enumerate() {
            for (v, &pv) in p_v.iter().enumerate() {
                for (o, &w) in out.iter_mut().zip(self.row(u, v)) {
                    *o += pu * pv * w;
                }
            }
        }
        out
    }
}

/// Four-input channel over `(v1, v2, u1, u2)` with `v1, v2` in a prime field.
#[derive(Clone, Debug)]
pub struct Cq4Channel {
    q: usize,
    u1: usize,
    u2: usize,
    states: Vec<DensityOperator>,
}

impl Cq4Channel {
    /// `states[((v1 * q + v2) * u1 + a) * u2 + b]`.
    pub fn new(q: usize, u1: usize, u2: usize, states: Vec<DensityOperator>) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::Validation(format!("{q} is not prime")));
        }
        if u1 == 0 || u2 == 0 || states.len() != q * q * u1 * u2 {
            return Err(Error::Validation(format!(
                "channel table has {} entries, expected {q}^2 x {u1} x {u2}",
                states.len()
            )));
        }
        check_equal_dims(&states)?;
        Ok(Self { q, u1, u2, states })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn aux_sizes(&self) -> (usize, usize) {
        (self.u1, self.u2)
    }

    pub fn output_dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn state(&self, v1: usize, v2: usize, u1: usize, u2: usize) -> &DensityOperator {
        &self.states[((v1 * self.q + v2) * self.u1 + u1) * self.u2 + u2]
    }
}

/// Channel seen by the four virtual senders when each physical sender maps
/// `(u_j, v_j)` to `x_j` through a conditional PMF.
pub fn induce_cq4(n2: &Cq2Channel, p1: &ConditionalPmf, p2: &ConditionalPmf) -> Result<Cq4Channel> {
    let (x1, x2) = n2.alphabet_sizes();
    let (u1, q, nx1) = p1.sizes();
    let (u2, q2, nx2) = p2.sizes();
    if q != q2 {
        return Err(Error::DimensionMismatch { expected: q, got: q2 });
    }
    if nx1 != x1 {
        return Err(Error::DimensionMismatch { expected: x1, got: nx1 });
    }
    if nx2 != x2 {
        return Err(Error::DimensionMismatch { expected: x2, got: nx2 });
    }
    let inputs: Vec<DensityOperator> = (0..x1)
        .flat_map(|a| (0..x2).map(move |b| (a, b)))
        .map(|(a, b)| n2.state(a, b).clone())
        .collect();
    let mut states = Vec::with_capacity(q * q * u1 * u2);
    for v1 in 0..q {
        for v2 in 0..q {
            for a in 0..u1 {
                for b in 0..u2 {
                    let r1 = p1.row(a, v1);
                    let r2 = p2.row(b, v2);
                    let weights: Vec<f64> = r1.iter().flat_map(|&w1| r2.iter().map(move |&w2| w1 * w2)).collect();
                    states.push(mix_sparse(&weights, &inputs)?);
                }
            }
        }
    }
    Cq4Channel::new(q, u1, u2, states)
}

/// `mix` that reuses the input state when the weights are a point mass.
fn mix_sparse(weights: &[f64], states: &[DensityOperator]) -> Result<DensityOperator> {
    let support: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
    if support.len() == 1 && (weights[support[0]] - 1.0).abs() <= 1e-15 {
        return Ok(states[support[0]].clone());
    }
    let w: Vec<f64> = support.iter().map(|&k| weights[k]).collect();
    let s: Vec<DensityOperator> = support.iter().map(|&k| states[k].clone()).collect();
    mix(&w, &s)
}

/// Independent PMFs of `V1, V2, U1, U2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductInputPmf {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl ProductInputPmf {
    pub fn new(v1: Vec<f64>, v2: Vec<f64>, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        check_simplex(&v1, "p_V1")?;
        check_simplex(&v2, "p_V2")?;
        check_simplex(&u1, "p_U1")?;
        check_simplex(&u2, "p_U2")?;
        Ok(Self { v1, v2, u1, u2 })
    }
}

/// Classical PMF over labelled registers with one quantum state per support
/// entry.
#[derive(Clone, Debug)]
pub struct CqEnsemble {
    shape: Vec<usize>,
    labels: Vec<Vec<usize>>,
    mass: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl CqEnsemble {
    pub fn new(shape: Vec<usize>, labels: Vec<Vec<usize>>, mass: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if labels.is_empty() || labels.len() != mass.len() || labels.len() != states.len() {
            return Err(Error::Validation("ensemble labels, masses and states must align".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.len() != shape.len() || l.iter().zip(&shape).any(|(&x, &n)| x >= n) {
                return Err(Error::Validation(format!("label {l:?} does not fit shape {shape:?}")));
            }
            if !seen.insert(l.as_slice()) {
                return Err(Error::Validation(format!("label {l:?} repeated")));
            }
        }
        check_simplex(&mass, "ensemble masses")?;
        check_equal_dims(&states)?;
        Ok(Self { shape, labels, mass, states })
    }

    /// Ensemble over a single register.
    pub fn from_states(probs: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        let n = probs.len();
        Self::new(vec![n], (0..n).map(|k| vec![k]).collect(), probs, states)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64, &DensityOperator)> {
        self.labels
            .iter()
            .zip(&self.mass)
            .zip(&self.states)
            .map(|((l, &m), s)| (l.as_slice(), m, s))
    }

    /// Joint PMF of the classical registers.
    pub fn classical_pmf(&self) -> Result<JointPmf> {
        let mut mass = vec![0.0; self.shape.iter().product()];
        for (l, m, _) in self.entries() {
            let flat = l.iter().zip(&self.shape).fold(0, |acc, (&x, &n)| acc * n + x);
            mass[flat] += m;
        }
        JointPmf::new(self.shape.clone(), mass)
    }

    /// Average state.
    pub fn average(&self) -> Result<DensityOperator> {
        mix(&self.mass, &self.states)
    }

    /// `H(Z | B) = sum_b p(b) H(rho_b)` for the register set `b`.
    pub fn conditional_entropy(&self, b: &[usize]) -> Result<f64> {
        if let Some(r) = b.iter().find(|&&r| r >= self.shape.len()) {
            return Err(Error::Validation(format!("register {r} out of range")));
        }
        let dim = self.states[0].dim();
        let mut blocks: BTreeMap<Vec<usize>, (f64, ComplexMatrix)> = BTreeMap::new();
        for (l, m, s) in self.entries() {
            if m <= 0.0 {
                continue;
            }
            let slot = blocks
                .entry(b.iter().map(|&r| l[r]).collect())
                .or_insert_with(|| (0.0, ComplexMatrix::zeros(dim)));
            slot.0 += m;
            slot.1.add_scaled(m, s.matrix())?;
        }
        let mut h = 0.0;
        for (m, acc) in blocks.values() {
            let spectrum = hermitian_eigenvalues(&acc.scale(1.0 / m))?;
            h += m * spectral_entropy(&spectrum)?;
        }
        Ok(h)
    }

    /// `I(A; Z | B)` for disjoint register sets `a`, `b`.
    pub fn conditional_qmi(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        for (i, r) in a.iter().chain(b).enumerate() {
            if *r >= self.shape.len() {
                return Err(Error::Validation(format!("register {r} out of range")));
            }
            if a.iter().chain(b).skip(i + 1).any(|s| s == r) {
                return Err(Error::Validation(format!("register {r} used twice")));
            }
        }
        // b-key -> a-key -> (mass, unnormalised state)
        let mut blocks: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, (f64, ComplexMatrix)>> = BTreeMap::new();
        let dim = self.states[0].dim();
        for (l, m, s) in self.entries() {
            if m <= 0.0 {
                continue;
            }
            let bk: Vec<usize> = b.iter().map(|&r| l[r]).collect();
            let ak: Vec<usize> = a.iter().map(|&r| l[r]).collect();
            let slot = blocks
                .entry(bk)
                .or_default()
                .entry(ak)
                .or_insert_with(|| (0.0, ComplexMatrix::zeros(dim)));
            slot.0 += m;
            slot.1.add_scaled(m, s.matrix())?;
        }
        let mut total = 0.0;
        for group in blocks.values() {
            let pb: f64 = group.values().map(|(m, _)| m).sum();
            if pb <= 0.0 {
                continue;
            }
            let mut probs = Vec::with_capacity(group.len());
            let mut states = Vec::with_capacity(group.len());
            for (m, acc) in group.values() {
                probs.push(m / pb);
                states.push(normalised_state(acc.scale(1.0 / m))?);
            }
            total += pb * holevo_terms(&probs, &states)?;
        }
        Ok(total)
    }
}

/// Renormalises the trace to absorb rounding from accumulation.
fn normalised_state(m: ComplexMatrix) -> Result<DensityOperator> {
    let tr = m.trace().re;
    DensityOperator::new(m.scale(1.0 / tr))
}

fn holevo_terms(probs: &[f64], states: &[DensityOperator]) -> Result<f64> {
    if states.len() == 1 {
        return Ok(0.0);
    }
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let avg = mix(&probs, states)?;
    let inner: f64 = probs
        .iter()
        .zip(states)
        .map(|(p, s)| p * von_neumann_entropy(s))
        .sum();
    Ok(von_neumann_entropy(&avg) - inner)
}

/// `H(sum_i p_i rho_i) - sum_i p_i H(rho_i)` over the ensemble entries.
pub fn holevo_information(e: &CqEnsemble) -> Result<f64> {
    holevo_terms(&e.mass, &e.states)
}

/// Holevo information of `{p_i, rho_i}` without building an ensemble; zero
/// weights are skipped.
pub fn holevo_of(probs: &[f64], states: &[&DensityOperator]) -> Result<f64> {
    let dim = states[0].dim();
    let mut avg = ComplexMatrix::zeros(dim);
    let mut inner = 0.0;
    for (&p, s) in probs.iter().zip(states) {
        if p > 0.0 {
            avg.add_scaled(p, s.matrix())?;
            inner += p * von_neumann_entropy(s);
        }
    }
    Ok(spectral_entropy(&hermitian_eigenvalues(&avg)?)? - inner)
}

/// `I(X1 X2; Z)` for independent inputs `p1`, `p2`.
pub fn product_holevo(n2: &Cq2Channel, p1: &[f64], p2: &[f64]) -> Result<f64> {
    let (x1, x2) = n2.alphabet_sizes();
    if p1.len() != x1 || p2.len() != x2 {
        return Err(Error::DimensionMismatch { expected: x1 * x2, got: p1.len() * p2.len() });
    }
    let mut probs = Vec::with_capacity(x1 * x2);
    let mut states = Vec::with_capacity(x1 * x2);
    for a in 0..x1 {
        for b in 0..x2 {
            probs.push(p1[a] * p2[b]);
            states.push(n2.state(a, b));
        }
    }
    holevo_of(&probs, &states)
}

/// `I(A; Z | B)` of an ensemble, with register index lists `a`, `b`.
pub fn conditional_qmi(e: &CqEnsemble, a: &[usize], b: &[usize]) -> Result<f64> {
    e.conditional_qmi(a, b)
}

/// Register positions of the ensemble returned by [`build_sigma`].
pub mod sigma {
    pub const V: usize = 0;
    pub const V1: usize = 1;
    pub const V2: usize = 2;
    pub const U1: usize = 3;
    pub const U2: usize = 4;
}

/// Classical-quantum state over `(v, v1, v2, u1, u2)` with `v = v1 + v2 (mod q)`.
pub fn build_sigma(n4: &Cq4Channel, p: &ProductInputPmf) -> Result<CqEnsemble> {
    let q = n4.q();
    let (nu1, nu2) = n4.aux_sizes();
    if p.v1.len() != q || p.v2.len() != q {
        return Err(Error::DimensionMismatch { expected: q, got: p.v1.len().max(p.v2.len()) });
    }
    if p.u1.len() != nu1 {
        return Err(Error::DimensionMismatch { expected: nu1, got: p.u1.len() });
    }
    if p.u2.len() != nu2 {
        return Err(Error::DimensionMismatch { expected: nu2, got: p.u2.len() });
    }
    let mut labels = Vec::with_capacity(q * q * nu1 * nu2);
    let mut mass = Vec::with_capacity(labels.capacity());
    let mut states = Vec::with_capacity(labels.capacity());
    for v1 in 0..q {
        for v2 in 0..q {
            for a in 0..nu1 {
                for b in 0..nu2 {
                    labels.push(vec![(v1 + v2) % q, v1, v2, a, b]);
                    mass.push(p.v1[v1] * p.v2[v2] * p.u1[a] * p.u2[b]);
                    states.push(n4.state(v1, v2, a, b).clone());
                }
            }
        }
    }
    CqEnsemble::new(vec![q, q, q, nu1, nu2], labels, mass, states)
}

/// Diagonal entry `0.9545`, off-diagonal magnitude `0.0455`.
const EXAMPLE1_MAJOR: f64 = 0.9545;
const EXAMPLE1_MINOR: f64 = 0.0455;

/// Base states of the binary example channel; index 0 leans to `|0>`.
pub fn example1_base_states() -> [DensityOperator; 2] {
    let c = Complex64::new;
    let s0 = vec![c(EXAMPLE1_MAJOR, 0.0), c(0.0, EXAMPLE1_MINOR), c(0.0, -EXAMPLE1_MINOR), c(EXAMPLE1_MINOR, 0.0)];
    let s1 = vec![c(EXAMPLE1_MINOR, 0.0), c(0.0, EXAMPLE1_MINOR), c(0.0, -EXAMPLE1_MINOR), c(EXAMPLE1_MAJOR, 0.0)];
    let make = |d| DensityOperator::new(ComplexMatrix::new(d).expect("2x2")).expect("valid literal");
    [make(s0), make(s1)]
}

/// Binary channel `rho_{x1 x2} = (1 - eta) s_x + eta s_{1-x}` with `x = x1 xor x2`.
pub fn example1_channel(eta: f64) -> Result<Cq2Channel> {
    if !(0.0..=0.5).contains(&eta) {
        return Err(Error::Validation(format!("eta = {eta} outside [0, 0.5]")));
    }
    let base = example1_base_states();
    let rho0 = mix(&[1.0 - eta, eta], &base)?;
    let rho1 = mix(&[eta, 1.0 - eta], &base)?;
    Cq2Channel::from_fn(2, 2, |a, b| if a ^ b == 0 { rho0.clone() } else { rho1.clone() })
}
