//! Desk-scale simulation of nested coset codes over a four-sender channel:
//! codebook construction, exact channel output states, square-root
//! measurement decoding of `(m1 + m2, m3, m4)` and Monte Carlo error
//! estimates.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cq::{Cq4Channel, ProductInputPmf};
use crate::error::{Error, Result};
use crate::field::{all_vectors, PrimeField};
use crate::hermitian::{eigh, ComplexMatrix, DensityOperator, DEFAULT_DIM_CAP};
use crate::simplex::{check_simplex, uniform};

/// Largest `q^(k+l)` enumerated when selecting coset representatives.
pub const ENUMERATION_CAP: usize = 1 << 20;
/// Largest number of stored complex entries across all states and POVM elements.
pub const STORAGE_CAP: usize = 1 << 24;
/// Eigenvalues of the Gram operator at or below this (relative) are its kernel.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Flat index of a vector over `F_q`, first coordinate slowest.
pub fn vector_index(v: &[u8], q: usize) -> usize {
    v.iter().fold(0, |acc, &x| acc * q + x as usize)
}

/// Inverse of [`vector_index`].
pub fn index_vector(mut idx: usize, q: usize, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    for slot in v.iter_mut().rev() {
        *slot = (idx % q) as u8;
        idx /= q;
    }
    v
}

/// Affine code `v(a, m) = a G_inner + m G_outer + b` with one representative
/// `a_m` per coset.
#[derive(Clone, Debug)]
pub struct NestedCosetCode {
    field: PrimeField,
    n: usize,
    inner: Vec<Vec<u8>>,
    outer: Vec<Vec<u8>>,
    bias: Vec<u8>,
    reps: Vec<Vec<u8>>,
}

impl NestedCosetCode {
    /// Code with all coset representatives set to zero.
    pub fn new(q: usize, inner: Vec<Vec<u8>>, outer: Vec<Vec<u8>>, bias: Vec<u8>) -> Result<Self> {
        let field = PrimeField::new(q)?;
        let n = bias.len();
        if n == 0 {
            return Err(Error::Validation("block length must be positive".into()));
        }
        for (name, g) in [("inner", &inner), ("outer", &outer)] {
            if let Some(row) = g.iter().find(|r| r.len() != n) {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            if g.iter().flatten().any(|&x| x as usize >= q) {
                return Err(Error::Validation(format!("{name} generator has entries outside F_{q}")));
            }
        }
        if bias.iter().any(|&x| x as usize >= q) {
            return Err(Error::Validation(format!("bias has entries outside F_{q}")));
        }
        let k = inner.len();
        let cosets = q
            .checked_pow(outer.len() as u32)
            .filter(|&c| c <= ENUMERATION_CAP)
            .ok_or(Error::Resource { what: "coset count", requested: usize::MAX, cap: ENUMERATION_CAP })?;
        let reps = vec![vec![0u8; k]; cosets];
        Ok(Self { field, n, inner, outer, bias, reps })
    }

    /// Uniformly random generators and bias.
    pub fn random<R: Rng>(q: usize, n: usize, k: usize, l: usize, rng: &mut R) -> Result<Self> {
        let mut row = |len: usize| (0..len).map(|_| rng.gen_range(0..q) as u8).collect::<Vec<u8>>();
        let inner = (0..k).map(|_| row(n)).collect();
        let outer = (0..l).map(|_| row(n)).collect();
        let bias = row(n);
        Self::new(q, inner, outer, bias)
    }

    /// Same generators with a different bias and zero representatives.
    pub fn with_bias(&self, bias: Vec<u8>) -> Result<Self> {
        Self::new(self.q(), self.inner.clone(), self.outer.clone(), bias)
    }

    pub fn with_reps(mut self, reps: Vec<Vec<u8>>) -> Result<Self> {
        if reps.len() != self.reps.len() || reps.iter().any(|a| a.len() != self.k()) {
            return Err(Error::Validation("representative table has the wrong shape".into()));
        }
        self.reps = reps;
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.field.size()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.inner.len()
    }

    pub fn l(&self) -> usize {
        self.outer.len()
    }

    pub fn bias(&self) -> &[u8] {
        &self.bias
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// Number of messages, `q^l`.
    pub fn messages(&self) -> usize {
        self.reps.len()
    }

    pub fn rep(&self, m: usize) -> &[u8] {
        &self.reps[m]
    }

    /// Whether the stacked generator `[G_inner; G_outer]` has full row rank.
    pub fn full_rank(&self) -> bool {
        let rows: Vec<Vec<u8>> = self.inner.iter().chain(&self.outer).cloned().collect();
        self.field.rank(&rows) == rows.len()
    }

    pub fn encode(&self, a: &[u8], m: &[u8]) -> Result<Vec<u8>> {
        if a.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), got: a.len() });
        }
        if m.len() != self.l() {
            return Err(Error::DimensionMismatch { expected: self.l(), got: m.len() });
        }
        let mut v = self.bias.clone();
        for (&c, row) in a.iter().zip(&self.inner).chain(m.iter().zip(&self.outer)) {
            self.field.axpy(&mut v, c, row);
        }
        Ok(v)
    }

    /// Codeword of message index `m` through its coset representative.
    pub fn codeword(&self, m: usize) -> Vec<u8> {
        let mv = index_vector(m, self.q(), self.l());
        self.encode(&self.reps[m], &mv).expect("shapes fixed at construction")
    }
}

/// Empirical-frequency typicality: every symbol frequency within `delta` of `p`.
pub fn is_typical(v: &[u8], p: &[f64], delta: f64) -> bool {
    let mut counts = vec![0usize; p.len()];
    for &x in v {
        counts[x as usize] += 1;
    }
    let n = v.len() as f64;
    counts.iter().zip(p).all(|(&c, &px)| (c as f64 / n - px).abs() <= delta)
}

/// Representatives chosen per coset and the number of typical members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetSelection {
    pub reps: Vec<Vec<u8>>,
    pub theta: Vec<usize>,
}

/// For every coset `m`, the lexicographically smallest `a` with `v(a, m)`
/// typical for `p_v` (or zero when none is), and the count of typical `a`.
pub fn select_coset_reps(code: &NestedCosetCode, p_v: &[f64], delta: f64) -> Result<CosetSelection> {
    check_simplex(p_v, "p_V")?;
    if p_v.len() != code.q() {
        return Err(Error::DimensionMismatch { expected: code.q(), got: p_v.len() });
    }
    let q = code.q();
    let total = q
        .checked_pow((code.k() + code.l()) as u32)
        .filter(|&t| t <= ENUMERATION_CAP)
        .ok_or(Error::Resource { what: "q^(k+l)", requested: usize::MAX, cap: ENUMERATION_CAP })?;
    debug_assert!(total >= code.messages());
    let picks: Vec<(Vec<u8>, usize)> = (0..code.messages())
        .into_par_iter()
        .map(|m| {
            let mv = index_vector(m, q, code.l());
            let mut first = None;
            let mut theta = 0;
            for a in all_vectors(q, code.k()) {
                let v = code.encode(&a, &mv).expect("shapes fixed");
                if is_typical(&v, p_v, delta) {
                    theta += 1;
                    first.get_or_insert(a);
                }
            }
            (first.unwrap_or_else(|| vec![0; code.k()]), theta)
        })
        .collect();
    let (reps, theta) = picks.into_iter().unzip();
    Ok(CosetSelection { reps, theta })
}

/// Private-message codebook: one auxiliary sequence per message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxCodebook {
    pub words: Vec<Vec<usize>>,
}

impl AuxCodebook {
    /// `size` words drawn i.i.d. from `p_u^n`.
    pub fn random<R: Rng>(p_u: &[f64], n: usize, size: usize, rng: &mut R) -> Result<Self> {
        check_simplex(p_u, "p_U")?;
        let dist = WeightedIndex::new(p_u).map_err(|e| Error::Validation(e.to_string()))?;
        Ok(Self { words: (0..size).map(|_| (0..n).map(|_| dist.sample(rng)).collect()).collect() })
    }

    /// Single all-zero word, for a trivial auxiliary.
    pub fn trivial(n: usize) -> Self {
        Self { words: vec![vec![0; n]] }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Message tuple `(m1, m2, m3, m4)` with `m1, m2` coset indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Message {
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub m4: usize,
}

/// Decoder target `(m1 + m2, m3, m4)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DecoderIndex {
    pub sum: usize,
    pub m3: usize,
    pub m4: usize,
}

/// Two nested coset codes sharing generators plus two auxiliary codebooks.
#[derive(Clone, Debug)]
pub struct CodePair {
    pub code1: NestedCosetCode,
    pub code2: NestedCosetCode,
    pub aux1: AuxCodebook,
    pub aux2: AuxCodebook,
}

impl CodePair {
    pub fn new(code1: NestedCosetCode, code2: NestedCosetCode, aux1: AuxCodebook, aux2: AuxCodebook) -> Result<Self> {
        if code1.inner != code2.inner || code1.outer != code2.outer || code1.q() != code2.q() {
            return Err(Error::Precondition("codes must be cosets of the same linear code".into()));
        }
        let n = code1.n();
        if aux1.words.iter().chain(&aux2.words).any(|w| w.len() != n) || aux1.is_empty() || aux2.is_empty() {
            return Err(Error::Validation("auxiliary codewords must be nonempty and of block length".into()));
        }
        Ok(Self { code1, code2, aux1, aux2 })
    }

    pub fn n(&self) -> usize {
        self.code1.n()
    }

    pub fn message_count(&self) -> usize {
        let c = self.code1.messages();
        c * c * self.aux1.len() * self.aux2.len()
    }

    pub fn index_count(&self) -> usize {
        self.code1.messages() * self.aux1.len() * self.aux2.len()
    }

    pub fn message(&self, flat: usize) -> Message {
        let (l1, l2, c) = (self.aux1.len(), self.aux2.len(), self.code1.messages());
        Message { m4: flat % l2, m3: (flat / l2) % l1, m2: (flat / (l2 * l1)) % c, m1: flat / (l2 * l1 * c) }
    }

    pub fn message_index(&self, m: &Message) -> usize {
        ((m.m1 * self.code1.messages() + m.m2) * self.aux1.len() + m.m3) * self.aux2.len() + m.m4
    }

    pub fn decoder_index(&self, m: &Message) -> DecoderIndex {
        let q = self.code1.q();
        let l = self.code1.l();
        let s = self.code1.field.add_vec(&index_vector(m.m1, q, l), &index_vector(m.m2, q, l));
        DecoderIndex { sum: vector_index(&s, q), m3: m.m3, m4: m.m4 }
    }

    pub fn decoder_flat(&self, t: &DecoderIndex) -> usize {
        (t.sum * self.aux1.len() + t.m3) * self.aux2.len() + t.m4
    }

    pub fn decoder_target(&self, flat: usize) -> DecoderIndex {
        let (l1, l2) = (self.aux1.len(), self.aux2.len());
        DecoderIndex { m4: flat % l2, m3: (flat / l2) % l1, sum: flat / (l2 * l1) }
    }

    /// Per-symbol channel inputs `(v1, v2, u1, u2)` for a message.
    pub fn inputs(&self, m: &Message) -> Vec<[usize; 4]> {
        let v1 = self.code1.codeword(m.m1);
        let v2 = self.code2.codeword(m.m2);
        let u1 = &self.aux1.words[m.m3];
        let u2 = &self.aux2.words[m.m4];
        (0..self.n()).map(|i| [v1[i] as usize, v2[i] as usize, u1[i], u2[i]]).collect()
    }
}

fn check_dim(n4: &Cq4Channel, n: usize) -> Result<usize> {
    let d = n4.output_dim();
    d.checked_pow(n as u32)
        .filter(|&x| x <= DEFAULT_DIM_CAP)
        .ok_or(Error::Resource { what: "output dimension", requested: d.saturating_pow(n as u32), cap: DEFAULT_DIM_CAP })
}

/// Kronecker product `kron(a, b)` of square matrices.
fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(da * db, |r, c| a.get(r / db, c / db) * b.get(r % db, c % db))
}

/// Exact `n`-fold product output state for one message.
pub fn build_channel_state(n4: &Cq4Channel, codes: &CodePair, m: &Message) -> Result<DensityOperator> {
    check_dim(n4, codes.n())?;
    DensityOperator::new(channel_matrix(n4, codes, m)?)
}

fn channel_matrix(n4: &Cq4Channel, codes: &CodePair, m: &Message) -> Result<ComplexMatrix> {
    let (a1, a2) = n4.aux_sizes();
    let mut acc: Option<ComplexMatrix> = None;
    for [v1, v2, u1, u2] in codes.inputs(m) {
        if v1 >= n4.q() || v2 >= n4.q() || u1 >= a1 || u2 >= a2 {
            return Err(Error::DimensionMismatch { expected: n4.q(), got: v1.max(v2) });
        }
        let s = n4.state(v1, v2, u1, u2).matrix();
        acc = Some(match acc {
            None => s.clone(),
            Some(a) => kron(&a, s),
        });
    }
    acc.ok_or_else(|| Error::Validation("empty block".into()))
}

/// Square-root measurement with a failure element completing it to identity.
#[derive(Clone, Debug)]
pub struct Povm {
    pub elements: Vec<ComplexMatrix>,
    pub failure: ComplexMatrix,
}

impl Povm {
    /// `sum_t Lambda_t + failure`.
    pub fn total(&self) -> ComplexMatrix {
        let mut acc = self.failure.clone();
        for e in &self.elements {
            acc.add_scaled(1.0, e).expect("equal dims");
        }
        acc
    }
}

/// `G^{-1/2}` on the support of `g`, zero on its kernel.
fn pinv_sqrt(g: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let e = eigh(g)?;
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let cut = SUPPORT_TOL * top.max(1e-300);
    let inv = e.map_spectrum(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 });
    let kernel = e.map_spectrum(|x| if x > cut { 0.0 } else { 1.0 });
    Ok((inv, kernel))
}

/// Pretty-good measurement from unnormalised candidate operators `Gamma_t`.
pub fn pgm(gammas: &[ComplexMatrix]) -> Result<Povm> {
    let dim = gammas
        .first()
        .ok_or_else(|| Error::Precondition("no candidate operators".into()))?
        .dim();
    let mut g = ComplexMatrix::zeros(dim);
    for gamma in gammas {
        g.add_scaled(1.0, gamma)?;
    }
    if g.data().iter().all(|z| z.norm() == 0.0) {
        return Err(Error::Precondition("all candidate operators vanish".into()));
    }
    let (inv, kernel) = pinv_sqrt(&g)?;
    let elements = gammas
        .par_iter()
        .map(|gamma| inv.matmul(gamma)?.matmul(&inv))
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm { elements, failure: kernel })
}

/// Decoder for `(m1 + m2, m3, m4)` built from the prior-weighted codeword
/// states, plus the states themselves.
#[derive(Clone, Debug)]
pub struct SrmDecoder {
    pub povm: Povm,
    pub states: Vec<ComplexMatrix>,
    pub prior: Vec<f64>,
}

impl SrmDecoder {
    /// Probability of decoding message `flat` to its correct index.
    pub fn success(&self, codes: &CodePair, flat: usize) -> Result<f64> {
        let t = codes.decoder_flat(&codes.decoder_index(&codes.message(flat)));
        Ok(self.povm.elements[t].trace_product(&self.states[flat])?.re)
    }

    /// Outcome probabilities over all decoder indices, then failure, for message `flat`.
    pub fn outcome_probabilities(&self, flat: usize) -> Result<Vec<f64>> {
        let rho = &self.states[flat];
        let mut out = self
            .povm
            .elements
            .iter()
            .map(|e| e.trace_product(rho).map(|z| z.re))
            .collect::<Result<Vec<_>>>()?;
        out.push(self.povm.failure.trace_product(rho)?.re);
        Ok(out)
    }

    /// Prior-averaged error probability.
    pub fn exact_error(&self, codes: &CodePair) -> Result<f64> {
        let mut err = 0.0;
        for (flat, &p) in self.prior.iter().enumerate() {
            if p > 0.0 {
                err += p * (1.0 - self.success(codes, flat)?);
            }
        }
        Ok(err)
    }
}

/// Builds the square-root measurement for the given codes and message prior
/// (uniform when `None`).
pub fn srm_decoder(n4: &Cq4Channel, codes: &CodePair, prior: Option<&[f64]>) -> Result<SrmDecoder> {
    let dim = check_dim(n4, codes.n())?;
    let count = codes.message_count();
    let stored = (count + codes.index_count()).saturating_mul(dim * dim);
    if stored > STORAGE_CAP {
        return Err(Error::Resource { what: "stored matrix entries", requested: stored, cap: STORAGE_CAP });
    }
    let prior = match prior {
        Some(p) => {
            if p.len() != count {
                return Err(Error::DimensionMismatch { expected: count, got: p.len() });
            }
            check_simplex(p, "message prior")?;
            p.to_vec()
        }
        None => uniform(count),
    };
    let states = (0..count)
        .into_par_iter()
        .map(|flat| channel_matrix(n4, codes, &codes.message(flat)))
        .collect::<Result<Vec<_>>>()?;
    let mut gammas = vec![ComplexMatrix::zeros(dim); codes.index_count()];
    for (flat, rho) in states.iter().enumerate() {
        if prior[flat] > 0.0 {
            let t = codes.decoder_flat(&codes.decoder_index(&codes.message(flat)));
            gammas[t].add_scaled(prior[flat], rho)?;
        }
    }
    let povm = pgm(&gammas)?;
    Ok(SrmDecoder { povm, states, prior })
}

/// Simulation parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub n: usize,
    /// Inner (binning) code dimension.
    pub k: usize,
    /// Outer (message) dimension; each coset message is in `F_q^l`.
    pub l: usize,
    /// Number of private messages of the first sender.
    pub l1: usize,
    /// Number of private messages of the second sender.
    pub l2: usize,
    pub q: usize,
    /// Typicality slack for coset representatives.
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Redraw generators until `[G_inner; G_outer]` has full rank.
    pub full_rank: bool,
    pub p_v1: Vec<f64>,
    pub p_v2: Vec<f64>,
    pub p_u1: Vec<f64>,
    pub p_u2: Vec<f64>,
    /// Message prior, uniform when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

impl SimConfig {
    /// Binary configuration with trivial auxiliaries and uniform inputs.
    pub fn binary(n: usize, k: usize, l: usize) -> Self {
        Self {
            n,
            k,
            l,
            l1: 1,
            l2: 1,
            q: 2,
            delta: 0.5,
            trials: 2000,
            seed: 0,
            full_rank: true,
            p_v1: uniform(2),
            p_v2: uniform(2),
            p_u1: vec![1.0],
            p_u2: vec![1.0],
            prior: None,
        }
    }

    /// Checks sizes against every cap before anything is allocated.
    pub fn validate(&self, n4: &Cq4Channel) -> Result<()> {
        if self.n == 0 || self.trials == 0 || self.l1 == 0 || self.l2 == 0 {
            return Err(Error::Validation("n, trials and private message counts must be positive".into()));
        }
        if self.q != n4.q() {
            return Err(Error::DimensionMismatch { expected: n4.q(), got: self.q });
        }
        let (a1, a2) = n4.aux_sizes();
        if self.p_u1.len() != a1 || self.p_u2.len() != a2 || self.p_v1.len() != self.q || self.p_v2.len() != self.q {
            return Err(Error::Validation("input PMFs do not match the channel alphabets".into()));
        }
        ProductInputPmf::new(self.p_v1.clone(), self.p_v2.clone(), self.p_u1.clone(), self.p_u2.clone())?;
        let enumerated = self.q.checked_pow((self.k + self.l) as u32).unwrap_or(usize::MAX);
        if enumerated > ENUMERATION_CAP {
            return Err(Error::Resource { what: "q^(k+l)", requested: enumerated, cap: ENUMERATION_CAP });
        }
        let dim = check_dim(n4, self.n)?;
        let cosets = self.q.pow(self.l as u32);
        let stored = cosets
            .saturating_mul(cosets)
            .saturating_mul(self.l1 * self.l2)
            .saturating_add(cosets * self.l1 * self.l2)
            .saturating_mul(dim * dim);
        if stored > STORAGE_CAP {
            return Err(Error::Resource { what: "stored matrix entries", requested: stored, cap: STORAGE_CAP });
        }
        Ok(())
    }
}

/// Attempts at drawing full-rank generators before giving up.
const FULL_RANK_ATTEMPTS: usize = 1000;

/// Draws the code pair of a configuration: shared random generators,
/// independent biases, typical coset representatives and auxiliary codebooks.
pub fn random_code_pair(cfg: &SimConfig) -> Result<CodePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut base = NestedCosetCode::random(cfg.q, cfg.n, cfg.k, cfg.l, &mut rng)?;
    if cfg.full_rank {
        let mut tries = 1;
        while !base.full_rank() {
            if tries == FULL_RANK_ATTEMPTS || cfg.k + cfg.l > cfg.n {
                return Err(Error::Precondition(format!(
                    "no full-rank generator for k + l = {} and n = {}",
                    cfg.k + cfg.l,
                    cfg.n
                )));
            }
            base = NestedCosetCode::random(cfg.q, cfg.n, cfg.k, cfg.l, &mut rng)?;
            tries += 1;
        }
    }
    let b2: Vec<u8> = (0..cfg.n).map(|_| rng.gen_range(0..cfg.q) as u8).collect();
    let code2 = base.with_bias(b2)?;
    let s1 = select_coset_reps(&base, &cfg.p_v1, cfg.delta)?;
    let s2 = select_coset_reps(&code2, &cfg.p_v2, cfg.delta)?;
    let code1 = base.with_reps(s1.reps)?;
    let code2 = code2.with_reps(s2.reps)?;
    let aux1 = AuxCodebook::random(&cfg.p_u1, cfg.n, cfg.l1, &mut rng)?;
    let aux2 = AuxCodebook::random(&cfg.p_u2, cfg.n, cfg.l2, &mut rng)?;
    CodePair::new(code1, code2, aux1, aux2)
}

/// Expected decoding statistics of one decoder index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexStats {
    pub index: DecoderIndex,
    pub draws: usize,
    /// Sum over draws of the probability of decoding to this index.
    pub expected_correct: f64,
    /// Sum over draws of the probability of decoding elsewhere or failing.
    pub expected_errors: f64,
}

/// Monte Carlo estimate of the average error probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub trials: usize,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Prior-averaged error computed exactly.
    pub exact_error: f64,
    pub confusion: Vec<IndexStats>,
}

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `errors` (possibly fractional) out of `trials`.
pub fn wilson_interval(errors: f64, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = (errors / n).clamp(0.0, 1.0);
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if p == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Draws `cfg.trials` messages from the prior and averages the exact error
/// probability of the square-root decoder on each.
pub fn monte_carlo_error(cfg: &SimConfig, n4: &Cq4Channel) -> Result<SimReport> {
    cfg.validate(n4)?;
    let codes = random_code_pair(cfg)?;
    let decoder = srm_decoder(n4, &codes, cfg.prior.as_deref())?;
    simulate_with(cfg, &codes, &decoder)
}

/// Monte Carlo over a fixed code and decoder.
pub fn simulate_with(cfg: &SimConfig, codes: &CodePair, decoder: &SrmDecoder) -> Result<SimReport> {
    let dist = WeightedIndex::new(&decoder.prior).map_err(|e| Error::Validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let success: Vec<f64> = (0..codes.message_count())
        .into_par_iter()
        .map(|flat| decoder.success(codes, flat))
        .collect::<Result<_>>()?;
    let mut confusion: Vec<IndexStats> = (0..codes.index_count())
        .map(|t| IndexStats { index: codes.decoder_target(t), draws: 0, expected_correct: 0.0, expected_errors: 0.0 })
        .collect();
    let mut errors = 0.0;
    for _ in 0..cfg.trials {
        let flat = dist.sample(&mut rng);
        let t = codes.decoder_flat(&codes.decoder_index(&codes.message(flat)));
        let s = success[flat].clamp(0.0, 1.0);
        errors += 1.0 - s;
        let c = &mut confusion[t];
        c.draws += 1;
        c.expected_correct += s;
        c.expected_errors += 1.0 - s;
    }
    let (ci_low, ci_high) = wilson_interval(errors, cfg.trials);
    Ok(SimReport {
        config: cfg.clone(),
        trials: cfg.trials,
        error_rate: errors / cfg.trials as f64,
        ci_low,
        ci_high,
        exact_error: decoder.exact_error(codes)?,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cq::{induce_cq4, ConditionalPmf, Cq2Channel};

    fn xor_channel() -> Cq4Channel {
        let n2 = Cq2Channel::from_fn(2, 2, |a, b| DensityOperator::basis(2, a ^ b)).unwrap();
        let id = ConditionalPmf::deterministic(1, 2, 2, |_, v| v).unwrap();
        induce_cq4(&n2, &id, &id).unwrap()
    }

    #[test]
    fn encode_by_hand() {
        let code = NestedCosetCode::new(2, vec![vec![1, 1, 0]], vec![vec![0, 1, 1]], vec![1, 0, 0]).unwrap();
        assert_eq!(code.encode(&[1], &[1]).unwrap(), vec![0, 0, 1]);
        assert_eq!(code.encode(&[0], &[0]).unwrap(), vec![1, 0, 0]);
        assert!(code.encode(&[1, 0], &[1]).is_err());
    }

    #[test]
    fn zero_code_encodes_zero() {
        let code = NestedCosetCode::new(3, vec![vec![0; 4]; 2], vec![vec![0; 4]], vec![0; 4]).unwrap();
        for a in all_vectors(3, 2) {
            for m in all_vectors(3, 1) {
                assert_eq!(code.encode(&a, &m).unwrap(), vec![0; 4]);
            }
        }
    }

    #[test]
    fn uniform_prior_makes_everything_typical() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = NestedCosetCode::random(3, 4, 2, 1, &mut rng).unwrap();
        let s = select_coset_reps(&code, &uniform(3), 1.0 - 1.0 / 3.0).unwrap();
        assert!(s.theta.iter().all(|&t| t == 9));
        assert!(s.reps.iter().all(|a| a == &vec![0, 0]));
    }

    #[test]
    fn point_mass_typicality_counts_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let code = NestedCosetCode::random(2, 4, 2, 1, &mut rng).unwrap();
        let s = select_coset_reps(&code, &[1.0, 0.0], 0.0).unwrap();
        for m in 0..2 {
            let brute = all_vectors(2, 2)
                .filter(|a| code.encode(a, &index_vector(m, 2, 1)).unwrap().iter().all(|&x| x == 0))
                .count();
            assert_eq!(s.theta[m], brute);
        }
    }

    #[test]
    fn empty_inner_code_has_singleton_cosets() {
        let code = NestedCosetCode::new(2, vec![], vec![vec![1, 0, 1]], vec![0, 0, 0]).unwrap();
        let s = select_coset_reps(&code, &[0.5, 0.5], 0.2).unwrap();
        assert!(s.theta.iter().all(|&t| t <= 1));
    }

    #[test]
    fn single_symbol_state_is_table_entry() {
        let n4 = xor_channel();
        let code = NestedCosetCode::new(2, vec![], vec![vec![1]], vec![0]).unwrap();
        let codes = CodePair::new(code.clone(), code, AuxCodebook::trivial(1), AuxCodebook::trivial(1)).unwrap();
        let m = Message { m1: 1, m2: 0, m3: 0, m4: 0 };
        let rho = build_channel_state(&n4, &codes, &m).unwrap();
        assert_eq!(rho.matrix(), n4.state(1, 0, 0, 0).matrix());
    }

    #[test]
    fn classical_state_sits_at_xor_index() {
        let n4 = xor_channel();
        let cfg = SimConfig::binary(3, 1, 1);
        let codes = random_code_pair(&cfg).unwrap();
        for flat in 0..codes.message_count() {
            let m = codes.message(flat);
            let rho = build_channel_state(&n4, &codes, &m).unwrap();
            let x = codes.code1.field().add_vec(&codes.code1.codeword(m.m1), &codes.code2.codeword(m.m2));
            let idx = vector_index(&x, 2);
            assert!((rho.matrix().get(idx, idx).re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_cap_is_resource_error() {
        let n4 = xor_channel();
        let code = NestedCosetCode::new(2, vec![], vec![vec![1; 13]], vec![0; 13]).unwrap();
        let codes = CodePair::new(code.clone(), code, AuxCodebook::trivial(13), AuxCodebook::trivial(13)).unwrap();
        let r = build_channel_state(&n4, &codes, &codes.message(0));
        assert!(r.unwrap_err().is_resource());
        let mut cfg = SimConfig::binary(13, 1, 1);
        cfg.trials = 1;
        assert!(monte_carlo_error(&cfg, &n4).unwrap_err().is_resource());
    }

    #[test]
    fn pgm_orthogonal_and_single_candidate() {
        let p0 = ComplexMatrix::diag(&[0.5, 0.0]);
        let p1 = ComplexMatrix::diag(&[0.0, 0.5]);
        let povm = pgm(&[p0, p1]).unwrap();
        assert!(povm.elements[0].max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0])) < 1e-12);
        assert!(povm.elements[1].max_abs_diff(&ComplexMatrix::diag(&[0.0, 1.0])) < 1e-12);
        let single = pgm(&[ComplexMatrix::diag(&[0.3, 0.0, 0.0])]).unwrap();
        assert!(single.elements[0].max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0, 0.0])) < 1e-12);
        assert!(single.failure.max_abs_diff(&ComplexMatrix::diag(&[0.0, 1.0, 1.0])) < 1e-12);
        assert!(pgm(&[ComplexMatrix::zeros(2)]).is_err());
    }

    #[test]
    fn concentrated_prior_single_candidate_is_error_free() {
        let n4 = xor_channel();
        let mut cfg = SimConfig::binary(3, 1, 1);
        let mut prior = vec![0.0; 4];
        prior[2] = 1.0;
        cfg.prior = Some(prior);
        cfg.trials = 50;
        let r = monte_carlo_error(&cfg, &n4).unwrap();
        assert!(r.error_rate.abs() < 1e-12);
    }

    #[test]
    fn depolarized_channel_guesses_uniformly() {
        let rho = DensityOperator::maximally_mixed(2);
        let n2 = Cq2Channel::from_fn(2, 2, |_, _| rho.clone()).unwrap();
        let id = ConditionalPmf::deterministic(1, 2, 2, |_, v| v).unwrap();
        let n4 = induce_cq4(&n2, &id, &id).unwrap();
        let mut cfg = SimConfig::binary(3, 0, 2);
        cfg.trials = 4000;
        let r = monte_carlo_error(&cfg, &n4).unwrap();
        assert!((r.exact_error - 0.75).abs() < 1e-9);
        assert!(r.ci_low <= 0.75 && 0.75 <= r.ci_high, "{r:?}");
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0.0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50.0, 100);
        assert!(lo < 0.5 && hi > 0.5);
    }
}
