//! Shannon-theoretic quantities: joint PMFs over labelled registers, the
//! source model with its finite-field embedding, and binning-rate guidance for
//! nested coset codes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{is_prime, primes_up_to};
use crate::simplex::{shannon_entropy, SIMPLEX_TOL};

/// Joint PMF over a fixed list of finite registers, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    shape: Vec<usize>,
    mass: Vec<f64>,
}

impl JointPmf {
    pub fn new(shape: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        let size: usize = shape.iter().product();
        if shape.is_empty() || size == 0 || size != mass.len() {
            return Err(Error::Validation(format!(
                "pmf shape {shape:?} does not match {} masses",
                mass.len()
            )));
        }
        if let Some(x) = mass.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::NotSimplex(format!("negative or non-finite mass {x}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotSimplex(format!("masses sum to {total:.12}")));
        }
        Ok(Self { shape, mass })
    }

    /// Single-register PMF.
    pub fn from_vector(p: &[f64]) -> Result<Self> {
        Self::new(vec![p.len()], p.to_vec())
    }

    /// Product of independent marginals, first register slowest.
    pub fn product(marginals: &[&[f64]]) -> Result<Self> {
        let mut mass = vec![1.0];
        for p in marginals {
            mass = mass
                .iter()
                .flat_map(|&a| p.iter().map(move |&b| a * b))
                .collect();
        }
        Self::new(marginals.iter().map(|p| p.len()).collect(), mass)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn registers(&self) -> usize {
        self.shape.len()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.mass[self.flat_index(index)]
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Multi-index of a flat position.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for (slot, &n) in idx.iter_mut().zip(&self.shape).rev() {
            *slot = flat % n;
            flat /= n;
        }
        idx
    }

    /// Marginal over `regs`, in the order given.
    pub fn marginal(&self, regs: &[usize]) -> Result<JointPmf> {
        self.check_registers(regs)?;
        if regs.is_empty() {
            return Ok(JointPmf {
                shape: vec![1],
                mass: vec![self.mass.iter().sum()],
            });
        }
        let shape: Vec<usize> = regs.iter().map(|&r| self.shape[r]).collect();
        let mut mass = vec![0.0; shape.iter().product()];
        for (flat, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let idx = self.unravel(flat);
            let target = regs
                .iter()
                .zip(&shape)
                .fold(0, |acc, (&r, &n)| acc * n + idx[r]);
            mass[target] += m;
        }
        Ok(JointPmf { shape, mass })
    }

    fn joint_entropy(&self, regs: &[usize]) -> Result<f64> {
        if regs.is_empty() {
            return Ok(0.0);
        }
        Ok(shannon_entropy(&self.marginal(regs)?.mass))
    }

    /// `H(over | given)` in bits.
    pub fn entropy(&self, over: &[usize], given: &[usize]) -> Result<f64> {
        check_disjoint(&[over, given])?;
        let both: Vec<usize> = over.iter().chain(given).copied().collect();
        Ok(self.joint_entropy(&both)? - self.joint_entropy(given)?)
    }

    /// `I(a; b | given)` in bits.
    pub fn mutual_information(&self, a: &[usize], b: &[usize], given: &[usize]) -> Result<f64> {
        check_disjoint(&[a, b, given])?;
        let ag: Vec<usize> = a.iter().chain(given).copied().collect();
        let bg: Vec<usize> = b.iter().chain(given).copied().collect();
        let abg: Vec<usize> = a.iter().chain(b).chain(given).copied().collect();
        Ok(self.joint_entropy(&ag)? + self.joint_entropy(&bg)?
            - self.joint_entropy(&abg)?
            - self.joint_entropy(given)?)
    }

    fn check_registers(&self, regs: &[usize]) -> Result<()> {
        if let Some(r) = regs.iter().find(|&&r| r >= self.shape.len()) {
            return Err(Error::Validation(format!(
                "register {r} out of range for {} registers",
                self.shape.len()
            )));
        }
        Ok(())
    }
}

fn check_disjoint(sets: &[&[usize]]) -> Result<()> {
    let mut seen = Vec::new();
    for set in sets {
        for r in set.iter() {
            if seen.contains(r) {
                return Err(Error::Validation(format!("register {r} used twice")));
            }
            seen.push(*r);
        }
    }
    Ok(())
}

/// `H(over | given)` in bits.
pub fn entropy(p: &JointPmf, over: &[usize], given: &[usize]) -> Result<f64> {
    p.entropy(over, given)
}

/// `I(a; b | given)` in bits.
pub fn mutual_information(p: &JointPmf, a: &[usize], b: &[usize], given: &[usize]) -> Result<f64> {
    p.mutual_information(a, b, given)
}

/// Representation `f(s1, s2) = g(h1(s1) + h2(s2))` over the prime field of size `q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub q: usize,
    pub h1: Vec<usize>,
    pub h2: Vec<usize>,
    pub g: Vec<usize>,
}

impl Embedding {
    #[inline]
    pub fn sum(&self, s1: usize, s2: usize) -> usize {
        (self.h1[s1] + self.h2[s2]) % self.q
    }

    /// Checks the embedding identity on every positive-mass pair.
    pub fn check(&self, pmf: &JointPmf, f: &[Vec<usize>]) -> Result<()> {
        let (n1, n2) = (pmf.shape()[0], pmf.shape()[1]);
        if !is_prime(self.q) {
            return Err(Error::Validation(format!("embedding field size {} is not prime", self.q)));
        }
        if self.h1.len() != n1 || self.h2.len() != n2 || self.g.len() != self.q {
            return Err(Error::Validation("embedding tables have the wrong length".into()));
        }
        if self.h1.iter().chain(&self.h2).any(|&x| x >= self.q) {
            return Err(Error::Validation("embedding maps leave the field".into()));
        }
        for s1 in 0..n1 {
            for s2 in 0..n2 {
                if pmf.get(&[s1, s2]) > 0.0 && self.g[self.sum(s1, s2)] != f[s1][s2] {
                    return Err(Error::Validation(format!(
                        "embedding disagrees with f at ({s1}, {s2})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Two correlated sources, the target function and an optional field embedding.
#[derive(Clone, Debug)]
pub struct SourceModel {
    pmf: JointPmf,
    f: Vec<Vec<usize>>,
    embedding: Option<Embedding>,
}

impl SourceModel {
    pub fn new(pmf: JointPmf, f: Vec<Vec<usize>>, embedding: Option<Embedding>) -> Result<Self> {
        if pmf.registers() != 2 {
            return Err(Error::Validation("source pmf must have two registers".into()));
        }
        let (n1, n2) = (pmf.shape()[0], pmf.shape()[1]);
        if f.len() != n1 {
            return Err(Error::Validation(format!("function table has {} rows, expected {n1}", f.len())));
        }
        if let Some(i) = f.iter().position(|row| row.len() != n2) {
            return Err(Error::Validation(format!("function table row {i} has wrong length")));
        }
        if let Some(e) = &embedding {
            e.check(&pmf, &f)?;
        }
        Ok(Self { pmf, f, embedding })
    }

    pub fn pmf(&self) -> &JointPmf {
        &self.pmf
    }

    pub fn function(&self) -> &[Vec<usize>] {
        &self.f
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn alphabet_sizes(&self) -> (usize, usize) {
        (self.pmf.shape()[0], self.pmf.shape()[1])
    }

    /// Same source with a (validated) embedding attached.
    pub fn with_embedding(self, embedding: Embedding) -> Result<Self> {
        Self::new(self.pmf, self.f, Some(embedding))
    }

    /// Joint PMF of `(S1, S2)` with `f = S1 xor S2` and identity embedding over GF(2).
    pub fn example1() -> Self {
        let pmf = JointPmf::new(vec![2, 2], EXAMPLE1_SOURCE_MASSES.to_vec()).expect("literal pmf");
        let embedding = Embedding {
            q: 2,
            h1: vec![0, 1],
            h2: vec![0, 1],
            g: vec![0, 1],
        };
        Self::new(pmf, vec![vec![0, 1], vec![1, 0]], Some(embedding)).expect("literal source")
    }

    /// Parses a source description (see [`SourceSpec`]).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: SourceSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.into_model()
    }

    pub fn to_spec(&self) -> SourceSpec {
        let (n1, n2) = self.alphabet_sizes();
        SourceSpec {
            s1: n1,
            s2: n2,
            pmf: (0..n1)
                .map(|a| (0..n2).map(|b| self.pmf.get(&[a, b])).collect())
                .collect(),
            f: self.f.clone(),
            embedding: self.embedding.clone(),
        }
    }
}

/// Masses of `(S1, S2)` at (0,0), (0,1), (1,0), (1,1).
pub const EXAMPLE1_SOURCE_MASSES: [f64; 4] = [0.003920, 0.976080, 0.019920, 0.000080];

/// On-disk source description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub s1: usize,
    pub s2: usize,
    /// `pmf[s1][s2]`.
    pub pmf: Vec<Vec<f64>>,
    /// `f[s1][s2]`, output symbols labelled by integers.
    pub f: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
}

impl SourceSpec {
    pub fn into_model(self) -> Result<SourceModel> {
        if self.pmf.len() != self.s1 {
            return Err(Error::Parse(format!("pmf has {} rows, expected {}", self.pmf.len(), self.s1)));
        }
        if let Some(i) = self.pmf.iter().position(|r| r.len() != self.s2) {
            return Err(Error::Parse(format!("pmf row {i} has wrong length")));
        }
        let pmf = JointPmf::new(vec![self.s1, self.s2], self.pmf.concat())?;
        SourceModel::new(pmf, self.f, self.embedding)
    }
}

/// PMF of `S = h1(S1) + h2(S2)` over the embedding field.
pub fn sum_variable_pmf(source: &SourceModel) -> Result<JointPmf> {
    let e = source
        .embedding()
        .ok_or_else(|| Error::Precondition("source has no field embedding".into()))?;
    let (n1, n2) = source.alphabet_sizes();
    let mut mass = vec![0.0; e.q];
    for s1 in 0..n1 {
        for s2 in 0..n2 {
            mass[e.sum(s1, s2)] += source.pmf().get(&[s1, s2]);
        }
    }
    JointPmf::new(vec![e.q], mass)
}

/// Outcome of [`embed_search`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmbedSearch {
    Found(Embedding),
    NotFound { q_max: usize },
}

/// Largest alphabet and field sizes covered by exhaustive search.
pub const EXHAUSTIVE_MAX_ALPHABET: usize = 4;
pub const EXHAUSTIVE_MAX_Q: usize = 7;

/// Smallest prime `q <= q_max` admitting an embedding of `f`.
///
/// Small instances are searched exhaustively in lexicographic `(h1, h2)`
/// order; otherwise only the injective construction is tried, which works as
/// soon as `q > |S1| |S2|`.
pub fn embed_search(f: &[Vec<usize>], pmf: &JointPmf, q_max: usize) -> Result<EmbedSearch> {
    if q_max < 2 {
        return Err(Error::Precondition(format!("q_max must be at least 2, got {q_max}")));
    }
    let (n1, n2) = (pmf.shape()[0], pmf.shape()[1]);
    let pairs: Vec<(usize, usize)> = (0..n1)
        .flat_map(|a| (0..n2).map(move |b| (a, b)))
        .filter(|&(a, b)| pmf.get(&[a, b]) > 0.0)
        .collect();
    let exhaustive_ok = n1 <= EXHAUSTIVE_MAX_ALPHABET && n2 <= EXHAUSTIVE_MAX_ALPHABET;
    for q in primes_up_to(q_max) {
        if exhaustive_ok && q <= EXHAUSTIVE_MAX_Q {
            if let Some(e) = exhaustive_embedding(f, &pairs, n1, n2, q) {
                return Ok(EmbedSearch::Found(e));
            }
        } else if q > n1 * n2 {
            return Ok(EmbedSearch::Found(injective_embedding(f, n1, n2, q)));
        }
    }
    Ok(EmbedSearch::NotFound { q_max })
}

fn exhaustive_embedding(
    f: &[Vec<usize>],
    pairs: &[(usize, usize)],
    n1: usize,
    n2: usize,
    q: usize,
) -> Option<Embedding> {
    let mut h1 = vec![0usize; n1];
    loop {
        let mut h2 = vec![0usize; n2];
        loop {
            if let Some(g) = read_off_g(f, pairs, &h1, &h2, q) {
                return Some(Embedding {
                    q,
                    h1: h1.clone(),
                    h2,
                    g,
                });
            }
            if !increment(&mut h2, q) {
                break;
            }
        }
        if !increment(&mut h1, q) {
            return None;
        }
    }
}

/// Lexicographic successor with the last position fastest; false on wrap-around.
fn increment(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn read_off_g(
    f: &[Vec<usize>],
    pairs: &[(usize, usize)],
    h1: &[usize],
    h2: &[usize],
    q: usize,
) -> Option<Vec<usize>> {
    let mut g: Vec<Option<usize>> = vec![None; q];
    for &(a, b) in pairs {
        let z = (h1[a] + h2[b]) % q;
        match g[z] {
            None => g[z] = Some(f[a][b]),
            Some(v) if v != f[a][b] => return None,
            _ => {}
        }
    }
    Some(g.into_iter().map(|v| v.unwrap_or(0)).collect())
}

fn injective_embedding(f: &[Vec<usize>], n1: usize, n2: usize, q: usize) -> Embedding {
    let h1: Vec<usize> = (0..n1).collect();
    let h2: Vec<usize> = (0..n2).map(|b| b * n1).collect();
    let g = (0..q)
        .map(|z| if z < n1 * n2 { f[z % n1][z / n1] } else { 0 })
        .collect();
    Embedding { q, h1, h2, g }
}

/// Smallest inner-code rate (bits per symbol) that keeps typical coset
/// representatives available: `log2 q - min(H(V1), H(V2)) + delta`, floored at 0.
pub fn min_bin_rate(p_v1: &[f64], p_v2: &[f64], q: usize, delta: f64) -> f64 {
    let h = shannon_entropy(p_v1).min(shannon_entropy(p_v2));
    ((q as f64).log2() - h + delta).max(0.0)
}
