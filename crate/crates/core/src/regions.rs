//! Rate regions of the computation problem: the per-distribution channel
//! polytope of the four-sender channel, its sampled union over encoder maps,
//! the sampled source region, their intersection test, and the two scalar
//! sufficiency tests.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{sum_variable_pmf, JointPmf, SourceModel};
use crate::cq::{build_sigma, holevo_of, induce_cq4, product_holevo, sigma, ConditionalPmf, Cq2Channel, Cq4Channel, ProductInputPmf};
use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::hull::{pareto_max, pareto_min, DownHull, Point3, HULL_TOL};
use crate::optimizer::{maximize, refine, LinearCost, OptimizerConfig, COST_TOL};
use crate::simplex::{shannon_entropy, uniform};

/// Feasibility tolerance for polytope vertices.
pub const VERTEX_TOL: f64 = 1e-9;
/// Vertices closer than this are merged.
pub const VERTEX_MERGE_TOL: f64 = 1e-8;
/// Information quantities in `(-NOISE_FLOOR, 0)` are rounding noise.
const NOISE_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateTriple {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
}

impl RateTriple {
    pub fn new(r: f64, r1: f64, r2: f64) -> Result<Self> {
        if [r, r1, r2].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Validation(format!("rate triple ({r}, {r1}, {r2}) must be finite and nonnegative")));
        }
        Ok(Self { r, r1, r2 })
    }

    pub fn as_array(&self) -> Point3 {
        [self.r, self.r1, self.r2]
    }

    fn from_point(p: Point3) -> Self {
        Self { r: p[0].max(0.0), r1: p[1].max(0.0), r2: p[2].max(0.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    AtMost,
    AtLeast,
}

/// Which rate combination a constraint bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundTag {
    /// `R` against `I(V;Z|U1,U2) - I_max`.
    Sum,
    /// `R1` against `I(U1;Z|V,U2)`.
    Private1,
    /// `R2` against `I(U2;Z|V,U1)`.
    Private2,
    /// `R + R1` against `I(V,U1;Z|U2) - I_max`.
    SumPrivate1,
    /// `R + R2` against `I(V,U2;Z|U1) - I_max`.
    SumPrivate2,
    /// `R1 + R2` against `I(U1,U2;Z|V)`.
    PrivatePair,
    /// `R + R1 + R2` against `I(V,U1,U2;Z) - I_max`.
    Total,
    /// Source side: `R >= H(S|W1,W2,Q)`.
    SourceSum,
    /// Source side: `R1 >= I(S1;W1|Q,W2)`.
    SourceFirst,
    /// Source side: `R2 >= I(S2;W2|Q,W1)`.
    SourceSecond,
    /// Source side: `R1 + R2 >= I(S1,S2;W1,W2|Q)`.
    SourcePair,
    NonNegative,
}

impl fmt::Display for BoundTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundTag::Sum => "R <= I(V;Z|U1,U2) - Imax",
            BoundTag::Private1 => "R1 <= I(U1;Z|V,U2)",
            BoundTag::Private2 => "R2 <= I(U2;Z|V,U1)",
            BoundTag::SumPrivate1 => "R+R1 <= I(V,U1;Z|U2) - Imax",
            BoundTag::SumPrivate2 => "R+R2 <= I(V,U2;Z|U1) - Imax",
            BoundTag::PrivatePair => "R1+R2 <= I(U1,U2;Z|V)",
            BoundTag::Total => "R+R1+R2 <= I(V,U1,U2;Z) - Imax",
            BoundTag::SourceSum => "R >= H(S|W1,W2,Q)",
            BoundTag::SourceFirst => "R1 >= I(S1;W1|Q,W2)",
            BoundTag::SourceSecond => "R2 >= I(S2;W2|Q,W1)",
            BoundTag::SourcePair => "R1+R2 >= I(S1,S2;W1,W2|Q)",
            BoundTag::NonNegative => "rate >= 0",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub coeffs: [f64; 3],
    pub bound: f64,
    pub sense: Sense,
    pub tag: BoundTag,
}

impl Inequality {
    pub fn at_most(coeffs: [f64; 3], bound: f64, tag: BoundTag) -> Self {
        Self { coeffs, bound, sense: Sense::AtMost, tag }
    }

    pub fn at_least(coeffs: [f64; 3], bound: f64, tag: BoundTag) -> Self {
        Self { coeffs, bound, sense: Sense::AtLeast, tag }
    }

    /// Signed violation, positive when `x` breaks the constraint.
    pub fn violation(&self, x: &Point3) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
        match self.sense {
            Sense::AtMost => lhs - self.bound,
            Sense::AtLeast => self.bound - lhs,
        }
    }

    fn as_at_most(&self) -> ([f64; 3], f64) {
        match self.sense {
            Sense::AtMost => (self.coeffs, self.bound),
            Sense::AtLeast => (self.coeffs.map(|c| -c), -self.bound),
        }
    }
}

/// Intersection of tagged half-spaces in `(R, R1, R2)` space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfspaceRegion {
    pub constraints: Vec<Inequality>,
}

impl HalfspaceRegion {
    pub fn contains(&self, x: &Point3, tol: f64) -> bool {
        self.constraints.iter().all(|c| c.violation(x) <= tol)
    }

    /// Bound of the first constraint carrying `tag`.
    pub fn bound(&self, tag: BoundTag) -> Option<f64> {
        self.constraints.iter().find(|c| c.tag == tag).map(|c| c.bound)
    }
}

fn nonnegativity() -> [Inequality; 3] {
    [
        Inequality::at_least([1.0, 0.0, 0.0], 0.0, BoundTag::NonNegative),
        Inequality::at_least([0.0, 1.0, 0.0], 0.0, BoundTag::NonNegative),
        Inequality::at_least([0.0, 0.0, 1.0], 0.0, BoundTag::NonNegative),
    ]
}

fn denoise(x: f64) -> f64 {
    if x < 0.0 && x > -NOISE_FLOOR {
        0.0
    } else {
        x
    }
}

/// The seven mutual-information bounds of the four-sender channel, in the
/// order of [`BoundTag::Sum`] through [`BoundTag::Total`], plus `I_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelBounds {
    pub values: [f64; 7],
    pub i_max: f64,
}

pub fn channel_bounds(n4: &Cq4Channel, p: &ProductInputPmf) -> Result<ChannelBounds> {
    use sigma::{U1, U2, V, V1, V2};
    let s = build_sigma(n4, p)?;
    let h = |b: &[usize]| s.conditional_entropy(b);
    let h_all = h(&[V, U1, U2])?;
    let h_u = h(&[U1, U2])?;
    let h_vu2 = h(&[V, U2])?;
    let h_vu1 = h(&[V, U1])?;
    let h_u2 = h(&[U2])?;
    let h_u1 = h(&[U1])?;
    let h_v = h(&[V])?;
    let h_none = h(&[])?;
    let pmf = s.classical_pmf()?;
    let i_max = pmf
        .mutual_information(&[V1], &[V], &[])?
        .max(pmf.mutual_information(&[V2], &[V], &[])?);
    let i_max = denoise(i_max);
    let info = [h_u, h_vu2, h_vu1, h_u2, h_u1, h_v, h_none].map(|x| denoise(x - h_all));
    let values = [
        info[0] - i_max,
        info[1],
        info[2],
        info[3] - i_max,
        info[4] - i_max,
        info[5],
        info[6] - i_max,
    ]
    .map(denoise);
    Ok(ChannelBounds { values, i_max })
}

/// Channel polytope for one choice of input distribution: seven bounds plus
/// nonnegativity. A negative bound leaves the polytope empty.
pub fn rate_polytope(n4: &Cq4Channel, p: &ProductInputPmf, q: usize) -> Result<HalfspaceRegion> {
    if q != n4.q() {
        return Err(Error::DimensionMismatch { expected: n4.q(), got: q });
    }
    Ok(polytope_from_bounds(&channel_bounds(n4, p)?.values))
}

fn polytope_from_bounds(b: &[f64; 7]) -> HalfspaceRegion {
    let rows: [([f64; 3], BoundTag); 7] = [
        ([1.0, 0.0, 0.0], BoundTag::Sum),
        ([0.0, 1.0, 0.0], BoundTag::Private1),
        ([0.0, 0.0, 1.0], BoundTag::Private2),
        ([1.0, 1.0, 0.0], BoundTag::SumPrivate1),
        ([1.0, 0.0, 1.0], BoundTag::SumPrivate2),
        ([0.0, 1.0, 1.0], BoundTag::PrivatePair),
        ([1.0, 1.0, 1.0], BoundTag::Total),
    ];
    let mut constraints: Vec<Inequality> = rows
        .iter()
        .zip(b)
        .map(|((c, tag), &bound)| Inequality::at_most(*c, bound, *tag))
        .collect();
    constraints.extend(nonnegativity());
    HalfspaceRegion { constraints }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Vertices of a bounded 3-D polytope by exhaustive intersection of
/// constraint triples; empty for an empty polytope.
pub fn polytope_vertices(h: &HalfspaceRegion) -> Vec<RateTriple> {
    let rows: Vec<([f64; 3], f64)> = h.constraints.iter().map(Inequality::as_at_most).collect();
    let mut out: Vec<Point3> = Vec::new();
    let n = rows.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let a = [rows[i].0, rows[j].0, rows[k].0];
                let d = det3(&a);
                if d.abs() < 1e-12 {
                    continue;
                }
                let b = [rows[i].1, rows[j].1, rows[k].1];
                let x: Point3 = std::array::from_fn(|c| {
                    let mut m = a;
                    for r in 0..3 {
                        m[r][c] = b[r];
                    }
                    det3(&m) / d
                });
                if !h.contains(&x, VERTEX_TOL) {
                    continue;
                }
                if out.iter().all(|y| y.iter().zip(&x).any(|(u, v)| (u - v).abs() > VERTEX_MERGE_TOL)) {
                    out.push(x);
                }
            }
        }
    }
    out.into_iter().map(RateTriple::from_point).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Closure {
    /// Contains every nonnegative point dominated by the hull.
    Down,
    /// Contains every point dominating a sampled point.
    Up,
}

/// Union of sampled per-distribution regions with its closure.
#[derive(Clone, Debug)]
pub struct SampledRegion {
    closure: Closure,
    points: Vec<RateTriple>,
    extreme: Vec<RateTriple>,
    hull: Option<DownHull>,
    sampled: usize,
}

impl SampledRegion {
    /// Down-closed convex hull of `points`.
    pub fn down_set(points: &[Point3], sampled: usize) -> Self {
        let front = pareto_max(points);
        let hull = (!front.is_empty()).then(|| DownHull::new(&front));
        let extreme = hull
            .as_ref()
            .map(|h| h.vertices().iter().copied().map(RateTriple::from_point).collect())
            .unwrap_or_default();
        Self {
            closure: Closure::Down,
            points: front.into_iter().map(RateTriple::from_point).collect(),
            extreme,
            hull,
            sampled,
        }
    }

    /// Up-closure of `points`, kept as its minimal elements.
    pub fn up_set(points: &[Point3], sampled: usize) -> Self {
        let front: Vec<RateTriple> = pareto_min(points).into_iter().map(RateTriple::from_point).collect();
        Self { closure: Closure::Up, points: front.clone(), extreme: front, hull: None, sampled }
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    /// Pareto-extreme sampled points (maximal for down-sets, minimal for up-sets).
    pub fn points(&self) -> &[RateTriple] {
        &self.points
    }

    /// Hull vertices of a down-set, minimal points of an up-set.
    pub fn extreme_points(&self) -> &[RateTriple] {
        &self.extreme
    }

    /// Number of distributions that produced a nonempty region.
    pub fn sampled(&self) -> usize {
        self.sampled
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, x: &RateTriple) -> bool {
        let p = x.as_array();
        match self.closure {
            Closure::Down => self.hull.as_ref().is_some_and(|h| h.contains(&p, HULL_TOL)),
            Closure::Up => self
                .points
                .iter()
                .any(|m| m.as_array().iter().zip(&p).all(|(a, b)| *a <= b + HULL_TOL)),
        }
    }

    /// CSV rows `R,R1,R2,tag` with tags `vertex` (sampled extreme points) and `hull`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "R,R1,R2,tag")?;
        for (tag, set) in [("vertex", &self.points), ("hull", &self.extreme)] {
            for p in set.iter() {
                writeln!(w, "{:.10},{:.10},{:.10},{tag}", p.r, p.r1, p.r2)?;
            }
        }
        Ok(())
    }
}

/// Sampling budget and auxiliary alphabet sizes for the region unions.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    /// Random draws on top of the structured grid.
    pub samples: usize,
    pub seed: u64,
    /// Alphabet size of each private auxiliary on the channel side.
    pub aux_size: usize,
    /// Alphabet size of the time-sharing variable on the source side.
    pub time_sharing: usize,
    /// Alphabet size of each description variable on the source side.
    pub description_size: usize,
    /// Include the budget-independent structured grid.
    pub structured: bool,
    /// Cost on the marginal of the first channel input.
    pub cost: Option<LinearCost>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            seed: 0,
            aux_size: 2,
            time_sharing: 2,
            description_size: 2,
            structured: true,
            cost: None,
        }
    }
}

/// Structured channel-side grids larger than this many encoder-map pairs are skipped.
pub const STRUCTURED_PAIR_CAP: usize = 400;
/// Smallest move during local polishing of structured candidates.
const POLISH_MIN_STEP: f64 = 1e-4;
const POLISH_START_STEP: f64 = 0.25;
/// Directions in `(R, R1, R2)` along which structured candidates are polished.
const POLISH_DIRECTIONS: [Point3; 13] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [1.0, 0.1, 0.1],
    [1.0, 0.2, 0.2],
    [1.0, 0.35, 0.35],
    [1.0, 0.5, 0.5],
    [1.0, 0.0, 0.25],
    [1.0, 0.25, 0.0],
];

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the simplex of dimension `n`.
fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random conditional table: all rows point masses with probability 1/2,
/// otherwise uniform rows.
fn random_conditional(rng: &mut ChaCha8Rng, n_u: usize, n_v: usize, n_x: usize) -> Result<ConditionalPmf> {
    if rng.gen_bool(0.5) {
        let picks: Vec<usize> = (0..n_u * n_v).map(|_| rng.gen_range(0..n_x)).collect();
        ConditionalPmf::deterministic(n_u, n_v, n_x, |u, v| picks[u * n_v + v])
    } else {
        let table = (0..n_u * n_v).flat_map(|_| dirichlet(rng, n_x)).collect();
        ConditionalPmf::new(n_u, n_v, n_x, table)
    }
}

fn cost_ok(cost: Option<&LinearCost>, c1: &ConditionalPmf, p: &ProductInputPmf) -> bool {
    cost.map_or(true, |c| c.slack(&c1.output_marginal(&p.u1, &p.v1)) >= -COST_TOL)
}

fn vertices_of(n4: &Cq4Channel, p: &ProductInputPmf) -> Result<Vec<Point3>> {
    let b = channel_bounds(n4, p)?;
    Ok(polytope_vertices(&polytope_from_bounds(&b.values)).iter().map(RateTriple::as_array).collect())
}

/// Largest `w . x` over the polytope with bounds floored at zero, minus the
/// total negative part of the bounds; continuous in the input distribution.
fn soft_support(b: &[f64; 7], w: &Point3) -> f64 {
    let floored = b.map(|x| x.max(0.0));
    let penalty: f64 = b.iter().map(|x| (-x).max(0.0)).sum();
    let best = polytope_vertices(&polytope_from_bounds(&floored))
        .iter()
        .map(|v| w.iter().zip(v.as_array()).map(|(a, x)| a * x).sum::<f64>())
        .fold(0.0, f64::max);
    best - penalty
}

/// All maps `F_q -> X`, as output lists indexed by `v`.
fn slice_maps(q: usize, n_x: usize) -> Vec<Vec<usize>> {
    let count = n_x.pow(q as u32);
    (0..count)
        .map(|mut k| {
            let mut s = vec![0; q];
            for slot in s.iter_mut().rev() {
                *slot = k % n_x;
                k /= n_x;
            }
            s
        })
        .collect()
}

/// Multisets of size `k` from `0..n`, as nondecreasing index lists.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Deterministic encoder-map classes for one sender: each auxiliary symbol
/// selects a map `v -> x`; relabelling auxiliary symbols is absorbed by the
/// polished auxiliary PMF.
fn deterministic_classes(q: usize, n_u: usize, n_x: usize) -> Result<Vec<ConditionalPmf>> {
    let slices = slice_maps(q, n_x);
    multisets(slices.len(), n_u)
        .into_iter()
        .map(|pick| ConditionalPmf::deterministic(n_u, q, n_x, |u, v| slices[pick[u]][v]))
        .collect()
}

fn start_set(n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![uniform(n)];
    out.extend((0..n).map(|k| crate::simplex::point_mass(n, k)));
    out
}

fn product_input(x: &[Vec<f64>]) -> ProductInputPmf {
    ProductInputPmf { v1: x[0].clone(), v2: x[1].clone(), u1: x[2].clone(), u2: x[3].clone() }
}

/// Polishes the input distribution of one pair of encoder maps along each of
/// the fixed directions; returns all vertices met at the start and end points
/// and the number of distributions used.
fn polish_pair(n2: &Cq2Channel, c1: &ConditionalPmf, c2: &ConditionalPmf, cost: Option<&LinearCost>) -> Result<(Vec<Point3>, usize)> {
    let n4 = induce_cq4(n2, c1, c2)?;
    let q = n4.q();
    let (a1, a2) = n4.aux_sizes();
    let sets = [start_set(q), start_set(q), start_set(a1), start_set(a2)];
    let mut starts: Vec<(Vec<Vec<f64>>, [f64; 7])> = Vec::new();
    for x0 in &sets[0] {
        for x1 in &sets[1] {
            for x2 in &sets[2] {
                for x3 in &sets[3] {
                    let x = vec![x0.clone(), x1.clone(), x2.clone(), x3.clone()];
                    let p = product_input(&x);
                    if cost_ok(cost, c1, &p) {
                        let b = channel_bounds(&n4, &p)?.values;
                        starts.push((x, b));
                    }
                }
            }
        }
    }
    let mut points = Vec::new();
    let mut used = 0;
    for (_, b) in &starts {
        let v = polytope_vertices(&polytope_from_bounds(b));
        if !v.is_empty() {
            used += 1;
            points.extend(v.iter().map(RateTriple::as_array));
        }
    }
    for w in &POLISH_DIRECTIONS {
        let Some((start, _)) = starts
            .iter()
            .map(|(x, b)| (x, soft_support(b, w)))
            .fold(None, |best: Option<(&Vec<Vec<f64>>, f64)>, (x, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((x, v)),
            })
        else {
            continue;
        };
        let objective = |x: &[Vec<f64>]| -> Result<f64> {
            let p = product_input(x);
            if !cost_ok(cost, c1, &p) {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(soft_support(&channel_bounds(&n4, &p)?.values, w))
        };
        let r = refine(objective, start.clone(), None, POLISH_START_STEP, POLISH_MIN_STEP)?;
        let v = vertices_of(&n4, &product_input(&r.argmax))?;
        if !v.is_empty() {
            used += 1;
            points.extend(v);
        }
    }
    Ok((points, used))
}

fn random_channel_draw(n2: &Cq2Channel, q: usize, cfg: &SamplingConfig, i: usize) -> Result<Option<Vec<Point3>>> {
    let mut rng = rng_for(cfg.seed, i as u64);
    let (x1, x2) = n2.alphabet_sizes();
    let c1 = random_conditional(&mut rng, cfg.aux_size, q, x1)?;
    let c2 = random_conditional(&mut rng, cfg.aux_size, q, x2)?;
    let p = ProductInputPmf::new(
        dirichlet(&mut rng, q),
        dirichlet(&mut rng, q),
        dirichlet(&mut rng, cfg.aux_size),
        dirichlet(&mut rng, cfg.aux_size),
    )?;
    if !cost_ok(cfg.cost.as_ref(), &c1, &p) {
        return Ok(None);
    }
    let n4 = induce_cq4(n2, &c1, &c2)?;
    let v = vertices_of(&n4, &p)?;
    Ok((!v.is_empty()).then_some(v))
}

/// Sampled union of channel polytopes over encoder maps and input
/// distributions, down-closed and convexified.
///
/// Candidates are a budget-independent grid of deterministic encoder maps,
/// each polished over its input distribution, plus `cfg.samples` seeded
/// random draws. Draw `i` depends only on `(seed, i)`, so enlarging the
/// budget only adds points.
pub fn channel_region(n2: &Cq2Channel, q: usize, cfg: &SamplingConfig) -> Result<SampledRegion> {
    if cfg.samples == 0 {
        return Err(Error::Precondition("channel region needs at least one sample".into()));
    }
    if !is_prime(q) {
        return Err(Error::Validation(format!("{q} is not prime")));
    }
    if cfg.aux_size == 0 {
        return Err(Error::Validation("auxiliary alphabet must be nonempty".into()));
    }
    let (x1, x2) = n2.alphabet_sizes();
    if let Some(c) = &cfg.cost {
        if c.weights.len() != x1 {
            return Err(Error::DimensionMismatch { expected: x1, got: c.weights.len() });
        }
    }
    let mut points = Vec::new();
    let mut sampled = 0;
    if cfg.structured {
        let k1 = deterministic_classes(q, cfg.aux_size, x1)?;
        let k2 = deterministic_classes(q, cfg.aux_size, x2)?;
        if k1.len() * k2.len() <= STRUCTURED_PAIR_CAP {
            let pairs: Vec<(usize, usize)> = (0..k1.len()).flat_map(|a| (0..k2.len()).map(move |b| (a, b))).collect();
            let polished: Vec<(Vec<Point3>, usize)> = pairs
                .par_iter()
                .map(|&(a, b)| polish_pair(n2, &k1[a], &k2[b], cfg.cost.as_ref()))
                .collect::<Result<_>>()?;
            for (pts, used) in polished {
                points.extend(pts);
                sampled += used;
            }
        }
    }
    let draws: Vec<Option<Vec<Point3>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| random_channel_draw(n2, q, cfg, i))
        .collect::<Result<_>>()?;
    for v in draws.into_iter().flatten() {
        sampled += 1;
        points.extend(v);
    }
    Ok(SampledRegion::down_set(&points, sampled))
}

/// Test channel `p_Q * p(W1 | S1, Q) * p(W2 | S2, Q)` for the source region.
#[derive(Clone, Debug, PartialEq)]
pub struct TestChannel {
    pub p_q: Vec<f64>,
    /// `w1[q][s1]` is a PMF over `W1`.
    pub w1: Vec<Vec<Vec<f64>>>,
    /// `w2[q][s2]` is a PMF over `W2`.
    pub w2: Vec<Vec<Vec<f64>>>,
}

impl TestChannel {
    /// Single time-sharing symbol with the given per-source descriptions.
    pub fn simple(w1: Vec<Vec<f64>>, w2: Vec<Vec<f64>>) -> Self {
        Self { p_q: vec![1.0], w1: vec![w1], w2: vec![w2] }
    }
}

/// Lower bounds `(H(S|W1 W2 Q), I(S1;W1|Q W2), I(S2;W2|Q W1), I(S1 S2;W1 W2|Q))`.
pub fn source_bounds(source: &SourceModel, t: &TestChannel) -> Result<[f64; 4]> {
    let e = source
        .embedding()
        .ok_or_else(|| Error::Precondition("source has no field embedding".into()))?;
    let (n1, n2) = source.alphabet_sizes();
    let nq = t.p_q.len();
    let nw1 = t.w1[0][0].len();
    let nw2 = t.w2[0][0].len();
    if t.w1.len() != nq || t.w2.len() != nq || t.w1.iter().any(|r| r.len() != n1) || t.w2.iter().any(|r| r.len() != n2) {
        return Err(Error::Validation("test channel tables do not match the source alphabets".into()));
    }
    let shape = vec![nq, n1, n2, nw1, nw2, e.q];
    let mut mass = vec![0.0; shape.iter().product()];
    for (qq, &pq) in t.p_q.iter().enumerate() {
        for s1 in 0..n1 {
            for s2 in 0..n2 {
                let ps = pq * source.pmf().get(&[s1, s2]);
                if ps == 0.0 {
                    continue;
                }
                let s = e.sum(s1, s2);
                for (w1, &a) in t.w1[qq][s1].iter().enumerate() {
                    for (w2, &b) in t.w2[qq][s2].iter().enumerate() {
                        let flat = ((((qq * n1 + s1) * n2 + s2) * nw1 + w1) * nw2 + w2) * e.q + s;
                        mass[flat] += ps * a * b;
                    }
                }
            }
        }
    }
    let j = JointPmf::new(shape, mass)?;
    const Q: usize = 0;
    const S1: usize = 1;
    const S2: usize = 2;
    const W1: usize = 3;
    const W2: usize = 4;
    const S: usize = 5;
    Ok([
        j.entropy(&[S], &[W1, W2, Q])?,
        j.mutual_information(&[S1], &[W1], &[Q, W2])?,
        j.mutual_information(&[S2], &[W2], &[Q, W1])?,
        j.mutual_information(&[S1, S2], &[W1, W2], &[Q])?,
    ]
    // information that should vanish comes out as rounding residue of either sign
    .map(|x| if x.abs() < NOISE_FLOOR { 0.0 } else { x.max(0.0) }))
}

/// Minimal corner points of `{R >= a, R1 >= b, R2 >= c, R1 + R2 >= d}`.
pub fn source_corners(b: &[f64; 4]) -> [Point3; 2] {
    let [a, r1, r2, pair] = *b;
    [[a, r1, r2.max(pair - r1)], [a, r1.max(pair - r2), r2]]
}

fn noisy_identity(n_s: usize, n_w: usize, noise: f64) -> Vec<Vec<f64>> {
    (0..n_s)
        .map(|s| {
            let mut row = vec![noise / n_w as f64; n_w];
            row[s] += 1.0 - noise;
            row
        })
        .collect()
}

fn deterministic_description(n_s: usize, n_w: usize, map: &[usize]) -> Vec<Vec<f64>> {
    (0..n_s).map(|s| crate::simplex::point_mass(n_w, map[s])).collect()
}

/// Budget-independent descriptions for one source: all deterministic maps
/// and, when the description alphabet is large enough, the identity mixed
/// with uniform noise at levels `0, 1/8, ..., 1`.
fn structured_descriptions(n_s: usize, n_w: usize) -> Vec<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Vec<f64>>> = slice_maps(n_s, n_w).iter().map(|m| deterministic_description(n_s, n_w, m)).collect();
    if n_w >= n_s {
        out.extend((0..=8).map(|k| noisy_identity(n_s, n_w, k as f64 / 8.0)));
    }
    out
}

fn random_description(rng: &mut ChaCha8Rng, n_s: usize, n_w: usize) -> Vec<Vec<f64>> {
    if rng.gen_bool(0.5) {
        (0..n_s).map(|_| crate::simplex::point_mass(n_w, rng.gen_range(0..n_w))).collect()
    } else {
        (0..n_s).map(|_| dirichlet(rng, n_w)).collect()
    }
}

/// Sampled union of source regions over test channels, kept as minimal points.
pub fn source_region(source: &SourceModel, q: usize, cfg: &SamplingConfig) -> Result<SampledRegion> {
    let e = source
        .embedding()
        .ok_or_else(|| Error::Precondition("source has no field embedding".into()))?;
    if e.q != q {
        return Err(Error::Validation(format!("source is embedded in a field of size {}, not {q}", e.q)));
    }
    if cfg.samples == 0 {
        return Err(Error::Precondition("source region needs at least one sample".into()));
    }
    if cfg.time_sharing == 0 || cfg.description_size == 0 {
        return Err(Error::Validation("auxiliary alphabets must be nonempty".into()));
    }
    let (n1, n2) = source.alphabet_sizes();
    let nw = cfg.description_size;
    let mut channels = Vec::new();
    if cfg.structured {
        let d1 = structured_descriptions(n1, nw);
        let d2 = structured_descriptions(n2, nw);
        for a in &d1 {
            for b in &d2 {
                channels.push(TestChannel::simple(a.clone(), b.clone()));
            }
        }
    }
    for i in 0..cfg.samples {
        let mut rng = rng_for(cfg.seed, i as u64);
        let p_q = dirichlet(&mut rng, cfg.time_sharing);
        let w1 = (0..cfg.time_sharing).map(|_| random_description(&mut rng, n1, nw)).collect();
        let w2 = (0..cfg.time_sharing).map(|_| random_description(&mut rng, n2, nw)).collect();
        channels.push(TestChannel { p_q, w1, w2 });
    }
    let corners: Vec<[Point3; 2]> = channels
        .par_iter()
        .map(|t| source_bounds(source, t).map(|b| source_corners(&b)))
        .collect::<Result<_>>()?;
    let points: Vec<Point3> = corners.into_iter().flatten().collect();
    Ok(SampledRegion::up_set(&points, channels.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Intersection {
    pub intersects: bool,
    pub witness: Option<RateTriple>,
}

/// Whether some minimal point of the up-set `a` lies in the down-set `b`;
/// the first such point in ascending `(R, R1, R2)` order is the witness.
pub fn regions_intersect(a: &SampledRegion, b: &SampledRegion) -> Result<Intersection> {
    if a.closure() != Closure::Up || b.closure() != Closure::Down {
        return Err(Error::Precondition("expected an up-set and a down-set".into()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("cannot intersect an empty region".into()));
    }
    let witness = a.points().iter().find(|p| b.contains(p)).copied();
    Ok(Intersection { intersects: witness.is_some(), witness })
}

/// Outcome of a scalar sufficiency test `lhs < rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SufficiencyTest {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub argmax: Vec<Vec<f64>>,
    pub evaluations: usize,
}

/// `H(S1, S2) < max I(X1 X2; Z)` over product inputs, the condition for
/// separate source compression followed by channel coding.
pub fn unstructured_condition(
    source: &SourceModel,
    n2: &Cq2Channel,
    cost: Option<&LinearCost>,
    opt: &OptimizerConfig,
) -> Result<SufficiencyTest> {
    let lhs = source.pmf().entropy(&[0, 1], &[])?;
    let (x1, x2) = n2.alphabet_sizes();
    let r = maximize(|p| product_holevo(n2, &p[0], &p[1]), &[x1, x2], cost, opt)?;
    Ok(SufficiencyTest { lhs, rhs: r.value, holds: lhs < r.value, argmax: r.argmax, evaluations: r.evaluations })
}

/// The structured-code objective at product inputs `p1`, `p2` over `F_q`:
/// `min(H(X1), H(X2)) - H(X) + chi({p_X(x), rho_x})` with `X = X1 + X2`.
pub fn structured_objective(sum_states: &[crate::hermitian::DensityOperator], p1: &[f64], p2: &[f64]) -> Result<f64> {
    let q = sum_states.len();
    let mut px = vec![0.0; q];
    for (a, &pa) in p1.iter().enumerate() {
        for (b, &pb) in p2.iter().enumerate() {
            px[(a + b) % q] += pa * pb;
        }
    }
    let refs: Vec<&crate::hermitian::DensityOperator> = sum_states.iter().collect();
    let chi = holevo_of(&px, &refs)?;
    Ok(shannon_entropy(p1).min(shannon_entropy(p2)) - shannon_entropy(&px) + chi)
}

/// `H(S) < max` of [`structured_objective`], the condition for computing the
/// sum directly with identical linear codes. The channel must depend on its
/// inputs only through their sum.
pub fn structured_condition(
    source: &SourceModel,
    n2: &Cq2Channel,
    q: usize,
    cost: Option<&LinearCost>,
    opt: &OptimizerConfig,
) -> Result<SufficiencyTest> {
    let e = source
        .embedding()
        .ok_or_else(|| Error::Precondition("source has no field embedding".into()))?;
    if e.q != q {
        return Err(Error::Validation(format!("source is embedded in a field of size {}, not {q}", e.q)));
    }
    let states = n2.sum_states(q)?;
    let lhs = shannon_entropy(sum_variable_pmf(source)?.mass());
    let r = maximize(|p| structured_objective(&states, &p[0], &p[1]), &[q, q], cost, opt)?;
    Ok(SufficiencyTest { lhs, rhs: r.value, holds: lhs < r.value, argmax: r.argmax, evaluations: r.evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cq::example1_channel;
    use crate::hermitian::DensityOperator;
    use crate::simplex::binary_entropy;

    fn triple(r: f64, r1: f64, r2: f64) -> RateTriple {
        RateTriple::new(r, r1, r2).unwrap()
    }

    fn boxed(bounds: [f64; 3]) -> HalfspaceRegion {
        let mut constraints: Vec<Inequality> = (0..3)
            .map(|k| {
                let mut c = [0.0; 3];
                c[k] = 1.0;
                Inequality::at_most(c, bounds[k], BoundTag::Sum)
            })
            .collect();
        constraints.extend(nonnegativity());
        HalfspaceRegion { constraints }
    }

    #[test]
    fn cube_has_eight_vertices() {
        assert_eq!(polytope_vertices(&boxed([1.0, 1.0, 1.0])).len(), 8);
    }

    #[test]
    fn simplex_has_four_vertices() {
        let mut h = HalfspaceRegion { constraints: nonnegativity().to_vec() };
        h.constraints.push(Inequality::at_most([1.0; 3], 1.0, BoundTag::Total));
        assert_eq!(polytope_vertices(&h).len(), 4);
    }

    #[test]
    fn negative_bound_gives_empty_polytope() {
        assert!(polytope_vertices(&boxed([-0.1, 1.0, 1.0])).is_empty());
    }

    fn xor_classical() -> Cq2Channel {
        Cq2Channel::from_fn(2, 2, |a, b| DensityOperator::basis(2, a ^ b)).unwrap()
    }

    fn identity_maps() -> (ConditionalPmf, ConditionalPmf) {
        let c = ConditionalPmf::deterministic(1, 2, 2, |_, v| v).unwrap();
        (c.clone(), c)
    }

    #[test]
    fn uniform_inputs_give_holevo_bound() {
        let (c1, c2) = identity_maps();
        let n4 = induce_cq4(&example1_channel(0.0).unwrap(), &c1, &c2).unwrap();
        let p = ProductInputPmf::new(vec![0.5, 0.5], vec![0.5, 0.5], vec![1.0], vec![1.0]).unwrap();
        let h = rate_polytope(&n4, &p, 2).unwrap();
        let s = build_sigma(&n4, &p).unwrap();
        let i_vz = s.conditional_qmi(&[sigma::V], &[sigma::U1, sigma::U2]).unwrap();
        assert!((h.bound(BoundTag::Sum).unwrap() - i_vz).abs() < 1e-8);
        assert!((i_vz - 0.737116).abs() < 1e-6);
    }

    #[test]
    fn point_mass_first_input_subtracts_entropy_of_second() {
        let (c1, c2) = identity_maps();
        let n4 = induce_cq4(&xor_classical(), &c1, &c2).unwrap();
        let p = ProductInputPmf::new(vec![1.0, 0.0], vec![0.3, 0.7], vec![1.0], vec![1.0]).unwrap();
        let b = channel_bounds(&n4, &p).unwrap();
        assert!((b.i_max - binary_entropy(0.3)).abs() < 1e-12);
        // V reproduces V2 exactly, so I(V;Z) = H(V2) and the bound vanishes
        assert!(b.values[0].abs() < 1e-9);
    }

    #[test]
    fn channel_bounds_match_conditional_qmi() {
        let n2 = example1_channel(0.15).unwrap();
        let c1 = ConditionalPmf::new(2, 2, 2, vec![0.9, 0.1, 0.2, 0.8, 1.0, 0.0, 0.3, 0.7]).unwrap();
        let c2 = ConditionalPmf::deterministic(2, 2, 2, |u, v| u ^ v).unwrap();
        let n4 = induce_cq4(&n2, &c1, &c2).unwrap();
        let p = ProductInputPmf::new(vec![0.6, 0.4], vec![0.3, 0.7], vec![0.5, 0.5], vec![0.2, 0.8]).unwrap();
        let b = channel_bounds(&n4, &p).unwrap();
        let s = build_sigma(&n4, &p).unwrap();
        use sigma::{U1, U2, V, V1, V2};
        let pmf = s.classical_pmf().unwrap();
        let imax = pmf.mutual_information(&[V1], &[V], &[]).unwrap().max(pmf.mutual_information(&[V2], &[V], &[]).unwrap());
        let oracle = [
            s.conditional_qmi(&[V], &[U1, U2]).unwrap() - imax,
            s.conditional_qmi(&[U1], &[V, U2]).unwrap(),
            s.conditional_qmi(&[U2], &[V, U1]).unwrap(),
            s.conditional_qmi(&[V, U1], &[U2]).unwrap() - imax,
            s.conditional_qmi(&[V, U2], &[U1]).unwrap() - imax,
            s.conditional_qmi(&[U1, U2], &[V]).unwrap(),
            s.conditional_qmi(&[V, U1, U2], &[]).unwrap() - imax,
        ];
        for (x, y) in b.values.iter().zip(oracle) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    fn small_cfg(samples: usize) -> SamplingConfig {
        SamplingConfig { samples, ..Default::default() }
    }

    #[test]
    fn constant_channel_region_is_origin() {
        let rho = DensityOperator::maximally_mixed(2);
        let n2 = Cq2Channel::from_fn(2, 2, |_, _| rho.clone()).unwrap();
        let r = channel_region(&n2, 2, &small_cfg(50)).unwrap();
        assert!(r.contains(&triple(0.0, 0.0, 0.0)));
        assert!(!r.contains(&triple(1e-6, 0.0, 0.0)));
        assert!(!r.contains(&triple(0.0, 1e-6, 0.0)));
    }

    #[test]
    fn noiseless_xor_region_reaches_one_bit() {
        let r = channel_region(&xor_classical(), 2, &small_cfg(20)).unwrap();
        assert!(r.contains(&triple(1.0, 0.0, 0.0)));
        assert!(!r.contains(&triple(1.01, 0.0, 0.0)));
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(matches!(channel_region(&xor_classical(), 2, &small_cfg(0)), Err(Error::Precondition(_))));
    }

    #[test]
    fn trivial_descriptions_collapse_source_region() {
        let src = SourceModel::example1();
        let trivial = TestChannel::simple(vec![vec![1.0, 0.0]; 2], vec![vec![1.0, 0.0]; 2]);
        let b = source_bounds(&src, &trivial).unwrap();
        let hs = shannon_entropy(sum_variable_pmf(&src).unwrap().mass());
        assert_eq!(b[1..], [0.0, 0.0, 0.0]);
        assert!((b[0] - hs).abs() < 1e-15);
    }

    #[test]
    fn full_descriptions() {
        let src = SourceModel::example1();
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = source_bounds(&src, &TestChannel::simple(id.clone(), id)).unwrap();
        let h12 = src.pmf().entropy(&[0, 1], &[]).unwrap();
        assert!(b[0].abs() < 1e-12);
        assert!((b[3] - h12).abs() < 1e-12);
    }

    #[test]
    fn example_source_region_contains_entropy_corner() {
        let r = source_region(&SourceModel::example1(), 2, &small_cfg(50)).unwrap();
        assert!(r.contains(&triple(0.03762237, 0.0, 0.0)));
        assert!(!r.contains(&triple(0.0376, 0.0, 0.0)));
    }

    #[test]
    fn missing_embedding_rejected() {
        let src = SourceModel::example1();
        let bare = SourceModel::new(src.pmf().clone(), src.function().to_vec(), None).unwrap();
        assert!(matches!(source_region(&bare, 2, &small_cfg(5)), Err(Error::Precondition(_))));
    }

    #[test]
    fn intersect_trivial_cases() {
        let origin = SampledRegion::up_set(&[[0.0; 3]], 1);
        let capped = SampledRegion::down_set(&[[1.0, 0.5, 0.5]], 1);
        let hit = regions_intersect(&origin, &capped).unwrap();
        assert_eq!(hit.witness, Some(triple(0.0, 0.0, 0.0)));
        let far = SampledRegion::up_set(&[[2.0, 0.0, 0.0]], 1);
        assert!(!regions_intersect(&far, &capped).unwrap().intersects);
        assert!(regions_intersect(&capped, &far).is_err());
    }

    #[test]
    fn csv_dump_has_stable_header() {
        let r = SampledRegion::down_set(&[[1.0, 0.0, 0.0]], 1);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("R,R1,R2,tag\n"));
        assert!(text.contains(",vertex\n") && text.contains(",hull\n"));
    }

    #[test]
    fn unstructured_on_constant_channel_fails() {
        let rho = DensityOperator::maximally_mixed(2);
        let n2 = Cq2Channel::from_fn(2, 2, |_, _| rho.clone()).unwrap();
        let t = unstructured_condition(&SourceModel::example1(), &n2, None, &OptimizerConfig::default()).unwrap();
        assert!(t.rhs.abs() < 1e-12);
        assert!(!t.holds);
    }

    #[test]
    fn structured_objective_at_uniform_inputs() {
        let states = example1_channel(0.0).unwrap().sum_states(2).unwrap();
        let v = structured_objective(&states, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((v - 0.737116).abs() < 1e-6);
    }

    #[test]
    fn structured_requires_sum_determined_channel() {
        let [s0, s1] = crate::cq::example1_base_states();
        let n2 = Cq2Channel::new(2, 2, vec![s0.clone(), s1.clone(), s0.clone(), s0]).unwrap();
        let r = structured_condition(&SourceModel::example1(), &n2, 2, None, &OptimizerConfig::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
