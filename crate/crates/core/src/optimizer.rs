//! Derivative-free maximization over products of probability simplices:
//! a full grid scan followed by pairwise coordinate ascent with step halving.
//! The result is the best point found, not a certified global optimum.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simplex::check_simplex;

/// Linear constraint `sum_i weights[i] * p[i] <= bound` on the first simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearCost {
    pub weights: Vec<f64>,
    pub bound: f64,
}

impl LinearCost {
    pub fn new(weights: Vec<f64>, bound: f64) -> Self {
        Self { weights, bound }
    }

    /// `P(X = 1) <= bound` on a binary alphabet, i.e. `E[X] <= bound`.
    pub fn binary_mean(bound: f64) -> Self {
        Self::new(vec![0.0, 1.0], bound)
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.weights.iter().zip(p).map(|(w, x)| w * x).sum()
    }

    pub fn slack(&self, p: &[f64]) -> f64 {
        self.bound - self.value(p)
    }
}

/// Allowed violation when checking the cost of a candidate.
pub const COST_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Grid steps per unit for binary simplices.
    pub binary_steps: usize,
    /// Grid steps per unit for ternary simplices.
    pub ternary_steps: usize,
    /// Grid steps per unit for larger simplices.
    pub wide_steps: usize,
    /// Refinement stops once the move size falls below this.
    pub min_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            binary_steps: 200,
            ternary_steps: 40,
            wide_steps: 8,
            min_step: 1e-6,
        }
    }
}

impl OptimizerConfig {
    pub fn steps_for(&self, dim: usize) -> usize {
        match dim {
            2 => self.binary_steps,
            3 => self.ternary_steps,
            _ => self.wide_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeResult {
    pub argmax: Vec<Vec<f64>>,
    pub value: f64,
    pub evaluations: usize,
}

/// Every point of the simplex of dimension `dim` with coordinates in `(1/steps) Z`,
/// in lexicographic order.
pub fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| k as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(dim, left - k, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, steps, steps, &mut Vec::with_capacity(dim), &mut out);
    out
}

fn check_inputs(dims: &[usize], cost: Option<&LinearCost>) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::Precondition(format!("simplex dimensions {dims:?} must all be at least 2")));
    }
    if let Some(c) = cost {
        if c.weights.len() != dims[0] {
            return Err(Error::DimensionMismatch { expected: dims[0], got: c.weights.len() });
        }
        let cheapest = c.weights.iter().copied().fold(f64::INFINITY, f64::min);
        if !(c.bound >= cheapest) {
            return Err(Error::Precondition(format!(
                "cost bound {} is infeasible (cheapest vertex costs {cheapest})",
                c.bound
            )));
        }
    }
    Ok(())
}

fn feasible(point: &[Vec<f64>], cost: Option<&LinearCost>) -> bool {
    cost.map_or(true, |c| c.slack(&point[0]) >= -COST_TOL)
}

/// Higher value wins; equal values go to the lexicographically smaller point.
fn better(a: (f64, &[Vec<f64>]), b: (f64, &[Vec<f64>])) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => lex_cmp(a.1, b.1) == Ordering::Less,
        _ => b.0.is_nan() && !a.0.is_nan(),
    }
}

fn lex_cmp(a: &[Vec<f64>], b: &[Vec<f64>]) -> Ordering {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Maximizes `objective` over the product of simplices of the given
/// dimensions, subject to an optional cost on the first simplex.
pub fn maximize<F>(objective: F, dims: &[usize], cost: Option<&LinearCost>, cfg: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: Fn(&[Vec<f64>]) -> Result<f64> + Sync,
{
    check_inputs(dims, cost)?;
    let grids: Vec<Vec<Vec<f64>>> = dims.iter().map(|&d| simplex_grid(d, cfg.steps_for(d))).collect();
    let first: Vec<&Vec<f64>> = grids[0].iter().filter(|p| cost.map_or(true, |c| c.slack(p) >= -COST_TOL)).collect();
    let total: usize = first.len() * grids[1..].iter().map(|g| g.len()).product::<usize>();
    let best = (0..total)
        .into_par_iter()
        .map(|flat| {
            let point = grid_point(flat, &first, &grids[1..]);
            let v = objective(&point)?;
            Ok((v, point))
        })
        .try_reduce_with(|a, b| Ok(if better((b.0, &b.1), (a.0, &a.1)) { b } else { a }))
        .transpose()?
        .ok_or_else(|| Error::Precondition("empty search grid".into()))?;
    let start_step = 1.0 / dims.iter().map(|&d| cfg.steps_for(d)).max().unwrap_or(1) as f64;
    let mut out = refine_from(&objective, best.1, best.0, cost, start_step, cfg.min_step)?;
    out.evaluations += total;
    Ok(out)
}

fn grid_point(mut flat: usize, first: &[&Vec<f64>], rest: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let mut tail = Vec::with_capacity(rest.len());
    for g in rest.iter().rev() {
        tail.push(g[flat % g.len()].clone());
        flat /= g.len();
    }
    let mut point = vec![first[flat].clone()];
    point.extend(tail.into_iter().rev());
    point
}

/// Coordinate ascent from `start`, moving mass between pairs of coordinates
/// with step halving from `start_step` down to `min_step`.
pub fn refine<F>(objective: F, start: Vec<Vec<f64>>, cost: Option<&LinearCost>, start_step: f64, min_step: f64) -> Result<OptimizeResult>
where
    F: Fn(&[Vec<f64>]) -> Result<f64>,
{
    let dims: Vec<usize> = start.iter().map(|p| p.len()).collect();
    check_inputs(&dims, cost)?;
    for p in &start {
        check_simplex(p, "refinement start")?;
    }
    if !feasible(&start, cost) {
        return Err(Error::Precondition("refinement start violates the cost".into()));
    }
    let v = objective(&start)?;
    let mut out = refine_from(&objective, start, v, cost, start_step, min_step)?;
    out.evaluations += 1;
    Ok(out)
}

fn refine_from<F>(
    objective: &F,
    mut point: Vec<Vec<f64>>,
    mut value: f64,
    cost: Option<&LinearCost>,
    start_step: f64,
    min_step: f64,
) -> Result<OptimizeResult>
where
    F: Fn(&[Vec<f64>]) -> Result<f64>,
{
    let mut evaluations = 0;
    let mut step = start_step;
    while step >= min_step {
        let mut improved = false;
        for s in 0..point.len() {
            let d = point[s].len();
            for i in 0..d {
                for j in 0..d {
                    if i == j || point[s][j] <= 0.0 {
                        continue;
                    }
                    let mut delta = step.min(point[s][j]);
                    if s == 0 {
                        if let Some(c) = cost {
                            let rise = c.weights[i] - c.weights[j];
                            if rise > 0.0 {
                                delta = delta.min(c.slack(&point[0]).max(0.0) / rise);
                            }
                        }
                    }
                    if delta <= 0.0 {
                        continue;
                    }
                    let mut cand = point.clone();
                    cand[s][i] += delta;
                    cand[s][j] = (cand[s][j] - delta).max(0.0);
                    let v = objective(&cand)?;
                    evaluations += 1;
                    if v > value {
                        point = cand;
                        value = v;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(OptimizeResult { argmax: point, value, evaluations })
}
