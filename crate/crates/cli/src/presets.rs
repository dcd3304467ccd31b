//! Built-in spec files shipped with the binary.

use cqmac_core::classical::{JointPmf, SourceModel, SourceSpec};
use cqmac_core::cq::{ChannelSpec, Cq2Channel};
use cqmac_core::hermitian::{mix, ComplexMatrix, DensityOperator};
use cqmac_core::optimizer::LinearCost;
use cqmac_core::{Error, Result};
use serde::Deserialize;

pub const EXAMPLE1: &str = include_str!("../presets/example1.json");
pub const OR: &str = include_str!("../presets/or.json");
pub const XOR: &str = include_str!("../presets/xor.json");
pub const INJECTIVE3: &str = include_str!("../presets/injective3.json");
pub const CONSTANT_CHANNEL: &str = include_str!("../presets/constant_channel.json");
pub const SIM_XOR: &str = include_str!("../presets/sim_xor.json");
pub const SIM_DEPOLARIZED: &str = include_str!("../presets/sim_depolarized.json");

fn parse<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub weights: Vec<f64>,
    pub bound: f64,
}

/// Source, base states of the noisy channel family, and input cost.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub source: SourceSpec,
    /// Two states; the channel at noise `eta` sends `x1 xor x2 = x` to
    /// `(1 - eta) s_x + eta s_{1-x}`.
    pub base_states: Vec<Vec<Vec<[f64; 2]>>>,
    pub cost: CostSpec,
}

pub struct Family {
    pub source: SourceModel,
    pub base: [DensityOperator; 2],
    pub cost: LinearCost,
}

impl Family {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: FamilySpec = parse(text, "channel family")?;
        let source = spec.source.into_model()?;
        if spec.base_states.len() != 2 {
            return Err(Error::Validation(format!("expected 2 base states, got {}", spec.base_states.len())));
        }
        let states = spec
            .base_states
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let data = m.iter().flatten().map(|&[re, im]| num_complex::Complex64::new(re, im)).collect();
                ComplexMatrix::new(data)
                    .and_then(DensityOperator::new)
                    .map_err(|e| Error::Validation(format!("base state {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let [s0, s1]: [DensityOperator; 2] = states.try_into().expect("length checked");
        let cost = LinearCost::new(spec.cost.weights, spec.cost.bound);
        Ok(Self { source, base: [s0, s1], cost })
    }

    pub fn example1() -> Self {
        Self::from_json_str(EXAMPLE1).expect("built-in preset is valid")
    }

    pub fn channel(&self, eta: f64) -> Result<Cq2Channel> {
        if !(0.0..=0.5).contains(&eta) {
            return Err(Error::Validation(format!("eta = {eta} outside [0, 0.5]")));
        }
        let rho0 = mix(&[1.0 - eta, eta], &self.base)?;
        let rho1 = mix(&[eta, 1.0 - eta], &self.base)?;
        Cq2Channel::from_fn(2, 2, |a, b| if a ^ b == 0 { rho0.clone() } else { rho1.clone() })
    }
}

/// Function table for embedding searches; the PMF defaults to uniform.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub s1: usize,
    pub s2: usize,
    pub f: Vec<Vec<usize>>,
    #[serde(default)]
    pub pmf: Option<Vec<Vec<f64>>>,
}

impl FunctionSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        parse(text, "function table")
    }

    pub fn pmf(&self) -> Result<JointPmf> {
        if self.s1 == 0 || self.s2 == 0 {
            return Err(Error::Validation("alphabets must be nonempty".into()));
        }
        if self.f.len() != self.s1 {
            return Err(Error::Parse(format!("function table has {} rows, expected {}", self.f.len(), self.s1)));
        }
        if let Some(i) = self.f.iter().position(|r| r.len() != self.s2) {
            return Err(Error::Parse(format!("function table row {i} has wrong length")));
        }
        let mass = match &self.pmf {
            Some(rows) => {
                if rows.len() != self.s1 || rows.iter().any(|r| r.len() != self.s2) {
                    return Err(Error::Parse("pmf does not match the alphabets".into()));
                }
                rows.concat()
            }
            None => vec![1.0 / (self.s1 * self.s2) as f64; self.s1 * self.s2],
        };
        JointPmf::new(vec![self.s1, self.s2], mass)
    }
}

/// Simulation file: channel with trivial auxiliaries plus code sizes.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    #[serde(default = "one")]
    pub l1: usize,
    #[serde(default = "one")]
    pub l2: usize,
    pub delta: f64,
    pub trials: usize,
    #[serde(default = "yes")]
    pub full_rank: bool,
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl SimSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        parse(text, "simulation config")
    }
}

pub fn channel_from_json(text: &str) -> Result<Cq2Channel> {
    Cq2Channel::from_json_str(text)
}

pub fn source_from_json(text: &str) -> Result<SourceModel> {
    SourceModel::from_json_str(text)
}
