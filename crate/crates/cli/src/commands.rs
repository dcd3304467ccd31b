use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cqmac_core::classical::{embed_search, EmbedSearch, Embedding, SourceModel};
use cqmac_core::cq::{induce_cq4, ConditionalPmf, Cq2Channel};
use cqmac_core::ncc::{monte_carlo_error, SimConfig, SimReport};
use cqmac_core::optimizer::{LinearCost, OptimizerConfig};
use cqmac_core::regions::{
    channel_region, regions_intersect, source_region, structured_condition, unstructured_condition, RateTriple,
    SamplingConfig, SufficiencyTest,
};
use cqmac_core::simplex::uniform;
use cqmac_core::{Error, Result};
use serde::Serialize;

use crate::presets::{self, Family, FunctionSpec, SimSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_resource() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Creates `dir` and proves it writable before any computation starts.
pub fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(".cqmac-write-check");
    File::create(&probe).map_err(io_err(&probe))?;
    fs::remove_file(&probe).map_err(io_err(&probe))?;
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    write_file(path, |w| writeln!(w, "{text}"))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Noise grid `start, start + step, ..., stop`, validated to lie in `[0, 0.5]`.
pub fn eta_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    let ok = |x: f64| x.is_finite() && (0.0..=0.5).contains(&x);
    if !ok(start) || !ok(stop) || start > stop {
        return Err(Error::Validation(format!("eta grid [{start}, {stop}] must lie within [0, 0.5]")));
    }
    if start == stop {
        return Ok(vec![start]);
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Validation(format!("eta step {step} must be positive")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Round to kill accumulated drift so labels are stable.
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub lhs_bits: f64,
    pub rhs_bits: f64,
    pub verdict: bool,
}

/// Every grid interval where the verdict turns from true to false, located by
/// linear interpolation of `rhs - lhs`.
pub fn crossings(rows: &[SweepRow]) -> Vec<f64> {
    rows.windows(2)
        .filter(|w| w[0].verdict && !w[1].verdict)
        .map(|w| {
            let (d0, d1) = (w[0].rhs_bits - w[0].lhs_bits, w[1].rhs_bits - w[1].lhs_bits);
            let t = if d0 == d1 { 0.0 } else { d0 / (d0 - d1) };
            w[0].eta + t.clamp(0.0, 1.0) * (w[1].eta - w[0].eta)
        })
        .collect()
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    write_file(path, |w| {
        writeln!(w, "eta,lhs_bits,rhs_bits,verdict")?;
        for r in rows {
            writeln!(w, "{:.6},{:.10},{:.10},{}", r.eta, r.lhs_bits, r.rhs_bits, r.verdict)?;
        }
        Ok(())
    })
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    condition: &'static str,
    csv: String,
    details: String,
    cost_bound: Option<f64>,
    lhs_bits: f64,
    crossings: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    grid: Vec<f64>,
    sweeps: Vec<SweepSummary>,
}

/// One grid point with the maximizing input distributions.
#[derive(Debug, Serialize)]
struct SweepDetail {
    eta: f64,
    #[serde(flatten)]
    test: SufficiencyTest,
}

pub struct SweepArgs {
    pub grid: Vec<f64>,
    pub cost: Option<f64>,
    pub out_dir: PathBuf,
}

/// Runs both sufficiency sweeps, with the cost when one is given and always
/// without it, writing one CSV and one detail file per sweep.
pub fn example1_sweep(args: &SweepArgs) -> CliResult<String> {
    prepare_out_dir(&args.out_dir)?;
    let fam = Family::example1();
    let q = fam.source.embedding().map(|e| e.q).unwrap_or(2);
    let opt = OptimizerConfig::default();
    let mut variants = vec![args.cost];
    if args.cost.is_some() {
        variants.push(None);
    }
    let mut report = SweepReport { grid: args.grid.clone(), sweeps: Vec::new() };
    let mut summary = String::new();
    for bound in variants {
        let cost = bound.map(|b| LinearCost::new(fam.cost.weights.clone(), b));
        let suffix = if bound.is_none() && args.cost.is_some() { "_nocost" } else { "" };
        let mut unstructured = Vec::with_capacity(args.grid.len());
        let mut structured = Vec::with_capacity(args.grid.len());
        for &eta in &args.grid {
            let ch = fam.channel(eta)?;
            unstructured.push(SweepDetail { eta, test: unstructured_condition(&fam.source, &ch, cost.as_ref(), &opt)? });
            structured.push(SweepDetail { eta, test: structured_condition(&fam.source, &ch, q, cost.as_ref(), &opt)? });
        }
        for (condition, details) in [("unstructured", &unstructured), ("structured", &structured)] {
            let rows: Vec<SweepRow> = details
                .iter()
                .map(|d| SweepRow { eta: d.eta, lhs_bits: d.test.lhs, rhs_bits: d.test.rhs, verdict: d.test.holds })
                .collect();
            let csv = format!("{condition}{suffix}.csv");
            let detail_file = format!("{condition}{suffix}.json");
            write_sweep_csv(&args.out_dir.join(&csv), &rows)?;
            write_json(&args.out_dir.join(&detail_file), details)?;
            let found = crossings(&rows);
            let label = match bound {
                Some(b) => format!("{condition} (cost <= {b})"),
                None => format!("{condition} (no cost)"),
            };
            match found.first() {
                Some(c) => summary.push_str(&format!("{label} crossing at eta = {c:.4}\n")),
                None => summary.push_str(&format!("{label}: no crossing on the grid\n")),
            }
            report.sweeps.push(SweepSummary {
                condition,
                csv,
                details: detail_file,
                cost_bound: bound,
                lhs_bits: rows[0].lhs_bits,
                crossings: found,
            });
        }
    }
    write_json(&args.out_dir.join("summary.json"), &report)?;
    Ok(summary)
}

pub enum ChannelChoice {
    /// The preset noisy family at these noise levels.
    Family(Vec<f64>),
    Custom(Cq2Channel),
}

pub struct RegionsArgs {
    pub source: Option<SourceModel>,
    pub channel: ChannelChoice,
    pub cost: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub q_max: usize,
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct RegionVerdict {
    eta: Option<f64>,
    cost_bound: Option<f64>,
    channel_csv: String,
    channel_points: usize,
    intersects: bool,
    witness: Option<RateTriple>,
}

#[derive(Debug, Serialize)]
struct RegionsReport {
    q: usize,
    embedding: Embedding,
    samples: usize,
    seed: u64,
    source_csv: &'static str,
    source_points: usize,
    results: Vec<RegionVerdict>,
}

fn resolve_embedding(source: SourceModel, q_max: usize) -> Result<SourceModel> {
    if source.embedding().is_some() {
        return Ok(source);
    }
    match embed_search(source.function(), source.pmf(), q_max)? {
        EmbedSearch::Found(e) => source.with_embedding(e),
        EmbedSearch::NotFound { q_max } => {
            Err(Error::Precondition(format!("no field embedding found with q up to q_max = {q_max}")))
        }
    }
}

fn eta_label(eta: f64) -> String {
    format!("{eta:.4}")
}

pub fn regions(args: RegionsArgs) -> CliResult<String> {
    prepare_out_dir(&args.out_dir)?;
    let fam = Family::example1();
    let source = resolve_embedding(args.source.unwrap_or_else(|| fam.source.clone()), args.q_max)?;
    let embedding = source.embedding().expect("resolved above").clone();
    let q = embedding.q;
    let base = SamplingConfig { samples: args.samples, seed: args.seed, ..Default::default() };
    let src = source_region(&source, q, &base)?;
    write_file(&args.out_dir.join("source_region.csv"), |w| src.write_csv(w))?;

    let channels: Vec<(Option<f64>, Cq2Channel)> = match args.channel {
        ChannelChoice::Family(grid) => grid.iter().map(|&e| Ok((Some(e), fam.channel(e)?))).collect::<Result<_>>()?,
        ChannelChoice::Custom(ch) => vec![(None, ch)],
    };
    let mut variants = vec![args.cost];
    if args.cost.is_some() {
        variants.push(None);
    }
    let mut results = Vec::new();
    let mut summary = String::new();
    for (eta, ch) in &channels {
        // E[X1] with symbols read as integers.
        let weights: Vec<f64> = (0..ch.alphabet_sizes().0).map(|i| i as f64).collect();
        for &bound in &variants {
            let cost = bound.map(|b| LinearCost::new(weights.clone(), b));
            let cfg = SamplingConfig { cost, ..base.clone() };
            let region = channel_region(ch, q, &cfg)?;
            let stem = match eta {
                Some(e) => format!("channel_region_eta{}", eta_label(*e)),
                None => "channel_region".to_string(),
            };
            let csv = if bound.is_some() || variants.len() == 1 { format!("{stem}.csv") } else { format!("{stem}_nocost.csv") };
            write_file(&args.out_dir.join(&csv), |w| region.write_csv(w))?;
            let hit = if region.is_empty() {
                cqmac_core::regions::Intersection { intersects: false, witness: None }
            } else {
                regions_intersect(&src, &region)?
            };
            let label = eta.map_or_else(|| "custom channel".to_string(), |e| format!("eta = {}", eta_label(e)));
            let cost_label = bound.map_or_else(|| "no cost".to_string(), |b| format!("cost <= {b}"));
            match hit.witness {
                Some(w) => summary.push_str(&format!(
                    "{label}, {cost_label}: regions intersect, witness (R, R1, R2) = ({:.6}, {:.6}, {:.6})\n",
                    w.r, w.r1, w.r2
                )),
                None => summary.push_str(&format!("{label}, {cost_label}: no intersection found\n")),
            }
            results.push(RegionVerdict {
                eta: *eta,
                cost_bound: bound,
                channel_csv: csv,
                channel_points: region.points().len(),
                intersects: hit.intersects,
                witness: hit.witness,
            });
        }
    }
    let report = RegionsReport {
        q,
        embedding,
        samples: args.samples,
        seed: args.seed,
        source_csv: "source_region.csv",
        source_points: src.points().len(),
        results,
    };
    write_json(&args.out_dir.join("verdict.json"), &report)?;
    Ok(summary)
}

pub struct SimulateArgs {
    pub spec: SimSpec,
    /// Replace the spec's channel by the preset noisy family at this noise.
    pub eta: Option<f64>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub out_dir: PathBuf,
}

pub fn simulate(args: SimulateArgs) -> CliResult<String> {
    prepare_out_dir(&args.out_dir)?;
    let n2 = match (args.eta, args.spec.channel.clone()) {
        (Some(eta), _) => Family::example1().channel(eta)?,
        (None, Some(spec)) => spec.into_channel()?,
        (None, None) => return Err(Error::Validation("simulation needs a channel or --eta".into()).into()),
    };
    let (x1, x2) = n2.alphabet_sizes();
    if x1 != x2 {
        return Err(Error::Validation(format!("input alphabets {x1} and {x2} differ")).into());
    }
    let q = x1;
    let id = ConditionalPmf::deterministic(1, q, q, |_, v| v)?;
    let n4 = induce_cq4(&n2, &id, &id)?;
    let s = &args.spec;
    let cfg = SimConfig {
        n: s.n,
        k: s.k,
        l: s.l,
        l1: s.l1,
        l2: s.l2,
        q,
        delta: s.delta,
        trials: args.trials.unwrap_or(s.trials),
        seed: args.seed,
        full_rank: s.full_rank,
        p_v1: uniform(q),
        p_v2: uniform(q),
        p_u1: vec![1.0],
        p_u2: vec![1.0],
        prior: s.prior.clone(),
    };
    let report: SimReport = monte_carlo_error(&cfg, &n4)?;
    write_json(&args.out_dir.join("report.json"), &report)?;
    Ok(format!(
        "error rate {:.6} (95% CI [{:.6}, {:.6}]) over {} trials; exact average {:.6}\n",
        report.error_rate, report.ci_low, report.ci_high, report.trials, report.exact_error
    ))
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum EmbedReport {
    Found { found: bool, q: usize, h1: Vec<usize>, h2: Vec<usize>, g: Vec<usize> },
    NotFound { found: bool, q_max: usize },
}

pub struct EmbedArgs {
    pub table: FunctionSpec,
    pub q_max: usize,
    pub out_dir: Option<PathBuf>,
}

pub fn embed(args: EmbedArgs) -> CliResult<String> {
    if let Some(dir) = &args.out_dir {
        prepare_out_dir(dir)?;
    }
    let pmf = args.table.pmf()?;
    let report = match embed_search(&args.table.f, &pmf, args.q_max)? {
        EmbedSearch::Found(e) => EmbedReport::Found { found: true, q: e.q, h1: e.h1, h2: e.h2, g: e.g },
        EmbedSearch::NotFound { q_max } => EmbedReport::NotFound { found: false, q_max },
    };
    if let Some(dir) = &args.out_dir {
        write_json(&dir.join("embedding.json"), &report)?;
    }
    Ok(format!("{}\n", serde_json::to_string_pretty(&report).expect("plain data serializes")))
}

pub fn function_preset(name: &str) -> Option<&'static str> {
    match name {
        "or" => Some(presets::OR),
        "xor" => Some(presets::XOR),
        "injective3" => Some(presets::INJECTIVE3),
        _ => None,
    }
}

pub fn sim_preset(name: &str) -> Option<&'static str> {
    match name {
        "xor" => Some(presets::SIM_XOR),
        "depolarized" => Some(presets::SIM_DEPOLARIZED),
        _ => None,
    }
}

pub fn channel_preset(name: &str) -> Option<&'static str> {
    match name {
        "constant" => Some(presets::CONSTANT_CHANNEL),
        _ => None,
    }
}
