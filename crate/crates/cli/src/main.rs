mod commands;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cqmac_core::Error;

use commands::{ChannelChoice, CliError, CliResult, EmbedArgs, RegionsArgs, SimulateArgs, SweepArgs};
use presets::{Family, FunctionSpec, SimSpec};

#[derive(Parser, Debug)]
#[command(name = "cqmac", version, about = "Rate regions and coding simulations for computing functions over classical-quantum multiple access channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Grid {
    #[arg(long, default_value_t = 0.0)]
    eta_start: f64,
    #[arg(long, default_value_t = 0.5)]
    eta_stop: f64,
    #[arg(long, default_value_t = 0.01)]
    eta_step: f64,
}

#[derive(Args, Debug)]
struct CostArgs {
    /// Bound on E[X1]; defaults to the preset value.
    #[arg(long)]
    cost: Option<f64>,
    /// Drop the input cost entirely.
    #[arg(long, conflicts_with = "cost")]
    no_cost: bool,
}

impl CostArgs {
    fn resolve(&self, preset: Option<f64>) -> Option<f64> {
        if self.no_cost {
            None
        } else {
            self.cost.or(preset)
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the noise parameter of the preset channel and decide both sufficiency conditions.
    Example1Sweep {
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Sample the source and channel rate regions and test them for overlap.
    Regions {
        #[arg(long, default_value_t = 0.20)]
        eta_start: f64,
        #[arg(long, default_value_t = 0.25)]
        eta_stop: f64,
        #[arg(long, default_value_t = 0.05)]
        eta_step: f64,
        /// Source spec file; defaults to the preset source.
        #[arg(long)]
        source: Option<PathBuf>,
        /// Channel spec file or built-in name (`constant`); replaces the noise grid.
        #[arg(long)]
        channel: Option<String>,
        #[command(flatten)]
        cost: CostArgs,
        /// Random draws per region on top of the structured grid.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest field size tried when the source carries no embedding.
        #[arg(long, default_value_t = 31)]
        q: usize,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Monte Carlo error of a nested coset code with a square-root decoder.
    Simulate {
        /// Built-in configuration (`xor`, `depolarized`).
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Simulation config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the preset noisy channel at this noise level.
        #[arg(long)]
        eta: Option<f64>,
        /// Number of Monte Carlo trials; overrides the config.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Search for a prime-field embedding of a two-argument function.
    Embed {
        /// Built-in function table (`or`, `xor`, `injective3`).
        #[arg(long, conflicts_with = "function")]
        preset: Option<String>,
        /// Function table file.
        #[arg(long)]
        function: Option<PathBuf>,
        /// Largest field size tried.
        #[arg(long, default_value_t = 7)]
        q: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn unknown(kind: &str, name: &str) -> CliError {
    Error::Validation(format!("unknown {kind} preset `{name}`")).into()
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Example1Sweep { grid, cost, out_dir } => {
            let grid = commands::eta_grid(grid.eta_start, grid.eta_stop, grid.eta_step)?;
            let cost = cost.resolve(Some(Family::example1().cost.bound));
            commands::example1_sweep(&SweepArgs { grid, cost, out_dir })
        }
        Command::Regions { eta_start, eta_stop, eta_step, source, channel, cost, samples, seed, q, out_dir } => {
            if samples == 0 {
                return Err(Error::Validation("--samples must be at least 1".into()).into());
            }
            let source = match source {
                Some(p) => Some(presets::source_from_json(&commands::read_text(&p)?)?),
                None => None,
            };
            let (channel, preset_cost) = match channel {
                Some(name) => {
                    let text = match commands::channel_preset(&name) {
                        Some(t) => t.to_string(),
                        None => commands::read_text(&PathBuf::from(&name))?,
                    };
                    (ChannelChoice::Custom(presets::channel_from_json(&text)?), None)
                }
                None => (
                    ChannelChoice::Family(commands::eta_grid(eta_start, eta_stop, eta_step)?),
                    Some(Family::example1().cost.bound),
                ),
            };
            let cost = cost.resolve(preset_cost);
            commands::regions(RegionsArgs { source, channel, cost, samples, seed, q_max: q, out_dir })
        }
        Command::Simulate { preset, config, eta, samples, seed, out_dir } => {
            let text = match (preset, config) {
                (Some(name), _) => commands::sim_preset(&name).ok_or_else(|| unknown("simulation", &name))?.to_string(),
                (None, Some(p)) => commands::read_text(&p)?,
                (None, None) => presets::SIM_XOR.to_string(),
            };
            if samples == Some(0) {
                return Err(Error::Validation("--samples must be at least 1".into()).into());
            }
            let spec = SimSpec::from_json_str(&text)?;
            commands::simulate(SimulateArgs { spec, eta, seed, trials: samples, out_dir })
        }
        Command::Embed { preset, function, q, out_dir } => {
            let text = match (preset, function) {
                (Some(name), _) => commands::function_preset(&name).ok_or_else(|| unknown("function", &name))?.to_string(),
                (None, Some(p)) => commands::read_text(&p)?,
                (None, None) => return Err(Error::Validation("give --preset or --function".into()).into()),
            };
            let table = FunctionSpec::from_json_str(&text)?;
            commands::embed(EmbedArgs { table, q_max: q, out_dir })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
