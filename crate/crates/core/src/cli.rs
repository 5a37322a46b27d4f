//! Command-line front end: `solve` on an instance file and `experiment` on a
//! config file.
//!
//! Exit codes: 0 on success, 2 when rate targets cannot be met, 1 for any
//! other error. Messages go to standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::parse_config;
use crate::error::{Error, Result};
use crate::experiments::{run_to_dir, ExperimentKind};
use crate::model::{Assignment, ChannelInstance, Codebook, SolverOptions};
use crate::oracle::{exhaustive_optimum, DEFAULT_LIMIT};
use crate::selection::{bound_pair_with, default_refinement};
use crate::solver::{MinRateTargets, Objective};

/// On-disk instance: linear SNRs `c[k]`, `p[j][k]` and optional `sr[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub c: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sr: Option<Vec<f64>>,
}

impl InstanceFile {
    pub fn from_instance(instance: &ChannelInstance) -> Self {
        Self {
            c: instance.direct().to_vec(),
            p: (0..instance.num_relays())
                .map(|j| instance.relay_row(j).to_vec())
                .collect(),
            sr: instance.source_relay().map(<[f64]>::to_vec),
        }
    }

    pub fn to_instance(&self) -> Result<ChannelInstance> {
        ChannelInstance::new(self.c.clone(), self.p.clone(), self.sr.clone())
    }
}

pub fn parse_instance(text: &str) -> Result<ChannelInstance> {
    serde_json::from_str::<InstanceFile>(text)?.to_instance()
}

pub fn read_instance(path: &Path) -> Result<ChannelInstance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Parser)]
#[command(
    name = "relaysel",
    version,
    about = "Relay selection and power allocation for relay-assisted downlinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bound the optimum of one instance and print the solution as JSON.
    Solve(SolveArgs),
    /// Run a Monte Carlo experiment and write CSV plus a JSON manifest.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Sum,
    #[value(name = "sum_min", alias = "sum-min")]
    SumMin,
    #[value(name = "max_min", alias = "max-min")]
    MaxMin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CodebookArg {
    Repetition,
    Independent,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON file with keys c, p and optional sr.
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "sum")]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "repetition")]
    codebook: CodebookArg,
    /// Per-user minimum rates for sum-min, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "min_rate")]
    targets: Option<Vec<f64>>,
    /// One minimum rate for every user (sum-min).
    #[arg(long)]
    min_rate: Option<f64>,
    /// Re-optimize power per relay after rounding.
    #[arg(long, conflicts_with = "no_refine")]
    refine: bool,
    #[arg(long)]
    no_refine: bool,
    /// Also search all assignments exhaustively.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = SolverOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iters)]
    max_iters: usize,
    /// Write the JSON here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// assumption-table, bound-tightness, cell-comparison or oracle-check.
    name: String,
    /// Flat key = value config; defaults apply to omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Add the exhaustive optimum to bound-tightness rows.
    #[arg(long)]
    oracle: bool,
    /// Use 3,000,000 samples for the assumption table.
    #[arg(long)]
    full: bool,
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    value: f64,
    assignment: Assignment,
    evaluated: u64,
}

#[derive(Debug, Serialize)]
struct SolveOutput {
    objective: &'static str,
    codebook: Codebook,
    upper: f64,
    lower: f64,
    gap: f64,
    certified: bool,
    kkt_residual: f64,
    iterations: usize,
    multi_relay_users: Vec<usize>,
    /// Relaxed allocation, one row per relay.
    alpha: Vec<Vec<f64>>,
    assignment: Assignment,
    /// Selection-feasible allocation behind `lower`.
    allocation: Vec<Vec<f64>>,
    rates: Vec<f64>,
    sum_rate: f64,
    min_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleOutput>,
}

fn solve(args: &SolveArgs) -> Result<String> {
    let instance = read_instance(&args.instance)?;
    let nk = instance.num_users();
    let objective = match args.objective {
        ObjectiveArg::Sum => Objective::SumRate,
        ObjectiveArg::MaxMin => Objective::MaxMin,
        ObjectiveArg::SumMin => {
            let r = match (&args.targets, args.min_rate) {
                (Some(t), _) => t.clone(),
                (None, Some(r)) => vec![r; nk],
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "sum-min needs --targets or --min-rate".into(),
                    ))
                }
            };
            let targets = MinRateTargets::new(r)?;
            targets.check_len(nk)?;
            Objective::SumRateMin(targets)
        }
    };
    let codebook = match args.codebook {
        CodebookArg::Repetition => Codebook::Repetition,
        CodebookArg::Independent => Codebook::Independent,
    };
    let options = SolverOptions {
        tol: args.tol,
        max_iters: args.max_iters,
        ..SolverOptions::default()
    };
    options.validate()?;
    let refine = if args.refine {
        true
    } else if args.no_refine {
        false
    } else {
        default_refinement(&objective)
    };
    let bounds = bound_pair_with(&instance, &objective, codebook, refine, &options)?;
    let oracle = if args.oracle {
        let o = exhaustive_optimum(&instance, &objective, codebook, DEFAULT_LIMIT)?;
        Some(OracleOutput {
            value: o.value,
            assignment: o.assignment,
            evaluated: o.evaluated,
        })
    } else {
        None
    };
    let out = SolveOutput {
        objective: objective.name(),
        codebook,
        upper: bounds.upper,
        lower: bounds.lower,
        gap: bounds.gap,
        certified: bounds.relaxed.certified,
        kkt_residual: bounds.relaxed.kkt_residual,
        iterations: bounds.relaxed.iterations,
        multi_relay_users: bounds.relaxed.multi_relay_users.clone(),
        alpha: bounds.relaxed.alpha.rows(),
        assignment: bounds.assignment,
        allocation: bounds.allocation.rows(),
        rates: bounds.rates.per_user.clone(),
        sum_rate: bounds.rates.sum_rate,
        min_rate: bounds.rates.min_rate,
        oracle,
    };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

fn experiment(args: &ExperimentArgs) -> Result<(PathBuf, PathBuf)> {
    let kind: ExperimentKind = args.name.parse()?;
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let (mut scenario, mut params) = parse_config(&text, kind)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if args.oracle {
        params.oracle = true;
    }
    if args.full {
        params.samples = 3_000_000;
    }
    run_to_dir(kind, &scenario, &params, args.threads, &args.out_dir)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_infeasible() {
        2
    } else {
        1
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => solve(args).and_then(|json| {
            match &args.output {
                Some(path) => std::fs::write(path, json)?,
                None => std::io::stdout().write_all(json.as_bytes())?,
            }
            Ok(())
        }),
        Command::Experiment(args) => experiment(args).map(|(csv, manifest)| {
            eprintln!("wrote {} and {}", csv.display(), manifest.display());
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
