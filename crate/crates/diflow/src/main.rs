//! Batch CLI: ingest instance files, dispatch computations, persist
//! results.
//!
//! Exit codes: 0 success, 2 instance parse failure, 3 invariant violation
//! in the input, 4 solver non-convergence (best iterate still written),
//! 5 property violations.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use diflow::format::{
    bits_value, build_instance, kernel_table, parse_instance, property_reports_csv,
    property_reports_json, report_json, reports_csv, solve_json, validate_instance, InstanceFile,
};
use diflow::{
    brute_force_capacity, brute_force_nrdf, di_cmi_sum, di_divergence, di_logratio, di_reverse,
    feedback_capacity, gap_a, lambda_max_deviation, nrdf, objective_a, objective_b, optimal_nu,
    optimal_reverse_decomposition, reciprocity_check, run_all_checks, DistortionSpec, Error,
    ForwardChannel, InputPolicy, PowerSpec, SamplerBounds, SolverConfig,
};

#[derive(Parser)]
#[command(name = "diflow", version, about = "Directed information on finite alphabets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Directed information by all three routes, per step and total.
    Compute(RunArgs),
    /// Reverse (feedback) directed information.
    Reverse(RunArgs),
    /// Variational achiever diagnostics for both bounds.
    Variational(RunArgs),
    /// Feedback capacity by alternating optimization.
    Capacity(RunArgs),
    /// Nonanticipative rate distortion by alternating optimization.
    Rdf(RunArgs),
    /// Randomized property suites.
    Properties(RunArgs),
    /// Brute-force grid oracle (capacity, or rate distortion when a
    /// distortion budget is given).
    Oracle(RunArgs),
    /// List every violated instance-file invariant.
    Validate(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file (JSON).
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// RNG seed; the DIFLOW_SEED environment variable applies when the
    /// flag is absent.
    #[arg(long, env = "DIFLOW_SEED", default_value_t = 0)]
    seed: u64,
    /// Trials per property suite.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Solver iteration cap.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Solver relative tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Simplex grid resolution for the oracles.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Average distortion budget (selects the rate-distortion oracle).
    #[arg(long)]
    distortion_budget: Option<f64>,
    /// Average input power budget.
    #[arg(long)]
    power_budget: Option<f64>,
}

impl RunArgs {
    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            rel_tol: self.tol,
            grid_resolution: self.grid,
            seed: self.seed,
        }
    }
}

const EXIT_PARSE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_NONCONVERGED: u8 = 4;
const EXIT_VIOLATIONS: u8 = 5;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Format(_) => EXIT_PARSE,
                _ => EXIT_INVARIANT,
            })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}

enum Failure {
    Lib(Error),
    Io(std::io::Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Compute(args) => {
            let (_, policy, channel) = load(&args)?;
            let reports = vec![
                di_cmi_sum(&policy, &channel)?,
                di_divergence(&policy, &channel)?,
                di_logratio(&policy, &channel)?,
            ];
            let text = match args.format {
                Format::Json => pretty(&serde_json::Value::Array(
                    reports.iter().map(report_json).collect(),
                )),
                Format::Csv => reports_csv(&reports),
            };
            write_output(&args, &text)?;
            Ok(0)
        }
        Command::Reverse(args) => {
            let (_, policy, channel) = load(&args)?;
            let report = di_reverse(&policy, &channel)?;
            let text = match args.format {
                Format::Json => pretty(&report_json(&report)),
                Format::Csv => reports_csv(std::slice::from_ref(&report)),
            };
            write_output(&args, &text)?;
            Ok(0)
        }
        Command::Variational(args) => {
            let (_, policy, channel) = load(&args)?;
            let di = di_cmi_sum(&policy, &channel)?.total_bits;
            let nu = optimal_nu(&policy, &channel)?;
            let a_at_achiever = objective_a(&policy, &channel, &nu)?;
            let gap_at_achiever = gap_a(&policy, &channel, &nu)?;
            let sr = optimal_reverse_decomposition(&policy, &channel)?;
            let b_at_achiever = objective_b(&policy, &channel, &sr)?;
            let lambda_dev = lambda_max_deviation(&policy, &channel, &sr)?;
            let reciprocity = reciprocity_check(&policy, &channel, &sr)?;
            // The achiever decomposition ships in the kernel-table dialect:
            // s rows are indexed by the interleaved (x^{i-1}, y^{i-1})
            // history, r rows by that history extended with y_i.
            let value = json!({
                "di_bits": bits_value(di),
                "objective_a_at_achiever": bits_value(a_at_achiever),
                "gap_a_at_achiever": bits_value(gap_at_achiever),
                "objective_b_at_achiever": bits_value(b_at_achiever),
                "lambda_max_deviation": bits_value(lambda_dev),
                "reciprocity_max_deviation": bits_value(reciprocity.max_abs_deviation),
                "reciprocity_holds": reciprocity.holds,
                "optimal_nu": nu.mass(),
                "s_kernels": kernel_table(sr.s_kernels()),
                "r_kernels": kernel_table(sr.r_kernels()),
            });
            write_output(&args, &pretty(&value))?;
            Ok(0)
        }
        Command::Capacity(args) => {
            let (file, _, channel) = load(&args)?;
            let power = power_spec(&file, &channel, args.power_budget)?;
            let (result, policy) =
                feedback_capacity(&channel, &args.solver_config(), power.as_ref())?;
            let text = pretty(&solve_json(&result, &kernel_table(policy.kernels())));
            write_output(&args, &text)?;
            Ok(if result.converged { 0 } else { EXIT_NONCONVERGED })
        }
        Command::Rdf(args) => {
            let (file, source, _) = load(&args)?;
            let budget = args
                .distortion_budget
                .ok_or_else(|| Failure::Usage("rdf requires --distortion-budget".to_string()))?;
            let dist = distortion_spec(&file, &source, budget)?;
            let (result, channel) = nrdf(&source, &dist, &args.solver_config())?;
            let text = pretty(&solve_json(&result, &kernel_table(channel.kernels())));
            write_output(&args, &text)?;
            Ok(if result.converged { 0 } else { EXIT_NONCONVERGED })
        }
        Command::Properties(args) => {
            let bounds = SamplerBounds::default();
            let reports = if args.trials == 0 {
                Vec::new()
            } else {
                run_all_checks(&bounds, args.trials, args.seed)
            };
            let text = match args.format {
                Format::Json => pretty(&property_reports_json(&reports)),
                Format::Csv => property_reports_csv(&reports),
            };
            write_output(&args, &text)?;
            let violated = reports.iter().any(|r| r.violations > 0);
            Ok(if violated { EXIT_VIOLATIONS } else { 0 })
        }
        Command::Oracle(args) => {
            let (file, source, channel) = load(&args)?;
            let (kind, value) = match args.distortion_budget {
                Some(budget) => {
                    let dist = distortion_spec(&file, &source, budget)?;
                    ("nrdf", brute_force_nrdf(&source, &dist, args.grid)?)
                }
                None => ("capacity", brute_force_capacity(&channel, args.grid)?),
            };
            let text = pretty(&json!({
                "kind": kind,
                "grid": args.grid,
                "value_bits": bits_value(value),
            }));
            write_output(&args, &text)?;
            Ok(0)
        }
        Command::Validate(args) => {
            let path = require_instance(&args)?;
            let text = fs::read_to_string(path)?;
            let file = parse_instance(&text)?;
            let diagnostics = validate_instance(&file);
            let value = serde_json::Value::Array(diagnostics.iter().map(|d| json!(d)).collect());
            write_output(&args, &pretty(&value))?;
            Ok(if diagnostics.is_empty() { 0 } else { EXIT_INVARIANT })
        }
    }
}

fn require_instance(args: &RunArgs) -> Result<&PathBuf, Failure> {
    args.instance
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command requires --instance".to_string()))
}

fn load(args: &RunArgs) -> Result<(InstanceFile, InputPolicy, ForwardChannel), Failure> {
    let path = require_instance(args)?;
    let text = fs::read_to_string(path)?;
    let file = parse_instance(&text)?;
    let (_, policy, channel) = build_instance(&file)?;
    Ok((file, policy, channel))
}

fn distortion_spec(
    file: &InstanceFile,
    source: &InputPolicy,
    budget: f64,
) -> Result<DistortionSpec, Failure> {
    let spec = source.spec();
    Ok(match &file.distortion {
        Some(tables) => DistortionSpec::new(spec, tables.clone(), budget)?,
        None => DistortionSpec::hamming(spec, budget)?,
    })
}

fn power_spec(
    file: &InstanceFile,
    channel: &ForwardChannel,
    budget: Option<f64>,
) -> Result<Option<PowerSpec>, Failure> {
    let Some(budget) = budget else {
        return Ok(None);
    };
    let spec = channel.spec();
    let costs = match &file.cost {
        Some(costs) => costs.clone(),
        None => spec.x_sizes().iter().map(|&k| vec![0.0; k]).collect(),
    };
    Ok(Some(PowerSpec::new(spec, costs, budget)?))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value is serializable");
    text.push('\n');
    text
}

fn write_output(args: &RunArgs, text: &str) -> std::io::Result<()> {
    match &args.out {
        Some(path) => fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
