//! `mppivs` runs single scenarios, seeded suites and the numerical oracles.
//!
//! Exit status is 0 on success, 1 on configuration or usage errors and 2 when
//! a task ran to completion but failed its success criteria.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mppivs::harness::{suite_from_template, SamplingBox};
use mppivs::io::{load_scenario, write_summary, write_task_outputs};
use mppivs::oracle::{run_oracle, ORACLE_NAMES};
use mppivs::{presets, run_suite, run_task, Error, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "mppivs", version, about = "MPPI visual servoing scenarios, suites and oracle checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its trajectory CSV and result JSON.
    Run(RunArgs),
    /// Run a preset or a scenario file over seeded initial poses.
    Suite(SuiteArgs),
    /// Run a named numerical oracle and report its largest error.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed override.
    #[arg(long, env = "MPPIVS_SEED")]
    seed: Option<u64>,
    /// Worker threads; defaults to every core.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Preset name, test1 to test28.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    test: Option<String>,
    /// Scenario file used as the per-task template.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of sampled initial poses.
    #[arg(long, default_value_t = 20)]
    tasks: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// One of finite-diff, pinv-axioms, mppi-toy, depth-integration, rotation-round-trip.
    name: String,
    #[arg(long, env = "MPPIVS_SEED", default_value_t = 1)]
    seed: u64,
}

enum Failure {
    Config(String),
    Task(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => with_pool(args.common.parallel, || cmd_run(&args)),
        Command::Suite(args) => with_pool(args.common.parallel, || cmd_suite(&args)),
        Command::Oracle(args) => cmd_oracle(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Task(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn with_pool(threads: Option<usize>, f: impl FnOnce() -> Result<(), Failure> + Send) -> Result<(), Failure> {
    match threads {
        None => f(),
        Some(0) => Err(Failure::Config("invalid configuration `parallel`: must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load_scenario(&args.config)?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    let result = run_task(&cfg)?;
    let stem = file_stem(&cfg, &args.config);
    write_task_outputs(&args.common.out, &stem, &result)?;
    println!(
        "{}: success={} r_lm={} r_jl={} p_out={} convergence_time={}",
        stem,
        result.success,
        result.r_lm,
        result.r_jl,
        result.p_out,
        result.convergence_time.map_or("none".to_string(), |t| format!("{t:.2}"))
    );
    if result.success {
        Ok(())
    } else {
        Err(Failure::Task(format!("{stem}: task did not meet the success criteria")))
    }
}

fn file_stem(cfg: &ScenarioConfig, path: &Path) -> String {
    if !cfg.name.is_empty() {
        return cfg.name.replace(['/', '#', ' '], "_");
    }
    path.file_stem().map_or("task".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_suite(args: &SuiteArgs) -> Result<(), Failure> {
    let template = match (&args.test, &args.config) {
        (Some(name), _) => presets::preset(name)?,
        (None, Some(path)) => load_scenario(path)?,
        (None, None) => unreachable!("clap requires one of --test and --config"),
    };
    if args.tasks == 0 {
        return Err(Failure::Config("invalid configuration `tasks`: must be at least 1".into()));
    }
    let seed = args.common.seed.unwrap_or(template.seed);
    let configs = suite_from_template(&template, args.tasks, seed, &SamplingBox::default())?;
    let name = if template.name.is_empty() { "suite".to_string() } else { template.name.clone() };
    let (results, summary) = run_suite(&name, &configs)?;
    let out = &args.common.out;
    for (i, r) in results.iter().enumerate() {
        write_task_outputs(out, &format!("task_{:03}", i + 1), r)?;
    }
    write_summary(&out.join("summary.json"), &summary)?;
    println!(
        "{}: {}/{} succeeded (S_rate {:.1}%), R_LM {}, P_out {}, R_JL {}",
        summary.name, summary.n_success, summary.tasks, summary.s_rate, summary.r_lm, summary.p_out, summary.r_jl
    );
    if summary.n_success == summary.tasks {
        Ok(())
    } else {
        Err(Failure::Task(format!("{}: {} task(s) failed", summary.name, summary.tasks - summary.n_success)))
    }
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), Failure> {
    let reports = run_oracle(&args.name, args.seed).ok_or_else(|| {
        Failure::Config(format!("unknown oracle `{}`; known oracles: {}", args.name, ORACLE_NAMES.join(", ")))
    })?;
    let mut all = true;
    for r in &reports {
        all &= r.passed;
        println!(
            "{} {}: max error {:.3e} (bound {:.0e}, {})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.max_error,
            r.bound,
            r.detail
        );
    }
    if all {
        Ok(())
    } else {
        Err(Failure::Task(format!("oracle `{}` failed", args.name)))
    }
}
