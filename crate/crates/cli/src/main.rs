use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lcr_fista::io::{load_problem, save_problem};
use lcr_fista::lasso::generate;
use lcr_fista::oracle::oracle_fstar;
use lcr_fista::{solve, RestartRun};
use lcr_fista_cli::config::{ConfigError, ExperimentConfig, FamilyKind, SchemeKind};
use lcr_fista_cli::export::{iteration_table, lcr_nj_table, restart_table, TraceFormat};
use lcr_fista_cli::{run_experiment, verify_bounds};

#[derive(Parser)]
#[command(name = "lcr-fista", version, about = "Restart FISTA experiments on randomized weighted Lasso families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every selected scheme over a family of random instances.
    Run(RunArgs),
    /// Write one random instance to a problem file.
    Gen(GenArgs),
    /// Run one scheme on a problem file.
    Solve(SolveArgs),
    /// Check convergence bounds against the output of `run`.
    Verify(VerifyArgs),
}

#[derive(Args, Default)]
struct InstanceArgs {
    #[arg(long)]
    family: Option<FamilyKind>,
    /// N, rows of A.
    #[arg(long)]
    rows: Option<usize>,
    /// n, columns of A.
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sparsity: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    oracle_eps: Option<f64>,
    /// Comma-separated subset of none,func,grad,opt,lcr.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<SchemeKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Check ‖g(r_j)‖_* only between restarts instead of at every iteration.
    #[arg(long)]
    strict_exit: bool,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    /// Skip the per-trial trace files.
    #[arg(long)]
    no_traces: bool,
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Problem file to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file written by `gen`.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value = "lcr")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 1e-11)]
    eps: f64,
    /// Accuracy of the f* oracle used by the `opt` scheme when --f-star is absent.
    #[arg(long, default_value_t = 1e-12)]
    oracle_eps: f64,
    #[arg(long)]
    f_star: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    strict_exit: bool,
    #[arg(long, default_value_t = 0)]
    k_min: usize,
    #[arg(long, default_value_t = lcr_fista::fista::DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value = "csv")]
    format: TraceFormat,
}

#[derive(Args)]
struct VerifyArgs {
    /// Output directory of a previous `run`.
    #[arg(long)]
    out: PathBuf,
}

fn base_config(path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn apply_instance(cfg: &mut ExperimentConfig, args: &InstanceArgs) {
    if let Some(v) = args.family {
        cfg.family = v;
        if v == FamilyKind::LeastSquares && args.alpha.is_none() {
            cfg.alpha = 0.0;
        }
    }
    if let Some(v) = args.rows {
        cfg.rows = v;
    }
    if let Some(v) = args.cols {
        cfg.cols = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.sparsity {
        cfg.sparsity = v;
    }
}

fn run_config(args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = base_config(args.config.as_deref())?;
    apply_instance(&mut cfg, &args.instance);
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.eps {
        cfg.epsilon = v;
    }
    if let Some(v) = args.oracle_eps {
        cfg.oracle_epsilon = v;
    }
    if !args.scheme.is_empty() {
        cfg.schemes = args.scheme.clone();
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    if args.strict_exit {
        cfg.strict_exit = true;
    }
    if let Some(v) = args.k_min {
        cfg.k_min = v;
    }
    if let Some(v) = args.budget {
        cfg.budget = v;
    }
    if args.no_traces {
        cfg.traces = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config_error(e: ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = match run_config(&args) {
        Ok(c) => c,
        Err(e) => return Ok(config_error(e)),
    };
    let report = run_experiment(&cfg)?;
    print!("{}", report.stats_text());
    println!("results written to {}", cfg.out.display());
    let invalid = report.invalid_trials();
    if invalid.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for t in report.trials.iter().filter(|t| !t.is_valid()) {
            let reason = match &t.oracle {
                Err(e) => format!("oracle: {e}"),
                Ok(_) if !t.errors.is_empty() => t.errors.join("; "),
                Ok(_) => "a scheme exhausted its budget".into(),
            };
            eprintln!("invalid trial {} (seed {}): {reason}", t.trial, t.seed);
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = match base_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return Ok(config_error(e)),
    };
    apply_instance(&mut cfg, &args.instance);
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    let instance = match generate(cfg.spec_for_trial(0), cfg.family.into()) {
        Ok(i) => i,
        Err(e) => return Ok(config_error(ConfigError::Invalid(e.to_string()))),
    };
    save_problem(&args.out, &instance).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {}x{} instance with {} nonzeros to {}",
        instance.matrix().rows(),
        instance.matrix().cols(),
        instance.matrix().nnz(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<ExitCode> {
    let instance = load_problem(&args.problem)
        .with_context(|| format!("reading {}", args.problem.display()))?;
    let problem = instance.problem();
    let f_star = match (args.scheme, args.f_star) {
        (_, Some(f)) => Some(f),
        (SchemeKind::Opt, None) => Some(oracle_fstar(problem, args.oracle_eps)?.f_star),
        _ => None,
    };
    let run = RestartRun {
        scheme: args.scheme.to_scheme(f_star).expect("f* resolved above"),
        epsilon: args.eps,
        r0: vec![0.0; problem.dim()],
        early_exit: !args.strict_exit,
        k_min: args.k_min,
        budget: args.budget,
    };
    let out = match solve(problem, &run) {
        Ok(o) => o,
        Err(lcr_fista::Error::InvalidSpec(msg)) => {
            return Ok(config_error(ConfigError::Invalid(msg)))
        }
        Err(e) => return Err(e.into()),
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let ext = args.format.extension();
    iteration_table([&out.trace]).save(&args.out.join(format!("iterations.{ext}")), args.format)?;
    restart_table([&out.trace]).save(&args.out.join(format!("restarts.{ext}")), args.format)?;
    if args.scheme == SchemeKind::Lcr {
        lcr_nj_table(&out.trace).save(&args.out.join(format!("lcr_nj.{ext}")), args.format)?;
    }
    let t = &out.trace;
    let summary = serde_json::json!({
        "scheme": t.scheme,
        "iterations": t.iterations(),
        "prox_calls": t.total_prox_calls,
        "restarts": t.restarts(),
        "strict_checks": t.strict_checks,
        "final_g_dual_norm": t.final_g_dual_norm,
        "objective": problem.objective(&out.r_star),
        "converged": t.converged(),
    });
    let summary_text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(args.out.join("summary.json"), format!("{summary_text}\n"))?;
    println!("{summary_text}");
    Ok(if t.converged() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let report = verify_bounds(&args.out)?;
    report
        .table()
        .save(&args.out.join("verify.csv"), TraceFormat::Csv)?;
    println!("{report}");
    Ok(if report.failures() == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
