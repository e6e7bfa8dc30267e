use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use switch_spsa::harness::{self, parse_algorithm_list, ExperimentConfig, ProblemKind};
use switch_spsa::Error;

#[derive(Parser, Debug)]
#[command(author, version, about = "Switch-updating SPSA benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a replicated benchmark experiment.
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// quadratic, quartic or synthetic
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Comma-separated subset of su,avp,qp,al
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Final SPSA iteration index K
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat TOML file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep traces and write the convergence series files
    #[arg(long)]
    emit_series: bool,
    /// Trailing window for the loss-step proportion
    #[arg(long)]
    window: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            harness::parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(problem) = args.problem {
        if problem != cfg.problem && args.config.is_none() {
            cfg = ExperimentConfig::for_problem(problem);
        }
        cfg.problem = problem;
    }
    if let Some(algos) = &args.algos {
        let names: Vec<&str> = algos.split(',').filter(|s| !s.trim().is_empty()).collect();
        cfg.algorithms = parse_algorithm_list(&names)?;
    }
    if let Some(v) = args.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = args.iters {
        cfg.iterations = v;
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = &args.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = args.window {
        cfg.proportion_window = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    cfg.retain_traces |= args.emit_series;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;

    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(1);
        }
    };

    match harness::run_experiment(&cfg) {
        Ok(result) => {
            print!("{}", result.aggregate.render_table());
            if !result.failures.is_empty() {
                eprintln!("warning: {} replicate runs failed; see run.log", result.failures.len());
            }
            for path in &result.trace_paths {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ Error::FailureThreshold { .. }) => {
            eprintln!("run failed: {e}; partial outputs in {}", cfg.output_dir.display());
            ExitCode::from(2)
        }
        Err(e) if e.is_config_error() => {
            eprintln!("configuration error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::from(2)
        }
    }
}
