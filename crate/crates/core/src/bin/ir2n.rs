//! Command-line front end: experiment sweeps, table re-aggregation and the
//! reference checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ir2n::harness::{
    emit_table, reaggregate, run_checks, run_sweep, write_outputs, Experiment, ExperimentConfig, HessianChoice,
    KappaSetting,
};

#[derive(Parser)]
#[command(name = "ir2n", version, about = "Inexact proximal quasi-Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Inexact,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep κ_s and seeds for one experiment (bpdn, matcomp, fh).
    Run {
        experiment: Experiment,
        /// Comma-separated κ_s values; `exact` selects the exact prox.
        #[arg(long = "kappa-s", value_delimiter = ',')]
        kappa_s: Option<Vec<KappaSetting>>,
        #[arg(long)]
        seeds: Option<usize>,
        /// Keep only exact or only inexact settings of the κ_s list.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        hessian: Option<HessianChoice>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Horizon of the accuracy schedule (fh only).
        #[arg(long = "prec-N")]
        prec_n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run sequentially.
        #[arg(long)]
        sequential: bool,
    },
    /// Rebuild the summary table from a directory of trace files.
    Table { trace_dir: PathBuf },
    /// Run the quick reference checks.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    experiment: Experiment,
    kappa_s: Option<Vec<KappaSetting>>,
    seeds: Option<usize>,
    mode: Option<Mode>,
    hessian: Option<HessianChoice>,
    epsilon: Option<f64>,
    prec_n: Option<usize>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
    sequential: bool,
) -> ir2n::Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(path) => {
            let cfg = ExperimentConfig::load(&path)?;
            if cfg.experiment != experiment {
                return Err(ir2n::Error::InvalidParameter(format!(
                    "config is for {} but {} was requested",
                    cfg.experiment, experiment
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(experiment),
    };
    if let Some(k) = kappa_s {
        cfg.kappa_s = k;
    }
    if let Some(m) = mode {
        cfg.kappa_s.retain(|k| matches!((m, k), (Mode::Exact, KappaSetting::Exact) | (Mode::Inexact, KappaSetting::Value(_))));
    }
    cfg.seeds = seeds.unwrap_or(cfg.seeds);
    cfg.hessian = hessian.or(cfg.hessian);
    cfg.epsilon = epsilon.or(cfg.epsilon);
    cfg.prec_n = prec_n.or(cfg.prec_n);
    cfg.out_dir = out.or(cfg.out_dir);
    if sequential {
        cfg.parallel = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { experiment, kappa_s, seeds, mode, hessian, epsilon, prec_n, out, config, sequential } => {
            let cfg = match build_config(experiment, kappa_s, seeds, mode, hessian, epsilon, prec_n, out, config, sequential) {
                Ok(c) => c,
                Err(e) => return usage_error(e),
            };
            let mut sweep = match run_sweep(&cfg) {
                Ok(s) => s,
                Err(e) => return usage_error(e),
            };
            let paths = match write_outputs(&cfg, &mut sweep, &cfg.resolve_out_dir()) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: writing outputs: {e}");
                    return ExitCode::from(EXIT_FAILURE);
                }
            };
            print!("{}", sweep.table());
            eprintln!("wrote {}", paths.root.display());
            for run in sweep.runs.iter().filter(|r| !r.record.succeeded()) {
                let why = run.record.error.clone().unwrap_or_else(|| format!("{:?}", run.record.status));
                eprintln!("run kappa_s={} seed={} failed: {why}", run.record.kappa_s, run.record.seed);
            }
            if sweep.all_succeeded() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Command::Table { trace_dir } => match reaggregate(&trace_dir) {
            Ok(rows) => {
                print!("{}", emit_table(&rows));
                ExitCode::SUCCESS
            }
            Err(e) => usage_error(e),
        },
        Command::Check { seed } => {
            let results = run_checks(seed);
            for r in &results {
                println!("{}", r.line());
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}
