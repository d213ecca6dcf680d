//! Runs one experiment over its κ_s grid and seeds.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{ExperimentConfig, Experiment, HessianChoice, KappaSetting};
use super::table::{aggregate, emit_table, RunRecord, RunSummary};
use super::trace::write_trace;
use crate::error::{Error, Result};
use crate::problems::{
    bpdn_generate_with, fh_generate_with, matcomp_generate_with, write_columns, BpdnProblem, FhProblem,
    MatCompProblem,
};
use crate::solver::{ir2n_solve, HessianModel, PrecSchedule, SolveResult, SolveStats};

/// A problem instance for one seed.
pub enum Instance {
    Bpdn(BpdnProblem),
    Matcomp(MatCompProblem),
    Fh(FhProblem),
}

impl Instance {
    pub fn generate(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        Ok(match cfg.experiment {
            Experiment::Bpdn => Instance::Bpdn(bpdn_generate_with(seed, &cfg.bpdn)),
            Experiment::Matcomp => Instance::Matcomp(matcomp_generate_with(seed, &cfg.matcomp)?),
            Experiment::Fh => Instance::Fh(fh_generate_with(seed, &cfg.fh)?),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Instance::Bpdn(p) => p.config.cols,
            Instance::Matcomp(p) => p.dim(),
            Instance::Fh(_) => 5,
        }
    }

    fn hessian(&self, choice: HessianChoice) -> Result<HessianModel> {
        if let Some(kind) = choice.kind() {
            return Ok(HessianModel::new(kind, self.dim()));
        }
        match self {
            Instance::Bpdn(p) => Ok(HessianModel::fixed(p.a.tr_mul(&p.a))),
            Instance::Matcomp(p) => Ok(HessianModel::fixed(DMatrix::from_diagonal(&DVector::from_iterator(
                p.dim(),
                p.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }),
            )))),
            Instance::Fh(_) => Err(Error::InvalidParameter("fh has no constant Hessian".into())),
        }
    }

    /// Solves the instance with the configured solver for one κ_s setting.
    pub fn solve(&self, cfg: &ExperimentConfig, kappa: KappaSetting, seed: u64) -> Result<SolveResult> {
        let params = cfg.solver_params(kappa, seed);
        let hess = self.hessian(cfg.hessian())?;
        match self {
            Instance::Bpdn(p) => ir2n_solve(&mut p.oracle(), &p.regularizer()?, &p.x0(), &params, hess, None),
            Instance::Matcomp(p) => ir2n_solve(&mut p.oracle(), &p.regularizer()?, &p.x0(), &params, hess, None),
            Instance::Fh(p) => {
                let schedule = cfg.prec_n.map(PrecSchedule::new);
                let mut oracle = p.oracle(schedule.is_none());
                ir2n_solve(&mut oracle, &p.regularizer()?, &p.x0(), &params, hess, schedule)
            }
        }
    }
}

/// One finished run with its trace and final point.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub result: Option<SolveResult>,
}

impl RunOutcome {
    pub fn x(&self) -> Option<&DVector<f64>> {
        self.result.as_ref().map(|r| &r.x)
    }
}

pub fn run_single(cfg: &ExperimentConfig, kappa: KappaSetting, seed: u64) -> RunOutcome {
    let solved = Instance::generate(cfg, seed).and_then(|inst| inst.solve(cfg, kappa, seed));
    match solved {
        Ok(r) => RunOutcome {
            record: RunRecord {
                kappa_s: kappa,
                seed,
                status: Some(r.status),
                error: None,
                stats: r.stats.clone(),
                solution_path: None,
            },
            result: Some(r),
        },
        Err(e) => RunOutcome {
            record: RunRecord {
                kappa_s: kappa,
                seed,
                status: None,
                error: Some(e.to_string()),
                stats: SolveStats::default(),
                solution_path: None,
            },
            result: None,
        },
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub runs: Vec<RunOutcome>,
    pub summaries: Vec<RunSummary>,
}

impl SweepResult {
    pub fn records(&self) -> Vec<RunRecord> {
        self.runs.iter().map(|r| r.record.clone()).collect()
    }

    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.record.succeeded())
    }

    pub fn find(&self, kappa: KappaSetting, seed: u64) -> Option<&RunOutcome> {
        self.runs.iter().find(|r| r.record.kappa_s == kappa && r.record.seed == seed)
    }

    pub fn table(&self) -> String {
        emit_table(&self.summaries)
    }
}

/// Runs every (κ_s, seed) pair without touching the file system.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let jobs: Vec<(KappaSetting, u64)> =
        cfg.kappa_s.iter().flat_map(|&k| cfg.seed_range().map(move |s| (k, s))).collect();
    let runs: Vec<RunOutcome> = if cfg.parallel {
        jobs.par_iter().map(|&(k, s)| run_single(cfg, k, s)).collect()
    } else {
        jobs.iter().map(|&(k, s)| run_single(cfg, k, s)).collect()
    };
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    Ok(SweepResult { summaries: aggregate(&records), runs })
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub root: PathBuf,
    pub table: PathBuf,
    pub traces: PathBuf,
}

/// Writes the summary table, one trace per run, solution vectors and the
/// figure data under `<out>/<experiment>/`.
pub fn write_outputs(cfg: &ExperimentConfig, sweep: &mut SweepResult, out: &Path) -> Result<OutputPaths> {
    let root = out.join(cfg.experiment.name());
    let traces = root.join("traces");
    let solutions = root.join("solutions");
    fs::create_dir_all(&traces)?;
    fs::create_dir_all(&solutions)?;
    for run in &mut sweep.runs {
        let stem = format!("kappa_{}_seed_{}", run.record.kappa_s.label(), run.record.seed);
        if let Some(r) = &run.result {
            let path = solutions.join(format!("{stem}.txt"));
            let idx: Vec<f64> = (0..r.x.len()).map(|i| i as f64).collect();
            write_columns(BufWriter::new(fs::File::create(&path)?), &["index", "x"], &[&idx, r.x.as_slice()])?;
            run.record.solution_path = Some(format!("../solutions/{stem}.txt"));
        }
        let trace = run.result.as_ref().map_or(&[][..], |r| &r.trace[..]);
        write_trace(&traces.join(format!("{stem}.jsonl")), trace, &run.record)?;
    }
    let table = root.join("summary.csv");
    fs::write(&table, sweep.table())?;
    fs::write(root.join("config.toml"), toml::to_string(cfg).map_err(|e| Error::Parse(e.to_string()))?)?;
    write_figures(cfg, sweep, &root.join("figures"))?;
    Ok(OutputPaths { root, table, traces })
}

fn write_pair(path: &Path, names: [&str; 2], a: &[f64], b: &[f64]) -> Result<()> {
    write_columns(BufWriter::new(fs::File::create(path)?), &names, &[a, b])
}

/// Two-column figure data for the first seed: solution components (bpdn,
/// matcomp) or simulated trajectories (fh), next to the reference.
fn write_figures(cfg: &ExperimentConfig, sweep: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let seed = cfg.first_seed;
    let inst = Instance::generate(cfg, seed)?;
    let idx: Vec<f64> = (0..inst.dim()).map(|i| i as f64).collect();
    match &inst {
        Instance::Bpdn(p) => write_pair(&dir.join("x_true.txt"), ["index", "x_true"], &idx, p.x_true.as_slice())?,
        Instance::Matcomp(p) => write_pair(&dir.join("image.txt"), ["index", "image"], &idx, p.image_vec().as_slice())?,
        Instance::Fh(p) => {
            write_pair(&dir.join("data_v.txt"), ["t", "v"], &p.times, &p.v_data)?;
            write_pair(&dir.join("data_w.txt"), ["t", "w"], &p.times, &p.w_data)?;
        }
    }
    for &kappa in &cfg.kappa_s {
        let Some(x) = sweep.find(kappa, seed).and_then(RunOutcome::x) else { continue };
        let label = kappa.label();
        match &inst {
            Instance::Bpdn(_) | Instance::Matcomp(_) => {
                write_pair(&dir.join(format!("solution_{label}.txt")), ["index", "x"], &idx, x.as_slice())?
            }
            Instance::Fh(p) => {
                // a dense grid shows the oscillation between samples
                let n = 10 * p.config.intervals.max(1);
                let t: Vec<f64> = (0..=n).map(|i| p.config.horizon * i as f64 / n as f64).collect();
                let (v, w, _) = crate::problems::simulate_on(x, crate::solver::PREC_EXACT, [p.config.v0, p.config.w0], &t)?;
                write_pair(&dir.join(format!("trajectory_v_{label}.txt")), ["t", "v"], &t, &v)?;
                write_pair(&dir.join(format!("trajectory_w_{label}.txt")), ["t", "w"], &t, &w)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::BpdnConfig;

    fn tiny_bpdn() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Experiment::Bpdn);
        cfg.bpdn = BpdnConfig { rows: 20, cols: 40, nonzeros: 3, noise_scale: 0.01, ..Default::default() };
        cfg.kappa_s = vec![KappaSetting::Value(0.5), KappaSetting::Exact];
        cfg.seeds = 2;
        cfg
    }

    #[test]
    fn sweep_has_one_row_per_kappa() {
        let sweep = run_sweep(&tiny_bpdn()).unwrap();
        assert_eq!(sweep.runs.len(), 4);
        assert!(sweep.all_succeeded());
        assert_eq!(sweep.summaries.len(), 2);
        assert_eq!(sweep.summaries[1].kappa_s, KappaSetting::Exact);
        assert!(sweep.table().contains("\nexact,"));
    }

    #[test]
    fn one_seed_means_equal_run_values() {
        let mut cfg = tiny_bpdn();
        cfg.seeds = 1;
        let sweep = run_sweep(&cfg).unwrap();
        let run = sweep.find(KappaSetting::Exact, 0).unwrap();
        assert_eq!(sweep.summaries[1].ir2n_iters, run.record.stats.outer_iters as f64);
        assert_eq!(sweep.summaries[1].final_objective, run.record.stats.objective());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut cfg = tiny_bpdn();
        let a = run_sweep(&cfg).unwrap();
        cfg.parallel = false;
        let b = run_sweep(&cfg).unwrap();
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(x.x(), y.x());
            assert_eq!(x.record.stats.outer_iters, y.record.stats.outer_iters);
        }
    }

    #[test]
    fn errors_count_as_failures() {
        let mut cfg = ExperimentConfig::new(Experiment::Matcomp);
        cfg.matcomp.sampling_rate = 0.0;
        cfg.kappa_s = vec![KappaSetting::Exact];
        cfg.seeds = 1;
        let sweep = run_sweep(&cfg).unwrap();
        assert!(sweep.runs[0].record.error.is_some());
        assert_eq!(sweep.summaries[0].fail_rate, 1.0);
    }
}
