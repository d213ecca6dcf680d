//! A κ_s sweep through the experiment harness: prints the summary table
//! and writes traces under `IR2N_OUT_DIR` (default `ir2n-out`).

use ir2n::harness::{run_sweep, write_outputs, Experiment, ExperimentConfig, KappaSetting};

fn main() -> ir2n::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Bpdn);
    cfg.bpdn.rows = 100;
    cfg.bpdn.cols = 256;
    cfg.bpdn.noise_scale = 0.01;
    cfg.seeds = 3;
    cfg.kappa_s = vec![KappaSetting::Value(1e-7), KappaSetting::Value(1e-3), KappaSetting::Value(0.5), KappaSetting::Exact];
    let mut sweep = run_sweep(&cfg)?;
    print!("{}", sweep.table());
    let paths = write_outputs(&cfg, &mut sweep, &cfg.resolve_out_dir())?;
    println!("traces in {}", paths.traces.display());
    Ok(())
}
