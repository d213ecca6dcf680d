use ir2n::harness::{
    read_trace_dir, reaggregate, run_sweep, trace_violations, write_outputs, Experiment, ExperimentConfig,
    KappaSetting,
};

fn small(exp: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(exp);
    cfg.seeds = 1;
    cfg.kappa_s = vec![KappaSetting::Value(1e-3), KappaSetting::Exact];
    cfg.bpdn.rows = 40;
    cfg.bpdn.cols = 80;
    cfg.bpdn.nonzeros = 4;
    cfg.bpdn.noise_scale = 0.01;
    cfg
}

#[test]
fn runs_are_deterministic() {
    let cfg = small(Experiment::Bpdn);
    let (a, b) = (run_sweep(&cfg).unwrap(), run_sweep(&cfg).unwrap());
    for (x, y) in a.runs.iter().zip(&b.runs) {
        assert_eq!(x.x(), y.x());
        let (tx, ty) = (&x.result.as_ref().unwrap().trace, &y.result.as_ref().unwrap().trace);
        assert_eq!(tx.len(), ty.len());
        for (p, q) in tx.iter().zip(ty) {
            assert_eq!((p.f, p.sigma, p.prox_iters), (q.f, q.sigma, q.prox_iters));
        }
    }
}

#[test]
fn invariants_hold_on_small_runs() {
    let mut fh = small(Experiment::Fh);
    fh.kappa_s = vec![KappaSetting::Value(1e-7)];
    fh.prec_n = Some(100);
    for cfg in [small(Experiment::Bpdn), small(Experiment::Matcomp), fh] {
        let sweep = run_sweep(&cfg).unwrap();
        assert!(sweep.all_succeeded(), "{}", cfg.experiment);
        for run in &sweep.runs {
            let r = run.result.as_ref().unwrap();
            let params = cfg.solver_params(run.record.kappa_s, run.record.seed);
            let exact = cfg.prec_n.is_none() && run.record.kappa_s == KappaSetting::Exact;
            let v = trace_violations(&r.trace, &params, exact);
            assert_eq!(v.total(), 0, "{} {}: {v:?}", cfg.experiment, run.record.kappa_s);
            assert_eq!(r.trace.len(), r.stats.outer_iters);
        }
    }
}

#[test]
fn toml_config_drives_a_sweep_and_traces_reaggregate() {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
experiment = "matcomp"
kappa_s = [1e-7, "exact"]
seeds = 2
parallel = false

[solver]
max_iter = 500

[matcomp]
rows = 6
cols = 7
sampling_rate = 0.7
"#,
    )
    .unwrap();
    assert_eq!(cfg.epsilon(), 1e-3);
    let mut sweep = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_outputs(&cfg, &mut sweep, dir.path()).unwrap();
    assert_eq!(reaggregate(&paths.traces).unwrap(), sweep.summaries);
    let traces = read_trace_dir(&paths.traces).unwrap();
    assert_eq!(traces.len(), 4);
    assert!(traces.iter().all(|t| t.run.solution_path.is_some()));
    let reloaded = ExperimentConfig::load(&paths.root.join("config.toml")).unwrap();
    assert_eq!(reloaded.kappa_s, cfg.kappa_s);
    assert_eq!(reloaded.matcomp.rows, 6);
}
