use std::fs;
use std::process::Command;

use switch_spsa::harness::{
    emit_convergence_series, parse_config, read_replicate_csv, run_experiment, run_replicates,
    ExperimentConfig, ProblemKind, REPLICATES_FILE, SERIES_ERROR_FILE, SERIES_PROPORTION_FILE,
};
use switch_spsa::metrics::Algorithm;
use switch_spsa::Error;

fn synthetic(replicates: usize, iterations: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_problem(ProblemKind::Synthetic);
    cfg.replicates = replicates;
    cfg.iterations = iterations;
    cfg.master_seed = 11;
    cfg
}

#[test]
fn replicate_csv_has_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synthetic(50, 40);
    cfg.output_dir = dir.path().to_path_buf();
    let result = run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join(REPLICATES_FILE)).unwrap();
    assert_eq!(text.lines().count(), 201);
    assert!(text.ends_with('\n'));
    assert_eq!(
        text.lines().next().unwrap(),
        "replicate_id,algorithm,relative_error,violation_q,proportion_last_window,measurements_used"
    );

    let parsed = read_replicate_csv(&dir.path().join(REPLICATES_FILE)).unwrap();
    assert_eq!(parsed.len(), result.reports.len());
    let close = |a: f64, b: f64| a == b || ((a - b) / b).abs() < 1e-12;
    for (a, b) in parsed.iter().zip(&result.reports) {
        assert_eq!((a.replicate_id, a.algorithm), (b.replicate_id, b.algorithm));
        assert!(close(a.relative_error, b.relative_error));
        assert!(close(a.violation_q, b.violation_q));
        assert!(close(a.proportion_last_window, b.proportion_last_window));
        assert_eq!(a.measurements_used, b.measurements_used);
    }
}

#[test]
fn every_replicate_spends_the_same_budget() {
    let cfg = synthetic(4, 120);
    let result = run_replicates(&cfg).unwrap();
    assert!(result.failures.is_empty());
    assert!(result.reports.iter().all(|r| r.measurements_used == 2 * 121));

    let mut cfg = ExperimentConfig::for_problem(ProblemKind::Quartic);
    cfg.replicates = 3;
    cfg.iterations = 200;
    let result = run_replicates(&cfg).unwrap();
    assert!(result.reports.iter().all(|r| r.measurements_used == 2 * 201));
}

#[test]
fn worker_count_does_not_change_results() {
    let mut cfg = synthetic(6, 80);
    cfg.workers = 1;
    let serial = run_replicates(&cfg).unwrap();
    cfg.workers = 4;
    let parallel = run_replicates(&cfg).unwrap();
    assert_eq!(serial.reports, parallel.reports);
}

#[test]
fn retained_traces_share_draws_across_algorithms() {
    let mut cfg = ExperimentConfig::for_problem(ProblemKind::Quadratic);
    cfg.replicates = 3;
    cfg.iterations = 60;
    cfg.retain_traces = true;
    cfg.algorithms = vec![Algorithm::Su, Algorithm::Avp];
    let result = run_replicates(&cfg).unwrap();
    let traces = result.traces.as_ref().unwrap();
    for rep in 0..3 {
        let draws: Vec<Vec<_>> = traces
            .iter()
            .filter(|t| t.replicate_id == rep)
            .map(|t| t.trace.loss_steps().map(|s| (s.k, s.draws.clone())).collect())
            .collect();
        assert_eq!(draws.len(), 2);
        assert_eq!(draws[0], draws[1]);
    }
}

#[test]
fn convergence_series_start_at_one_and_cover_every_k() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synthetic(5, 30);
    cfg.retain_traces = true;
    cfg.proportion_window = 10;
    cfg.output_dir = dir.path().to_path_buf();
    run_experiment(&cfg).unwrap();

    let text = fs::read_to_string(dir.path().join(SERIES_ERROR_FILE)).unwrap();
    for alg in &cfg.algorithms {
        let rows: Vec<Vec<String>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .filter(|r: &Vec<String>| r[0] == alg.to_string())
            .collect();
        // Initial point plus one row after each of k = 0..=K.
        assert_eq!(rows.len(), cfg.iterations + 2);
        assert_eq!(rows[0][1], "0");
        assert_eq!(rows[0][2].parse::<f64>().unwrap(), 1.0);
        assert_eq!(rows.last().unwrap()[1], (2 * (cfg.iterations + 1)).to_string());
    }
    let proportion = fs::read_to_string(dir.path().join(SERIES_PROPORTION_FILE)).unwrap();
    assert_eq!(proportion.lines().next().unwrap(), "t,mean_proportion,replicates");
    // Interior problem: every step consumes measurements.
    for line in proportion.lines().skip(1) {
        assert_eq!(line.split(',').nth(1).unwrap(), "1");
    }
}

#[test]
fn series_without_traces_is_an_error() {
    let result = run_replicates(&synthetic(2, 10)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        emit_convergence_series(&result, dir.path()),
        Err(Error::TracesNotRetained)
    ));
}

#[test]
fn config_validation_names_keys() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, ExperimentConfig::for_problem(ProblemKind::Quadratic));
    match parse_config("alpha = 0.4") {
        Err(Error::OutOfRangeValue { key, .. }) => assert_eq!(key, "alpha"),
        other => panic!("{other:?}"),
    }
    match parse_config("qp_rho = 0.3") {
        Err(Error::OutOfRangeValue { key, .. }) => assert_eq!(key, "qp_rho"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_config("colour = 1"), Err(Error::UnknownKey(_))));
    let quartic = parse_config("problem = \"quartic\"").unwrap();
    assert_eq!(quartic.iterations, 3000);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_switch-spsa"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = cli()
        .args(["run", "--problem", "synthetic", "--replicates", "3", "--iters", "50", "--seed", "2"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("SU"));
    assert!(dir.path().join(REPLICATES_FILE).exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "alpha = 0.4\n").unwrap();
    let status = cli().args(["run", "--config"]).arg(&bad).output().unwrap().status;
    assert_eq!(status.code(), Some(1));

    // A tiny divergence bound makes every penalty replicate fail.
    let diverge = dir.path().join("diverge.toml");
    fs::write(&diverge, "algorithms = [\"avp\"]\nreplicates = 2\niterations = 20\ndivergence_bound = 1e-3\n").unwrap();
    let out_dir = dir.path().join("diverged");
    let status = cli()
        .args(["run", "--config"])
        .arg(&diverge)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
    assert!(out_dir.join(REPLICATES_FILE).exists());
}
