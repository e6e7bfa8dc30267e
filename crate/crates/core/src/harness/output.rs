use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engines::StepRecord;
use crate::error::{Error, Result};
use crate::metrics::{relative_error, Algorithm, ReplicateReport};

use super::run::ExperimentResult;

pub const REPLICATES_FILE: &str = "replicates.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const SERIES_ERROR_FILE: &str = "series_error.csv";
pub const SERIES_PROPORTION_FILE: &str = "series_proportion.csv";
pub const RUN_LOG_FILE: &str = "run.log";

#[derive(Debug, Serialize, Deserialize)]
struct ReplicateRow {
    replicate_id: u64,
    algorithm: String,
    relative_error: f64,
    violation_q: f64,
    proportion_last_window: f64,
    measurements_used: u64,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per completed (replicate, algorithm) pair.
pub fn emit_replicate_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    for r in &result.reports {
        w.serialize(ReplicateRow {
            replicate_id: r.replicate_id,
            algorithm: r.algorithm.to_string(),
            relative_error: r.relative_error,
            violation_q: r.violation_q,
            proportion_last_window: r.proportion_last_window,
            measurements_used: r.measurements_used,
        })?;
    }
    finish(w, path)
}

pub fn read_replicate_csv(path: &Path) -> Result<Vec<ReplicateReport>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize::<ReplicateRow>()
        .map(|row| {
            let row = row?;
            let algorithm = row
                .algorithm
                .parse::<Algorithm>()
                .map_err(Error::MalformedConfig)?;
            Ok(ReplicateReport {
                replicate_id: row.replicate_id,
                algorithm,
                relative_error: row.relative_error,
                violation_q: row.violation_q,
                proportion_last_window: row.proportion_last_window,
                measurements_used: row.measurements_used,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct AggregateRow {
    algorithm: String,
    completed: usize,
    failed: usize,
    mean_relative_error: f64,
    mean_violation_q: f64,
    mean_proportion: f64,
    mean_measurements: f64,
    p_value_vs_su: Option<f64>,
}

pub fn emit_aggregate_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    for s in &result.aggregate.summaries {
        w.serialize(AggregateRow {
            algorithm: s.algorithm.to_string(),
            completed: s.completed,
            failed: s.failed,
            mean_relative_error: s.mean_relative_error,
            mean_violation_q: s.mean_violation_q,
            mean_proportion: s.mean_proportion,
            mean_measurements: s.mean_measurements,
            p_value_vs_su: result.aggregate.p_values.get(&s.algorithm).copied(),
        })?;
    }
    finish(w, path)
}

/// Writes the replicate-averaged relative error against cumulative loss
/// measurements for every algorithm, and the trailing-window loss-step
/// proportion against the step counter `t` for SU. Returns the paths written.
pub fn emit_convergence_series(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let traces = result.traces.as_ref().ok_or(Error::TracesNotRetained)?;
    let problem = result.config.build_problem();
    let optimum = &problem.reference().ok_or(Error::MissingReference)?.theta;

    let error_path = dir.join(SERIES_ERROR_FILE);
    let mut w = writer(&error_path)?;
    w.write_record(["algorithm", "loss_measurements", "mean_relative_error"])?;
    for &alg in &result.config.algorithms {
        let runs: Vec<_> = traces.iter().filter(|t| t.algorithm == alg).collect();
        if runs.is_empty() {
            continue;
        }
        let per_run: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| {
                let init = &r.trace.initial_theta;
                std::iter::once(Ok(1.0))
                    .chain(
                        r.trace
                            .iterates_per_k()
                            .into_iter()
                            .map(|theta| relative_error(theta, init, optimum)),
                    )
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let len = per_run.iter().map(Vec::len).min().unwrap_or(0);
        for i in 0..len {
            let mean = per_run.iter().map(|v| v[i]).sum::<f64>() / per_run.len() as f64;
            w.write_record([alg.to_string(), (2 * i).to_string(), mean.to_string()])?;
        }
    }
    finish(w, &error_path)?;

    let proportion_path = dir.join(SERIES_PROPORTION_FILE);
    let mut w = writer(&proportion_path)?;
    w.write_record(["t", "mean_proportion", "replicates"])?;
    let su_steps: Vec<&[StepRecord]> = traces
        .iter()
        .filter(|t| t.algorithm == Algorithm::Su)
        .map(|t| t.trace.steps.as_slice())
        .collect();
    let window = result.config.proportion_window;
    let longest = su_steps.iter().map(|s| s.len()).max().unwrap_or(0);
    // Running counts of loss steps, one prefix-sum per replicate.
    let prefix: Vec<Vec<usize>> = su_steps
        .iter()
        .map(|steps| {
            std::iter::once(0)
                .chain(steps.iter().scan(0, |acc, s| {
                    *acc += usize::from(s.is_loss_step());
                    Some(*acc)
                }))
                .collect()
        })
        .collect();
    for t in window..=longest {
        let (sum, n) = prefix
            .iter()
            .filter(|p| p.len() > t)
            .fold((0.0, 0usize), |(sum, n), p| {
                (sum + (p[t] - p[t - window]) as f64 / window as f64, n + 1)
            });
        w.write_record([t.to_string(), (sum / n as f64).to_string(), n.to_string()])?;
    }
    finish(w, &proportion_path)?;

    Ok(vec![error_path, proportion_path])
}

pub(crate) fn render_run_log(result: &ExperimentResult) -> String {
    let c = &result.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "problem={} replicates={} K={} seed={} window={}",
        c.problem, c.replicates, c.iterations, c.master_seed, c.proportion_window
    );
    let g = &c.gains;
    let _ = writeln!(
        out,
        "a={} A={} c={} alpha={} gamma={} beta={} avp_r={} qp_r={} qp_rho={} al_r={} al_rho={}",
        g.a(), g.big_a(), g.c(), g.alpha(), g.gamma(), g.beta(),
        c.avp.r, c.qp.r, c.qp.rho, c.al.r, c.al.rho
    );
    out.push('\n');
    out.push_str(&result.aggregate.render_table());
    if !result.failures.is_empty() {
        let counts: BTreeMap<_, _> = result.failure_counts();
        let _ = writeln!(out, "\nwarning: {} failed replicate runs", result.failures.len());
        for (alg, n) in counts {
            let _ = writeln!(out, "  {alg}: {n}");
        }
        for f in &result.failures {
            let _ = writeln!(out, "  replicate {} {}: {}", f.replicate_id, f.algorithm, f.message);
        }
    }
    out
}
