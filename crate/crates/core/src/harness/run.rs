use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::engines::{run_penalty_spsa_with, run_su, PenaltyKind, PenaltyOptions, PenaltyState, RunTrace};
use crate::error::{Error, Result};
use crate::metrics::{AggregateReport, Algorithm, ReplicateReport};
use crate::problems::Problem;
use crate::random::RngStream;

use super::config::ExperimentConfig;
use super::output;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub replicate_id: u64,
    pub algorithm: Algorithm,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetainedTrace {
    pub replicate_id: u64,
    pub algorithm: Algorithm,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Ordered by replicate, then by configured algorithm order.
    pub reports: Vec<ReplicateReport>,
    pub failures: Vec<ReplicateFailure>,
    pub aggregate: AggregateReport,
    /// Present only when `retain_traces` is set.
    pub traces: Option<Vec<RetainedTrace>>,
    /// Files written by [`run_experiment`].
    pub trace_paths: Vec<PathBuf>,
}

impl ExperimentResult {
    pub fn failure_counts(&self) -> BTreeMap<Algorithm, usize> {
        let mut counts = BTreeMap::new();
        for f in &self.failures {
            *counts.entry(f.algorithm).or_insert(0) += 1;
        }
        counts
    }

    /// First algorithm whose failure share exceeds 10%.
    pub fn check_failure_threshold(&self) -> Result<()> {
        let total = self.config.replicates;
        for (alg, failed) in self.failure_counts() {
            if failed * 10 > total {
                return Err(Error::FailureThreshold {
                    algorithm: alg.to_string(),
                    failed,
                    total,
                });
            }
        }
        Ok(())
    }

    pub fn errors_of(&self, algorithm: Algorithm) -> Vec<f64> {
        self.reports
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .map(|r| r.relative_error)
            .collect()
    }
}

/// One run of `algorithm` on replicate stream `rng`.
pub fn run_algorithm(
    config: &ExperimentConfig,
    problem: &Problem,
    algorithm: Algorithm,
    rng: &RngStream,
) -> Result<RunTrace> {
    let gains = config.gains_for(algorithm)?;
    let options = PenaltyOptions {
        divergence_bound: config.divergence_bound,
    };
    let m = problem.num_constraints();
    let penalty = |kind| {
        run_penalty_spsa_with(problem, PenaltyState::new(kind, m), &gains, config.iterations, rng, options)
    };
    match algorithm {
        Algorithm::Su => run_su(problem, &gains, config.iterations, rng, config.pullback_cap),
        Algorithm::Avp => penalty(PenaltyKind::AbsoluteValue),
        Algorithm::Qp => penalty(PenaltyKind::Quadratic),
        Algorithm::Al => penalty(PenaltyKind::AugmentedLagrangian),
    }
}

type Outcome = (u64, Algorithm, Result<(ReplicateReport, Option<RunTrace>)>);

fn run_replicate(config: &ExperimentConfig, problem: &Problem, replicate_id: u64) -> Vec<Outcome> {
    let rng = RngStream::new(config.master_seed, replicate_id);
    config
        .algorithms
        .iter()
        .map(|&alg| {
            let outcome = run_algorithm(config, problem, alg, &rng).and_then(|trace| {
                let report = ReplicateReport::from_trace(
                    problem,
                    replicate_id,
                    alg,
                    &trace,
                    config.proportion_window,
                )?;
                Ok((report, config.retain_traces.then_some(trace)))
            });
            (replicate_id, alg, outcome)
        })
        .collect()
}

/// Runs every configured algorithm on every replicate without touching the
/// filesystem. Failed replicates are recorded and excluded from the
/// aggregate; no failure threshold is applied.
pub fn run_replicates(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let problem = config.build_problem();
    let ids: Vec<u64> = (0..config.replicates as u64).collect();
    let work = || -> Vec<Vec<Outcome>> {
        ids.par_iter()
            .map(|&id| run_replicate(config, &problem, id))
            .collect()
    };
    let outcomes = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::MalformedConfig(format!("workers: {e}")))?
            .install(work)
    } else {
        work()
    };

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut traces = config.retain_traces.then(Vec::new);
    for (replicate_id, algorithm, outcome) in outcomes.into_iter().flatten() {
        match outcome {
            Ok((report, trace)) => {
                reports.push(report);
                if let (Some(store), Some(trace)) = (traces.as_mut(), trace) {
                    store.push(RetainedTrace {
                        replicate_id,
                        algorithm,
                        trace,
                    });
                }
            }
            Err(e) => failures.push(ReplicateFailure {
                replicate_id,
                algorithm,
                message: e.to_string(),
            }),
        }
    }

    let mut result = ExperimentResult {
        config: config.clone(),
        reports,
        failures,
        aggregate: AggregateReport::default(),
        traces,
        trace_paths: Vec::new(),
    };
    result.aggregate =
        AggregateReport::from_reports(&config.algorithms, &result.reports, &result.failure_counts());
    Ok(result)
}

/// Runs the experiment and writes `replicates.csv`, `aggregate.csv`, the run
/// log, and (with retained traces) the convergence series into the output
/// directory. Outputs are written before the failure threshold is checked.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut result = run_replicates(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let replicates = dir.join(output::REPLICATES_FILE);
    output::emit_replicate_csv(&result, &replicates)?;
    let aggregate = dir.join(output::AGGREGATE_FILE);
    output::emit_aggregate_csv(&result, &aggregate)?;
    result.trace_paths.extend([replicates, aggregate]);

    if config.retain_traces {
        let written = output::emit_convergence_series(&result, dir)?;
        result.trace_paths.extend(written);
    }

    let log = dir.join(output::RUN_LOG_FILE);
    fs::write(&log, output::render_run_log(&result)).map_err(|e| Error::io(&log, e))?;
    result.trace_paths.push(log);

    result.check_failure_threshold()?;
    Ok(result)
}
