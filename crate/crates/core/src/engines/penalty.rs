//! SPSA on penalized losses `L(theta) + r_k P(theta)`.
//!
//! The loss part of each gradient estimate comes from the same two noisy
//! measurements switch updating would take at iteration `k`; the penalty
//! part is evaluated exactly at the two perturbed points, since constraints
//! are known analytically.

use std::fmt;

use crate::error::{Error, Result};
use crate::gain::GainConfig;
use crate::measure::LossOracle;
use crate::problems::Problem;
use crate::random::{sample_perturbation, RngStream};

use super::spsa::{difference_gradient, measure_pair};
use super::trace::{RunTrace, SpsaDraws, StepKind, StepRecord};

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    /// `sum max(0, q_i)`
    AbsoluteValue,
    /// `sum max(0, q_i)^2`
    Quadratic,
    /// `sum [max(0, lambda_i + r q_i)^2 - lambda_i^2] / (2 r^2)`
    AugmentedLagrangian,
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyKind::AbsoluteValue => "AVP",
            PenaltyKind::Quadratic => "QP",
            PenaltyKind::AugmentedLagrangian => "AL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyState {
    pub kind: PenaltyKind,
    /// Multiplier estimates; only the augmented Lagrangian reads them.
    pub lambda: Vec<f64>,
}

impl PenaltyState {
    /// Fresh state with zero multipliers for `m` constraints.
    pub fn new(kind: PenaltyKind, m: usize) -> Self {
        Self {
            kind,
            lambda: vec![0.0; m],
        }
    }
}

/// Penalty `P` such that the penalized loss is `L + r_k P`.
pub fn penalty_value(state: &PenaltyState, q_values: &[f64], r_k: f64) -> f64 {
    assert_eq!(state.lambda.len(), q_values.len());
    match state.kind {
        PenaltyKind::AbsoluteValue => q_values.iter().map(|q| q.max(0.0)).sum(),
        PenaltyKind::Quadratic => q_values.iter().map(|q| q.max(0.0).powi(2)).sum(),
        PenaltyKind::AugmentedLagrangian => {
            assert!(r_k > 0.0, "augmented Lagrangian needs a positive penalty weight");
            q_values
                .iter()
                .zip(&state.lambda)
                .map(|(q, l)| ((l + r_k * q).max(0.0).powi(2) - l * l) / (2.0 * r_k * r_k))
                .sum()
        }
    }
}

/// `r_k P`, with a zero weight switching the penalty off for every kind.
fn weighted_penalty(state: &PenaltyState, q_values: &[f64], r_k: f64) -> f64 {
    if r_k == 0.0 {
        0.0
    } else {
        r_k * penalty_value(state, q_values, r_k)
    }
}

/// First-order multiplier update `lambda_i <- max(0, lambda_i + r_k q_i)`.
pub fn al_multiplier_update(state: &PenaltyState, q_values: &[f64], r_k: f64) -> PenaltyState {
    debug_assert_eq!(state.kind, PenaltyKind::AugmentedLagrangian);
    PenaltyState {
        kind: state.kind,
        lambda: state
            .lambda
            .iter()
            .zip(q_values)
            .map(|(l, q)| (l + r_k * q).max(0.0))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyOptions {
    /// Runs abort once the iterate norm exceeds this.
    pub divergence_bound: f64,
}

impl Default for PenaltyOptions {
    fn default() -> Self {
        Self {
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

/// Penalty SPSA for `k = 0..=iterations` with default options.
pub fn run_penalty_spsa(
    problem: &Problem,
    state: PenaltyState,
    cfg: &GainConfig,
    iterations: usize,
    rng: &RngStream,
) -> Result<RunTrace> {
    run_penalty_spsa_with(problem, state, cfg, iterations, rng, PenaltyOptions::default())
}

pub fn run_penalty_spsa_with(
    problem: &Problem,
    mut state: PenaltyState,
    cfg: &GainConfig,
    iterations: usize,
    rng: &RngStream,
    options: PenaltyOptions,
) -> Result<RunTrace> {
    if state.lambda.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            expected: problem.num_constraints(),
            actual: state.lambda.len(),
        });
    }
    let initial = problem.initial_point().clone();
    let mut theta = initial.clone();
    let mut oracle = LossOracle::new(problem, *rng);
    let mut steps = Vec::with_capacity(iterations + 1);

    for k in 0..=iterations {
        let a_k = cfg.gain_a(k);
        let c_k = cfg.gain_c(k);
        let r_k = cfg.penalty_weight(k);
        let delta = sample_perturbation(problem.dim(), rng, k);
        let pair = measure_pair(&mut oracle, &theta, c_k, &delta, k)?;
        let penalty_plus = weighted_penalty(&state, &problem.constraint_values(&pair.theta_plus), r_k);
        let penalty_minus = weighted_penalty(&state, &problem.constraint_values(&pair.theta_minus), r_k);
        let difference = pair.difference() + (penalty_plus - penalty_minus);
        let gradient = difference_gradient(difference, c_k, &delta);

        let diverged = |norm: f64| Error::DivergedIterate {
            k,
            norm,
            bound: options.divergence_bound,
        };
        theta
            .descend(a_k, &gradient)
            .map_err(|_| diverged(f64::INFINITY))?;
        let norm = theta.norm();
        if norm > options.divergence_bound {
            return Err(diverged(norm));
        }

        if state.kind == PenaltyKind::AugmentedLagrangian {
            state = al_multiplier_update(&state, &problem.constraint_values(&theta), r_k);
        }

        steps.push(StepRecord {
            t: k,
            k,
            kind: StepKind::Loss,
            theta_after: theta.clone(),
            gain_used: a_k,
            draws: Some(SpsaDraws {
                perturbation: delta,
                noise: pair.noise,
            }),
        });
    }

    Ok(RunTrace {
        steps,
        measurements_used: oracle.measurements(),
        initial_theta: initial,
        final_theta: theta,
    })
}
