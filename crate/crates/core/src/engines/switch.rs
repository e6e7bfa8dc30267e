//! Switch updating: SPSA steps while feasible, constraint-gradient pullback
//! steps while not.

use crate::error::{Error, Result};
use crate::gain::GainConfig;
use crate::problems::Problem;
use crate::random::{sample_perturbation, RngStream};
use crate::measure::LossOracle;
use crate::vector::ParameterVector;

use super::spsa::spsa_gradient_estimate;
use super::trace::{RunTrace, SpsaDraws, StepKind, StepRecord};

/// Maximum pullback steps per entry into the feasibility model.
pub const DEFAULT_PULLBACK_CAP: usize = 100_000;

/// Drives `theta` back into the feasible region, appending one record per
/// pullback step to `steps`. Each step descends the lowest-indexed violated
/// constraint with gain `pullback_gain(k, l)`, where `l` counts steps taken in
/// this call.
fn pull_back(
    problem: &Problem,
    theta: &mut ParameterVector,
    k: usize,
    cfg: &GainConfig,
    cap: usize,
    steps: &mut Vec<StepRecord>,
) -> Result<()> {
    let mut l = 0;
    while let Some(violated) = problem.first_violated(theta) {
        if l == cap {
            return Err(Error::PullbackBudgetExceeded { k, cap });
        }
        let gain = cfg.pullback_gain(k, l);
        let direction = violated.gradient(theta);
        theta.descend(gain, &direction)?;
        steps.push(StepRecord {
            t: steps.len(),
            k,
            kind: StepKind::Pullback {
                constraint: violated.index(),
            },
            theta_after: theta.clone(),
            gain_used: gain,
            draws: None,
        });
        l += 1;
    }
    Ok(())
}

/// Feasibility model. Returns a feasible point together with the pullback
/// steps taken (empty when `theta` is already feasible). Step counters `t`
/// in the returned records start at 0.
pub fn switch_update_model(
    problem: &Problem,
    theta: ParameterVector,
    k: usize,
    cfg: &GainConfig,
    cap: usize,
) -> Result<(ParameterVector, Vec<StepRecord>)> {
    problem.check_dim(&theta)?;
    let mut theta = theta;
    let mut steps = Vec::new();
    pull_back(problem, &mut theta, k, cfg, cap, &mut steps)?;
    Ok((theta, steps))
}

/// Runs switch updating for SPSA iterations `k = 0..=iterations` from the
/// problem's initial point. The initial point is first made feasible with
/// the iteration-0 gains.
pub fn run_su(
    problem: &Problem,
    cfg: &GainConfig,
    iterations: usize,
    rng: &RngStream,
    cap: usize,
) -> Result<RunTrace> {
    let initial = problem.initial_point().clone();
    let mut theta = initial.clone();
    let mut steps = Vec::new();
    let mut oracle = LossOracle::new(problem, *rng);

    pull_back(problem, &mut theta, 0, cfg, cap, &mut steps)?;

    for k in 0..=iterations {
        let a_k = cfg.gain_a(k);
        let c_k = cfg.gain_c(k);
        let delta = sample_perturbation(problem.dim(), rng, k);
        let (gradient, pair) = spsa_gradient_estimate(&mut oracle, &theta, c_k, &delta, k)?;
        theta.descend(a_k, &gradient)?;
        steps.push(StepRecord {
            t: steps.len(),
            k,
            kind: StepKind::Loss,
            theta_after: theta.clone(),
            gain_used: a_k,
            draws: Some(SpsaDraws {
                perturbation: delta,
                noise: pair.noise,
            }),
        });
        pull_back(problem, &mut theta, k, cfg, cap, &mut steps)?;
    }

    Ok(RunTrace {
        steps,
        measurements_used: oracle.measurements(),
        initial_theta: initial,
        final_theta: theta,
    })
}
