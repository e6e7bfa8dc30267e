//! Comparison metrics: relative error, constraint violation, the share of
//! steps that measure the loss, one-sided Welch tests, and Lagrange
//! multiplier recovery.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engines::RunTrace;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::vector::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Su,
    Avp,
    Qp,
    Al,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Su, Algorithm::Avp, Algorithm::Qp, Algorithm::Al];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Su => "SU",
            Algorithm::Avp => "AVP",
            Algorithm::Qp => "QP",
            Algorithm::Al => "AL",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "su" => Ok(Algorithm::Su),
            "avp" => Ok(Algorithm::Avp),
            "qp" => Ok(Algorithm::Qp),
            "al" => Ok(Algorithm::Al),
            other => Err(format!("unknown algorithm `{other}` (expected su, avp, qp or al)")),
        }
    }
}

/// `|final - optimum| / |initial - optimum|`.
pub fn relative_error(
    final_theta: &ParameterVector,
    initial: &ParameterVector,
    optimum: &ParameterVector,
) -> Result<f64> {
    let baseline = initial.distance(optimum);
    if baseline == 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    Ok(final_theta.distance(optimum) / baseline)
}

/// Mean positive part of the constraint values; zero exactly when feasible.
pub fn violation_q(q_values: &[f64]) -> f64 {
    assert!(!q_values.is_empty(), "violation needs at least one constraint");
    q_values.iter().map(|q| q.max(0.0)).sum::<f64>() / q_values.len() as f64
}

/// Fraction of loss steps among the last `window` steps of a trace.
pub fn measurement_proportion(trace: &RunTrace, window: usize) -> Result<f64> {
    let len = trace.steps.len();
    if window == 0 || window > len {
        return Err(Error::WindowTooLarge { window, len });
    }
    let loss = trace.steps[len - window..]
        .iter()
        .filter(|s| s.is_loss_step())
        .count();
    Ok(loss as f64 / window as f64)
}

/// One-sided Welch test of `H0: mean(su) >= mean(other)`. Returns the
/// lower-tail probability of the t statistic, with Welch-Satterthwaite
/// degrees of freedom.
pub fn one_sided_two_sample_p(su: &[f64], other: &[f64]) -> Result<f64> {
    let n_min = su.len().min(other.len());
    if n_min < 2 {
        return Err(Error::TooFewSamples(n_min));
    }
    let (m1, v1) = mean_var(su);
    let (m2, v2) = mean_var(other);
    let (n1, n2) = (su.len() as f64, other.len() as f64);
    let (s1, s2) = (v1 / n1, v2 / n2);
    let se2 = s1 + s2;
    if se2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = (m1 - m2) / se2.sqrt();
    let df = se2 * se2 / (s1 * s1 / (n1 - 1.0) + s2 * s2 / (n2 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|_| Error::ZeroVariance)?;
    Ok(dist.cdf(t))
}

pub(crate) fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierEstimate {
    pub lambda: Vec<f64>,
    /// `|grad L + sum lambda_i grad q_i|` at the estimate.
    pub residual: f64,
}

pub const DEFAULT_ACTIVE_TOL: f64 = 1e-6;

/// Nonnegative least-squares Lagrange multipliers over the constraints with
/// `|q_i| <= active_tol`; inactive multipliers are zero.
pub fn estimate_multipliers(
    problem: &Problem,
    theta: &ParameterVector,
    active_tol: f64,
) -> Result<MultiplierEstimate> {
    problem.check_dim(theta)?;
    let grad_l = problem.loss_gradient(theta).ok_or(Error::MissingLossGradient)?;
    let active: Vec<usize> = problem
        .constraint_values(theta)
        .iter()
        .enumerate()
        .filter(|(_, q)| q.abs() <= active_tol)
        .map(|(i, _)| i)
        .collect();

    let mut lambda = vec![0.0; problem.num_constraints()];
    if !active.is_empty() {
        let p = problem.dim();
        let columns: Vec<Vec<f64>> = active
            .iter()
            .map(|&i| problem.constraints()[i].gradient(theta))
            .collect();
        let g = DMatrix::from_fn(p, active.len(), |r, c| columns[c][r]);
        let sv = g.clone().svd(false, false).singular_values;
        let max_sv = sv.max();
        if active.len() > p || sv.min() <= 1e-10 * max_sv.max(1.0) {
            return Err(Error::RankDeficientActiveSet);
        }
        let target = -DVector::from_vec(grad_l.clone());
        let solution = nnls(&g, &target);
        for (&i, v) in active.iter().zip(solution.iter()) {
            lambda[i] = *v;
        }
    }

    let mut residual = grad_l;
    for (c, l) in problem.constraints().iter().zip(&lambda) {
        if *l != 0.0 {
            for (r, g) in residual.iter_mut().zip(c.gradient(theta)) {
                *r += l * g;
            }
        }
    }
    let residual = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    Ok(MultiplierEstimate { lambda, residual })
}

/// Lawson-Hanson active-set solver for `min |A x - b|, x >= 0`, assuming `A`
/// has full column rank.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(&idx);
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-14)
            .expect("svd with both factors solves");
        let mut full = DVector::zeros(n);
        for (k, &j) in idx.iter().enumerate() {
            full[j] = sol[k];
        }
        full
    };

    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let s = solve_passive(&passive);
            if (0..n).filter(|&i| passive[i]).all(|i| s[i] > 0.0) {
                x = s;
                break;
            }
            let step = (0..n)
                .filter(|&i| passive[i] && s[i] <= 0.0)
                .map(|i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x += (s - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Final metrics of one algorithm on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateReport {
    pub replicate_id: u64,
    pub algorithm: Algorithm,
    pub relative_error: f64,
    pub violation_q: f64,
    pub proportion_last_window: f64,
    pub measurements_used: u64,
}

impl ReplicateReport {
    pub fn from_trace(
        problem: &Problem,
        replicate_id: u64,
        algorithm: Algorithm,
        trace: &RunTrace,
        window: usize,
    ) -> Result<Self> {
        let optimum = &problem.reference().ok_or(Error::MissingReference)?.theta;
        Ok(Self {
            replicate_id,
            algorithm,
            relative_error: relative_error(&trace.final_theta, &trace.initial_theta, optimum)?,
            violation_q: violation_q(&problem.constraint_values(&trace.final_theta)),
            proportion_last_window: measurement_proportion(trace, window.min(trace.steps.len()))?,
            measurements_used: trace.measurements_used,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub completed: usize,
    pub failed: usize,
    pub mean_relative_error: f64,
    pub mean_violation_q: f64,
    pub mean_proportion: f64,
    pub mean_measurements: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateReport {
    pub summaries: Vec<AlgorithmSummary>,
    /// One-sided p-value of each baseline against SU.
    pub p_values: BTreeMap<Algorithm, f64>,
}

impl AggregateReport {
    /// Averages completed replicates per algorithm, in `algorithms` order.
    /// `failures` counts failed replicates per algorithm.
    pub fn from_reports(
        algorithms: &[Algorithm],
        reports: &[ReplicateReport],
        failures: &BTreeMap<Algorithm, usize>,
    ) -> Self {
        let errors_of = |alg: Algorithm| -> Vec<f64> {
            reports
                .iter()
                .filter(|r| r.algorithm == alg)
                .map(|r| r.relative_error)
                .collect()
        };
        let summaries = algorithms
            .iter()
            .map(|&alg| {
                let rows: Vec<&ReplicateReport> =
                    reports.iter().filter(|r| r.algorithm == alg).collect();
                let avg = |f: &dyn Fn(&ReplicateReport) -> f64| {
                    if rows.is_empty() {
                        f64::NAN
                    } else {
                        rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64
                    }
                };
                AlgorithmSummary {
                    algorithm: alg,
                    completed: rows.len(),
                    failed: failures.get(&alg).copied().unwrap_or(0),
                    mean_relative_error: avg(&|r| r.relative_error),
                    mean_violation_q: avg(&|r| r.violation_q),
                    mean_proportion: avg(&|r| r.proportion_last_window),
                    mean_measurements: avg(&|r| r.measurements_used as f64),
                }
            })
            .collect();

        let mut p_values = BTreeMap::new();
        if algorithms.contains(&Algorithm::Su) {
            let su = errors_of(Algorithm::Su);
            for &alg in algorithms.iter().filter(|a| **a != Algorithm::Su) {
                if let Ok(p) = one_sided_two_sample_p(&su, &errors_of(alg)) {
                    p_values.insert(alg, p);
                }
            }
        }
        Self {
            summaries,
            p_values,
        }
    }

    pub fn summary(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary> {
        self.summaries.iter().find(|s| s.algorithm == algorithm)
    }

    /// Plain-text table in the layout of a results table: error, p-value
    /// against SU, mean violation, and trailing-window proportion.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<5} {:>14} {:>16} {:>12} {:>11} {:>9}\n",
            "algo", "rel. error", "p vs SU", "Q(theta_K)", "proportion", "failed"
        );
        for s in &self.summaries {
            let p = match self.p_values.get(&s.algorithm) {
                Some(p) => format!("{p:.4e}"),
                None => "NA".to_string(),
            };
            out.push_str(&format!(
                "{:<5} {:>14.4} {:>16} {:>12.4} {:>11.4} {:>9}\n",
                s.algorithm.as_str(),
                s.mean_relative_error,
                p,
                s.mean_violation_q,
                s.mean_proportion,
                format!("{}/{}", s.failed, s.failed + s.completed),
            ));
        }
        out
    }
}
