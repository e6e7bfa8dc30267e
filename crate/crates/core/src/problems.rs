//! Benchmark problems and the generic problem description the engines consume.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::ParameterVector;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// One inequality constraint `q_i(theta) <= 0` with its analytic gradient.
#[derive(Clone)]
pub struct Constraint {
    index: usize,
    value: ScalarFn,
    gradient: VectorFn,
}

impl Constraint {
    /// One-based position in the problem's constraint list.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        (self.value)(theta)
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        (self.gradient)(theta)
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Constraint").field("index", &self.index).finish()
    }
}

/// How measurement noise enters `y(theta) = L(theta) + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// i.i.d. `N(0, std_dev^2)` added to the loss.
    Additive { std_dev: f64 },
    /// `eps ~ N(0, std_dev^2 I)` added to the linear coefficient vector, so the
    /// loss is shifted by `theta^T eps` and the noise variance grows with `|theta|^2`.
    ParameterCoupled { std_dev: f64 },
}

/// Known solution and Lagrange multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub theta: ParameterVector,
    pub multipliers: Vec<f64>,
}

#[derive(Clone)]
pub struct Problem {
    name: String,
    dim: usize,
    loss: ScalarFn,
    loss_gradient: Option<VectorFn>,
    noise: NoiseModel,
    constraints: Vec<Constraint>,
    initial_point: ParameterVector,
    reference: Option<Reference>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise", &self.noise)
            .field("constraints", &self.constraints.len())
            .field("initial_point", &self.initial_point)
            .field("reference", &self.reference)
            .finish()
    }
}

impl Problem {
    /// A problem with no constraints, no noise, and the origin as start point.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        loss: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(dim >= 1, "problem dimension must be positive");
        Self {
            name: name.into(),
            dim,
            loss: Arc::new(loss),
            loss_gradient: None,
            noise: NoiseModel::None,
            constraints: Vec::new(),
            initial_point: ParameterVector::zeros(dim),
            reference: None,
        }
    }

    pub fn with_loss_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.loss_gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_constraint(
        mut self,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.constraints.push(Constraint {
            index: self.constraints.len() + 1,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        });
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    /// Same problem with measurement noise switched off.
    pub fn zero_noise(&self) -> Self {
        self.clone().with_noise(NoiseModel::None)
    }

    pub fn with_initial_point(mut self, point: ParameterVector) -> Result<Self> {
        self.check_dim(&point)?;
        self.initial_point = point;
        Ok(self)
    }

    pub fn with_reference(mut self, theta: ParameterVector, multipliers: Vec<f64>) -> Result<Self> {
        self.check_dim(&theta)?;
        if multipliers.len() != self.constraints.len() {
            return Err(Error::DimensionMismatch {
                expected: self.constraints.len(),
                actual: multipliers.len(),
            });
        }
        self.reference = Some(Reference { theta, multipliers });
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise
    }

    pub fn initial_point(&self) -> &ParameterVector {
        &self.initial_point
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    /// Noise-free loss.
    pub fn loss(&self, theta: &[f64]) -> f64 {
        (self.loss)(theta)
    }

    /// Analytic loss gradient. Only test oracles and metrics read this; the
    /// optimizers never do.
    pub fn loss_gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        self.loss_gradient.as_ref().map(|g| g(theta))
    }

    /// `(q_1(theta), ..., q_m(theta))`.
    pub fn constraint_values(&self, theta: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.evaluate(theta)).collect()
    }

    pub fn is_feasible(&self, theta: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.evaluate(theta) <= 0.0)
    }

    /// The lowest-indexed violated constraint, if any.
    pub fn first_violated(&self, theta: &[f64]) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.evaluate(theta) > 0.0)
    }

    pub(crate) fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: theta.len(),
            })
        }
    }
}

// The three constraints shared by both benchmarks.

fn q1(t: &[f64]) -> f64 {
    2.0 * t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + 2.0 * t[0] - t[1] - t[3] - 5.0
}

fn grad_q1(t: &[f64]) -> Vec<f64> {
    vec![4.0 * t[0] + 2.0, 2.0 * t[1] - 1.0, 2.0 * t[2], -1.0]
}

fn q2(t: &[f64]) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>() + t[0] - t[1] + t[2] - t[3] - 8.0
}

fn grad_q2(t: &[f64]) -> Vec<f64> {
    vec![
        2.0 * t[0] + 1.0,
        2.0 * t[1] - 1.0,
        2.0 * t[2] + 1.0,
        2.0 * t[3] - 1.0,
    ]
}

fn q3(t: &[f64]) -> f64 {
    t[0] * t[0] + 2.0 * t[1] * t[1] + t[2] * t[2] + 2.0 * t[3] * t[3] - t[0] - t[3] - 10.0
}

fn grad_q3(t: &[f64]) -> Vec<f64> {
    vec![2.0 * t[0] - 1.0, 4.0 * t[1], 2.0 * t[2], 4.0 * t[3] - 1.0]
}

fn with_benchmark_constraints(problem: Problem) -> Problem {
    problem
        .with_constraint(q1, grad_q1)
        .with_constraint(q2, grad_q2)
        .with_constraint(q3, grad_q3)
}

const BENCHMARK_START: [f64; 4] = [-2.0; 4];
const BENCHMARK_OPTIMUM: [f64; 4] = [0.0, 1.0, 2.0, -1.0];
const BENCHMARK_MULTIPLIERS: [f64; 3] = [2.0, 1.0, 0.0];

/// Four-parameter quadratic loss under three quadratic constraints, with
/// additive `N(0, 4)` measurement noise. Starts infeasible at `(-2, -2, -2, -2)`;
/// the optimum `(0, 1, 2, -1)` has constraints 1 and 2 active with
/// multipliers `(2, 1, 0)`.
pub fn quadratic_problem() -> Problem {
    let loss = |t: &[f64]| {
        t[0] * t[0] + t[1] * t[1] + 2.0 * t[2] * t[2] + t[3] * t[3] - 5.0 * t[0] - 5.0 * t[1]
            - 21.0 * t[2]
            + 7.0 * t[3]
    };
    let gradient = |t: &[f64]| {
        vec![
            2.0 * t[0] - 5.0,
            2.0 * t[1] - 5.0,
            4.0 * t[2] - 21.0,
            2.0 * t[3] + 7.0,
        ]
    };
    with_benchmark_constraints(Problem::new("quadratic", 4, loss).with_loss_gradient(gradient))
        .with_noise(NoiseModel::Additive { std_dev: 2.0 })
        .with_initial_point(ParameterVector::new(BENCHMARK_START.to_vec()).unwrap())
        .and_then(|p| {
            p.with_reference(
                ParameterVector::new(BENCHMARK_OPTIMUM.to_vec()).unwrap(),
                BENCHMARK_MULTIPLIERS.to_vec(),
            )
        })
        .expect("benchmark dimensions are consistent")
}

/// Symmetric quadratic-form matrix of the quartic benchmark.
pub const QUARTIC_B: [[f64; 4]; 4] = [
    [0.0, 0.0, 3.5, 0.0],
    [0.0, 1.0, 0.0, -8.0],
    [3.5, 0.0, 8.0, 0.0],
    [0.0, -8.0, 0.0, 5.0],
];

/// Noise-free linear coefficients of the quartic benchmark.
pub const QUARTIC_V: [f64; 4] = [-19.0, -25.0, -45.0, 31.0];

/// Optimum of the noise-free quartic benchmark, produced by
/// `cargo run --release --example quartic_reference`.
pub const QUARTIC_OPTIMUM: [f64; 4] = [0.0, 1.0, 2.0, -1.0];
pub const QUARTIC_MULTIPLIERS: [f64; 3] = [2.0, 1.0, 0.0];

/// Quartic loss `t1^4 + t2^4 + theta^T B theta + theta^T V` under the same
/// constraints as [`quadratic_problem`]. Noise `eps ~ N(0, 4 I)` is added to
/// `V`, so the measurement noise is `theta^T eps`.
pub fn quartic_problem() -> Problem {
    let loss = |t: &[f64]| {
        let quartic = t[0].powi(4) + t[1].powi(4);
        let mut form = 0.0;
        for (i, row) in QUARTIC_B.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                form += t[i] * b * t[j];
            }
        }
        let linear: f64 = t.iter().zip(QUARTIC_V).map(|(x, v)| x * v).sum();
        quartic + form + linear
    };
    let gradient = |t: &[f64]| {
        (0..4)
            .map(|i| {
                let cubic = if i < 2 { 4.0 * t[i].powi(3) } else { 0.0 };
                let form: f64 = (0..4).map(|j| 2.0 * QUARTIC_B[i][j] * t[j]).sum();
                cubic + form + QUARTIC_V[i]
            })
            .collect()
    };
    with_benchmark_constraints(Problem::new("quartic", 4, loss).with_loss_gradient(gradient))
        .with_noise(NoiseModel::ParameterCoupled { std_dev: 2.0 })
        .with_initial_point(ParameterVector::new(BENCHMARK_START.to_vec()).unwrap())
        .and_then(|p| {
            p.with_reference(
                ParameterVector::new(QUARTIC_OPTIMUM.to_vec()).unwrap(),
                QUARTIC_MULTIPLIERS.to_vec(),
            )
        })
        .expect("benchmark dimensions are consistent")
}

/// Coordinate bound of the synthetic problem's single constraint.
pub const SYNTHETIC_BOUND: f64 = 100.0;

/// Default noise level of the synthetic problem.
pub const SYNTHETIC_NOISE_STD: f64 = 0.1;

/// `L(theta) = |theta - 1|^2` with one far-away inactive bound
/// `theta_1 <= 100`, started at the origin. The optimum is the all-ones vector
/// with a zero multiplier.
pub fn synthetic_interior_problem(dim: usize) -> Problem {
    Problem::new("synthetic", dim, |t: &[f64]| {
        t.iter().map(|x| (x - 1.0) * (x - 1.0)).sum()
    })
    .with_loss_gradient(|t: &[f64]| t.iter().map(|x| 2.0 * (x - 1.0)).collect())
    .with_constraint(
        |t: &[f64]| t[0] - SYNTHETIC_BOUND,
        |t: &[f64]| {
            let mut g = vec![0.0; t.len()];
            g[0] = 1.0;
            g
        },
    )
    .with_noise(NoiseModel::Additive {
        std_dev: SYNTHETIC_NOISE_STD,
    })
    .with_reference(ParameterVector::new(vec![1.0; dim]).unwrap(), vec![0.0])
    .expect("synthetic dimensions are consistent")
}
