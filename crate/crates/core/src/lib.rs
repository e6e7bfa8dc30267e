//! Constrained stochastic optimization with simultaneous perturbation
//! stochastic approximation (SPSA).
//!
//! The central algorithm is *switch updating* (SU): while the iterate is
//! feasible it takes ordinary SPSA steps built from two noisy loss
//! measurements, and whenever it leaves the feasible region it takes
//! deterministic gradient steps on the first violated constraint until
//! feasibility is restored. Three penalty-based SPSA baselines (absolute
//! value, quadratic, augmented Lagrangian) are provided for comparison, along
//! with two benchmark problems, the metrics used to compare the methods, and a
//! replication harness that drives everything with common random numbers.
//!
//! ```
//! use switch_spsa::{engines, gain::GainConfig, problems, random::RngStream};
//!
//! let problem = problems::quadratic_problem();
//! let gains = GainConfig::builder().build().unwrap();
//! let rng = RngStream::new(7, 0);
//! let trace = engines::run_su(&problem, &gains, 200, &rng, 100_000).unwrap();
//! assert!(problem.is_feasible(&trace.final_theta));
//! assert_eq!(trace.measurements_used, 2 * 201);
//! ```

pub mod engines;
pub mod error;
pub mod gain;
pub mod harness;
pub mod measure;
pub mod metrics;
pub mod problems;
pub mod random;
pub mod vector;

pub use error::{Error, Result};
pub use vector::{ParameterVector, PerturbationVector};
