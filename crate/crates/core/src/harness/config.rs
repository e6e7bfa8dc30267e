use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::gain::GainConfig;
use crate::metrics::Algorithm;
use crate::problems::{self, NoiseModel, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Quadratic,
    Quartic,
    Synthetic,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Quartic => "quartic",
            ProblemKind::Synthetic => "synthetic",
        }
    }

    /// SPSA iteration count used when none is configured.
    pub fn default_iterations(self) -> usize {
        match self {
            ProblemKind::Quartic => 3000,
            ProblemKind::Quadratic | ProblemKind::Synthetic => 2000,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quadratic" => Ok(ProblemKind::Quadratic),
            "quartic" => Ok(ProblemKind::Quartic),
            "synthetic" => Ok(ProblemKind::Synthetic),
            other => Err(format!(
                "unknown problem `{other}` (expected quadratic, quartic or synthetic)"
            )),
        }
    }
}

/// Penalty weight schedule `r_k = r (k + 1)^rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub r: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub algorithms: Vec<Algorithm>,
    pub replicates: usize,
    /// Final SPSA iteration index `K`; each replicate runs `k = 0..=K`.
    pub iterations: usize,
    pub gains: GainConfig,
    pub avp: PenaltySchedule,
    pub qp: PenaltySchedule,
    pub al: PenaltySchedule,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub proportion_window: usize,
    pub pullback_cap: usize,
    pub divergence_bound: f64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub retain_traces: bool,
    pub synthetic_dim: usize,
    pub synthetic_noise_std: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_problem(ProblemKind::Quadratic)
    }
}

impl ExperimentConfig {
    /// Benchmark defaults for `problem`: 50 replicates, all four algorithms,
    /// `a = 0.1, A = 100, c = 1, alpha = 0.602, gamma = 0.101, beta = 1`,
    /// AVP `r = 3.5`, QP `r_k = 2 (k+1)^0.1`, AL `r_k = (k+1)^0.1`.
    pub fn for_problem(problem: ProblemKind) -> Self {
        Self {
            problem,
            algorithms: Algorithm::ALL.to_vec(),
            replicates: 50,
            iterations: problem.default_iterations(),
            gains: GainConfig::default(),
            avp: PenaltySchedule { r: 3.5, rho: 0.0 },
            qp: PenaltySchedule { r: 2.0, rho: 0.1 },
            al: PenaltySchedule { r: 1.0, rho: 0.1 },
            master_seed: 0,
            output_dir: PathBuf::from("results"),
            proportion_window: 100,
            pullback_cap: crate::engines::DEFAULT_PULLBACK_CAP,
            divergence_bound: crate::engines::DEFAULT_DIVERGENCE_BOUND,
            workers: 0,
            retain_traces: false,
            synthetic_dim: 1,
            synthetic_noise_std: problems::SYNTHETIC_NOISE_STD,
        }
    }

    pub fn build_problem(&self) -> Problem {
        match self.problem {
            ProblemKind::Quadratic => problems::quadratic_problem(),
            ProblemKind::Quartic => problems::quartic_problem(),
            ProblemKind::Synthetic => {
                let p = problems::synthetic_interior_problem(self.synthetic_dim);
                if self.synthetic_noise_std > 0.0 {
                    p.with_noise(NoiseModel::Additive {
                        std_dev: self.synthetic_noise_std,
                    })
                } else {
                    p.zero_noise()
                }
            }
        }
    }

    /// Gains with the penalty schedule of `algorithm` filled in.
    pub fn gains_for(&self, algorithm: Algorithm) -> Result<GainConfig> {
        match algorithm {
            Algorithm::Su => Ok(self.gains),
            Algorithm::Avp => self.gains.with_penalty(self.avp.r, self.avp.rho),
            Algorithm::Qp => self.gains.with_penalty(self.qp.r, self.qp.rho),
            Algorithm::Al => self.gains.with_penalty(self.al.r, self.al.rho),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let out_of_range = |key: &str, constraint: &str| {
            Err(Error::OutOfRangeValue {
                key: key.to_string(),
                constraint: constraint.to_string(),
            })
        };
        if self.algorithms.is_empty() {
            return out_of_range("algorithms", "at least one algorithm is required");
        }
        if self.replicates == 0 {
            return out_of_range("replicates", "must be >= 1");
        }
        if self.iterations == 0 {
            return out_of_range("iterations", "must be >= 1");
        }
        if self.proportion_window == 0 {
            return out_of_range("proportion_window", "must be >= 1");
        }
        if self.pullback_cap == 0 {
            return out_of_range("pullback_cap", "must be >= 1");
        }
        if !(self.divergence_bound > 0.0) {
            return out_of_range("divergence_bound", "must be > 0");
        }
        if self.synthetic_dim == 0 {
            return out_of_range("synthetic_dim", "must be >= 1");
        }
        if !(self.synthetic_noise_std >= 0.0) {
            return out_of_range("synthetic_noise_std", "must be >= 0");
        }
        for (key, schedule) in [("avp", self.avp), ("qp", self.qp), ("al", self.al)] {
            if !(schedule.r > 0.0) {
                return out_of_range(&format!("{key}_r"), "must be > 0");
            }
            if !(schedule.rho >= 0.0) {
                return out_of_range(&format!("{key}_rho"), "must be >= 0");
            }
        }
        for (alg, key) in [(Algorithm::Qp, "qp_rho"), (Algorithm::Al, "al_rho")] {
            if self.algorithms.contains(&alg) {
                if let Err(Error::InvalidGain(msg)) = self.gains_for(alg)?.validate_penalty() {
                    return out_of_range(key, msg.trim_start_matches("rho: "));
                }
            }
        }
        Ok(())
    }
}

/// Parses a flat TOML document. Omitted keys take the benchmark defaults of
/// the selected problem.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::MalformedConfig(e.to_string()))?;

    let problem = match table.get("problem") {
        Some(v) => parse_with(v, "problem", |s| s.parse::<ProblemKind>())?,
        None => ProblemKind::Quadratic,
    };
    let mut cfg = ExperimentConfig::for_problem(problem);
    let mut gains = GainConfig::builder();

    for (key, value) in &table {
        match key.as_str() {
            "problem" => {}
            "algorithms" => cfg.algorithms = parse_algorithms(value)?,
            "replicates" => cfg.replicates = as_usize(value, key)?,
            "iterations" | "K" => cfg.iterations = as_usize(value, key)?,
            "master_seed" | "seed" => cfg.master_seed = as_u64(value, key)?,
            "output_dir" => cfg.output_dir = PathBuf::from(as_str(value, key)?),
            "proportion_window" => cfg.proportion_window = as_usize(value, key)?,
            "pullback_cap" => cfg.pullback_cap = as_usize(value, key)?,
            "divergence_bound" => cfg.divergence_bound = as_f64(value, key)?,
            "workers" => cfg.workers = as_usize(value, key)?,
            "retain_traces" => {
                cfg.retain_traces = value.as_bool().ok_or_else(|| type_error(key, "boolean"))?
            }
            "synthetic_dim" => cfg.synthetic_dim = as_usize(value, key)?,
            "synthetic_noise_std" => cfg.synthetic_noise_std = as_f64(value, key)?,
            "avp_r" => cfg.avp.r = as_f64(value, key)?,
            "qp_r" => cfg.qp.r = as_f64(value, key)?,
            "qp_rho" => cfg.qp.rho = as_f64(value, key)?,
            "al_r" => cfg.al.r = as_f64(value, key)?,
            "al_rho" => cfg.al.rho = as_f64(value, key)?,
            "a" => gains = gains.a(as_f64(value, key)?),
            "A" => gains = gains.big_a(as_f64(value, key)?),
            "c" => gains = gains.c(as_f64(value, key)?),
            "alpha" => gains = gains.alpha(as_f64(value, key)?),
            "gamma" => gains = gains.gamma(as_f64(value, key)?),
            "beta" => gains = gains.beta(as_f64(value, key)?),
            other => return Err(Error::UnknownKey(other.to_string())),
        }
    }

    cfg.gains = gains.build().map_err(|e| match e {
        Error::InvalidGain(msg) => {
            let (key, constraint) = msg.split_once(": ").unwrap_or(("gains", &msg));
            Error::OutOfRangeValue {
                key: key.to_string(),
                constraint: constraint.to_string(),
            }
        }
        other => other,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn type_error(key: &str, expected: &str) -> Error {
    Error::OutOfRangeValue {
        key: key.to_string(),
        constraint: format!("expected {expected}"),
    }
}

fn parse_with<T>(value: &Value, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<T> {
    let s = as_str(value, key)?;
    f(s).map_err(|constraint| Error::OutOfRangeValue {
        key: key.to_string(),
        constraint,
    })
}

fn as_str<'v>(value: &'v Value, key: &str) -> Result<&'v str> {
    value.as_str().ok_or_else(|| type_error(key, "string"))
}

fn as_f64(value: &Value, key: &str) -> Result<f64> {
    match value {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_error(key, "number")),
    }
}

fn as_u64(value: &Value, key: &str) -> Result<u64> {
    value
        .as_integer()
        .and_then(|i| u64::try_from(i).ok())
        .ok_or_else(|| type_error(key, "non-negative integer"))
}

fn as_usize(value: &Value, key: &str) -> Result<usize> {
    as_u64(value, key).map(|v| v as usize)
}

fn parse_algorithms(value: &Value) -> Result<Vec<Algorithm>> {
    let names: Vec<&str> = match value {
        Value::String(s) => s.split(',').filter(|s| !s.trim().is_empty()).collect(),
        Value::Array(items) => items
            .iter()
            .map(|v| as_str(v, "algorithms"))
            .collect::<Result<_>>()?,
        _ => return Err(type_error("algorithms", "string or array of strings")),
    };
    parse_algorithm_list(&names)
}

/// Parses algorithm names, dropping duplicates while keeping first-seen order.
pub fn parse_algorithm_list(names: &[&str]) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for name in names {
        let alg = name.parse::<Algorithm>().map_err(|constraint| Error::OutOfRangeValue {
            key: "algorithms".to_string(),
            constraint,
        })?;
        if !out.contains(&alg) {
            out.push(alg);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: Error) -> String {
        match err {
            Error::OutOfRangeValue { key, .. } => key,
            Error::UnknownKey(key) => key,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_document_gives_benchmark_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.problem, ProblemKind::Quadratic);
        assert_eq!(cfg.iterations, 2000);
        assert_eq!(cfg.replicates, 50);
        assert_eq!(cfg.gains.a(), 0.1);
        assert_eq!(cfg.gains.big_a(), 100.0);
        assert_eq!(cfg.gains.alpha(), 0.602);
        assert_eq!(cfg.gains.gamma(), 0.101);
        assert_eq!(cfg.gains.beta(), 1.0);
        assert_eq!(cfg.avp, PenaltySchedule { r: 3.5, rho: 0.0 });
    }

    #[test]
    fn quartic_defaults_to_longer_runs() {
        assert_eq!(parse_config("problem = \"quartic\"").unwrap().iterations, 3000);
    }

    #[test]
    fn alpha_too_small() {
        let err = parse_config("alpha = 0.4").unwrap_err();
        assert_eq!(key_of(err), "alpha");
    }

    #[test]
    fn gamma_outside_window_names_key() {
        let err = parse_config("gamma = 0.2").unwrap_err();
        match err {
            Error::OutOfRangeValue { key, constraint } => {
                assert_eq!(key, "gamma");
                assert!(constraint.contains("alpha/6"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rho_growth_condition() {
        let err = parse_config("qp_rho = 0.3").unwrap_err();
        assert_eq!(key_of(err), "qp_rho");
        let err = parse_config("al_rho = 0.26").unwrap_err();
        assert_eq!(key_of(err), "al_rho");
        // Not checked when the algorithm is not requested.
        assert!(parse_config("qp_rho = 0.3\nalgorithms = \"su,al\"").is_ok());
    }

    #[test]
    fn unknown_key() {
        assert_eq!(key_of(parse_config("speed = 3").unwrap_err()), "speed");
    }

    #[test]
    fn full_document() {
        let cfg = parse_config(
            r#"
            problem = "synthetic"
            algorithms = ["su", "avp"]
            replicates = 3
            iterations = 40
            master_seed = 9
            a = 0.5
            A = 10
            synthetic_dim = 2
            output_dir = "out"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.algorithms, vec![Algorithm::Su, Algorithm::Avp]);
        assert_eq!(cfg.iterations, 40);
        assert_eq!(cfg.gains.big_a(), 10.0);
        assert_eq!(cfg.build_problem().dim(), 2);
    }

    #[test]
    fn empty_algorithm_list_rejected() {
        assert_eq!(key_of(parse_config("algorithms = []").unwrap_err()), "algorithms");
        assert_eq!(key_of(parse_config("algorithms = \"su,xx\"").unwrap_err()), "algorithms");
    }

    #[test]
    fn zero_counts_rejected() {
        assert_eq!(key_of(parse_config("replicates = 0").unwrap_err()), "replicates");
        assert_eq!(key_of(parse_config("iterations = 0").unwrap_err()), "iterations");
    }
}
