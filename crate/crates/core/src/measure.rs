//! Noisy loss measurements `y(theta) = L(theta) + noise`.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problems::{NoiseModel, Problem};
use crate::random::{RngStream, StreamRole};

/// Raw noise realisation behind one measurement: empty for noise-free
/// problems, one value for additive noise, one value per coordinate for
/// parameter-coupled noise.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseDraw(pub Vec<f64>);

impl NoiseDraw {
    /// Noise contributed to a measurement at `theta`.
    pub fn apply(&self, model: NoiseModel, theta: &[f64]) -> f64 {
        match model {
            NoiseModel::None => 0.0,
            NoiseModel::Additive { .. } => self.0[0],
            NoiseModel::ParameterCoupled { .. } => {
                theta.iter().zip(&self.0).map(|(t, e)| t * e).sum()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisySample {
    pub value: f64,
    /// One-based count of measurements taken so far in the run.
    pub measurement_index: u64,
}

/// Noise for the `slot`-th measurement of SPSA iteration `k`.
pub fn draw_noise(model: NoiseModel, dim: usize, rng: &RngStream, k: usize, slot: u32) -> NoiseDraw {
    let (std_dev, count) = match model {
        NoiseModel::None => return NoiseDraw::default(),
        NoiseModel::Additive { std_dev } => (std_dev, 1),
        NoiseModel::ParameterCoupled { std_dev } => (std_dev, dim),
    };
    let mut gen = rng.generator(StreamRole::Noise, k, slot);
    NoiseDraw(
        (0..count)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut gen);
                std_dev * z
            })
            .collect(),
    )
}

/// Counts and performs loss measurements for one run.
#[derive(Debug)]
pub struct LossOracle<'a> {
    problem: &'a Problem,
    rng: RngStream,
    count: u64,
}

impl<'a> LossOracle<'a> {
    pub fn new(problem: &'a Problem, rng: RngStream) -> Self {
        Self {
            problem,
            rng,
            count: 0,
        }
    }

    pub fn measurements(&self) -> u64 {
        self.count
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    /// One noisy measurement at `theta`, using the noise assigned to
    /// `(k, slot)`. Returns the sample and the noise realisation used.
    pub fn measure_loss(
        &mut self,
        theta: &[f64],
        k: usize,
        slot: u32,
    ) -> Result<(NoisySample, NoiseDraw)> {
        self.problem.check_dim(theta)?;
        let model = self.problem.noise_model();
        let draw = draw_noise(model, self.problem.dim(), &self.rng, k, slot);
        self.count += 1;
        let value = self.problem.loss(theta) + draw.apply(model, theta);
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss {
                value,
                measurement_index: self.count,
            });
        }
        Ok((
            NoisySample {
                value,
                measurement_index: self.count,
            },
            draw,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic_problem, quartic_problem, Problem};

    #[test]
    fn zero_noise_is_exact() {
        let p = quadratic_problem().zero_noise();
        let mut oracle = LossOracle::new(&p, RngStream::new(1, 0));
        let (s, _) = oracle.measure_loss(&[0.0; 4], 0, 0).unwrap();
        assert_eq!(s.value, 0.0);
        let (s, _) = oracle.measure_loss(&[0.0, 1.0, 2.0, -1.0], 0, 1).unwrap();
        assert_eq!(s.value, -44.0);
        assert_eq!(s.measurement_index, 2);
        assert_eq!(oracle.measurements(), 2);
    }

    #[test]
    fn counter_strictly_increases() {
        let p = quadratic_problem();
        let mut oracle = LossOracle::new(&p, RngStream::new(1, 0));
        let mut last = 0;
        for k in 0..20 {
            let (s, _) = oracle.measure_loss(&[0.5; 4], k, 0).unwrap();
            assert!(s.measurement_index > last);
            last = s.measurement_index;
        }
    }

    #[test]
    fn quartic_origin_annihilates_noise() {
        let p = quartic_problem();
        let mut oracle = LossOracle::new(&p, RngStream::new(5, 2));
        for k in 0..50 {
            let (s, draw) = oracle.measure_loss(&[0.0; 4], k, 0).unwrap();
            assert_eq!(draw.0.len(), 4);
            assert_eq!(s.value, 0.0);
        }
    }

    #[test]
    fn coupled_noise_variance_scales_with_norm() {
        // var(theta^T eps) = 4 |theta|^2 = 4 at a unit vector.
        let p = quartic_problem();
        let theta = [0.5, -0.5, 0.5, 0.5];
        let rng = RngStream::new(77, 0);
        let n = 40_000;
        let samples: Vec<f64> = (0..n)
            .map(|k| draw_noise(p.noise_model(), 4, &rng, k, 0).apply(p.noise_model(), &theta))
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Standard error of the variance estimate is about 4 sqrt(2/n) ~ 0.03.
        assert!((var - 4.0).abs() < 0.15, "variance {var}");
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let p = Problem::new("bad", 1, |t: &[f64]| if t[0] > 0.0 { f64::NAN } else { 0.0 });
        let mut oracle = LossOracle::new(&p, RngStream::new(0, 0));
        assert!(oracle.measure_loss(&[-1.0], 0, 0).is_ok());
        assert!(matches!(
            oracle.measure_loss(&[1.0], 0, 1),
            Err(Error::NonFiniteLoss { measurement_index: 2, .. })
        ));
    }

    #[test]
    fn dimension_checked() {
        let p = quadratic_problem();
        let mut oracle = LossOracle::new(&p, RngStream::new(0, 0));
        assert!(matches!(
            oracle.measure_loss(&[0.0; 3], 0, 0),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
    }
}
