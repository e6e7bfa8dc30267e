use crate::error::Result;
use crate::measure::{LossOracle, NoiseDraw, NoisySample};
use crate::vector::PerturbationVector;

/// The two measurements `y(theta + c_k delta)` and `y(theta - c_k delta)`.
#[derive(Debug, Clone)]
pub struct MeasurementPair {
    pub theta_plus: Vec<f64>,
    pub theta_minus: Vec<f64>,
    pub plus: NoisySample,
    pub minus: NoisySample,
    pub noise: [NoiseDraw; 2],
}

impl MeasurementPair {
    pub fn difference(&self) -> f64 {
        self.plus.value - self.minus.value
    }
}

/// Measures the loss on both sides of `theta` along `delta`. Noise slot 0 is
/// used for the `+` side and slot 1 for the `-` side of iteration `k`.
pub fn measure_pair(
    oracle: &mut LossOracle<'_>,
    theta: &[f64],
    c_k: f64,
    delta: &PerturbationVector,
    k: usize,
) -> Result<MeasurementPair> {
    debug_assert!(c_k > 0.0);
    let direction = delta.to_f64();
    let theta_plus: Vec<f64> = theta.iter().zip(&direction).map(|(x, d)| x + c_k * d).collect();
    let theta_minus: Vec<f64> = theta.iter().zip(&direction).map(|(x, d)| x - c_k * d).collect();
    let (plus, noise_plus) = oracle.measure_loss(&theta_plus, k, 0)?;
    let (minus, noise_minus) = oracle.measure_loss(&theta_minus, k, 1)?;
    Ok(MeasurementPair {
        theta_plus,
        theta_minus,
        plus,
        minus,
        noise: [noise_plus, noise_minus],
    })
}

/// `difference / (2 c_k delta_j)` for every coordinate `j`.
pub fn difference_gradient(difference: f64, c_k: f64, delta: &PerturbationVector) -> Vec<f64> {
    // delta_j is ±1, so dividing by it is multiplying by it.
    delta
        .signs()
        .iter()
        .map(|&s| difference * f64::from(s) / (2.0 * c_k))
        .collect()
}

/// Simultaneous perturbation gradient estimate at `theta`. Takes exactly two
/// loss measurements.
pub fn spsa_gradient_estimate(
    oracle: &mut LossOracle<'_>,
    theta: &[f64],
    c_k: f64,
    delta: &PerturbationVector,
    k: usize,
) -> Result<(Vec<f64>, MeasurementPair)> {
    let pair = measure_pair(oracle, theta, c_k, delta, k)?;
    Ok((difference_gradient(pair.difference(), c_k, delta), pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Problem;
    use crate::random::RngStream;
    use approx::assert_relative_eq;

    fn sphere() -> Problem {
        Problem::new("sphere", 2, |t: &[f64]| t.iter().map(|x| x * x).sum())
    }

    fn estimate(p: &Problem, theta: &[f64], c: f64, signs: Vec<i8>) -> Vec<f64> {
        let mut oracle = LossOracle::new(p, RngStream::new(0, 0));
        let delta = PerturbationVector::from_signs(signs).unwrap();
        let (g, _) = spsa_gradient_estimate(&mut oracle, theta, c, &delta, 0).unwrap();
        assert_eq!(oracle.measurements(), 2);
        g
    }

    #[test]
    fn hand_evaluated_cases() {
        let p = sphere();
        let g = estimate(&p, &[1.0, 1.0], 0.1, vec![1, 1]);
        // (2.42 - 1.62) / 0.2
        assert_relative_eq!(g[0], 4.0, max_relative = 1e-12);
        assert_relative_eq!(g[1], 4.0, max_relative = 1e-12);
        assert_eq!(estimate(&p, &[1.0, 1.0], 0.1, vec![1, -1]), vec![0.0, 0.0]);
    }

    #[test]
    fn enumeration_average_is_gradient() {
        let p = sphere();
        let mut mean = [0.0; 2];
        for delta in PerturbationVector::enumerate(2) {
            let g = estimate(&p, &[1.0, 1.0], 0.1, delta.signs().to_vec());
            mean[0] += g[0] / 4.0;
            mean[1] += g[1] / 4.0;
        }
        assert_relative_eq!(mean[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(mean[1], 2.0, max_relative = 1e-12);
    }
}
