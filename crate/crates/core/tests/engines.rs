use proptest::prelude::*;

use switch_spsa::engines::{
    run_penalty_spsa, run_su, spsa_gradient_estimate, PenaltyKind, PenaltyState, StepKind,
    DEFAULT_PULLBACK_CAP,
};
use switch_spsa::gain::GainConfig;
use switch_spsa::measure::LossOracle;
use switch_spsa::problems::{quadratic_problem, quartic_problem, Problem};
use switch_spsa::random::RngStream;
use switch_spsa::{ParameterVector, PerturbationVector};

fn random_quadratic(dim: usize, coeffs: &[f64]) -> (Problem, Vec<Vec<f64>>, Vec<f64>) {
    // L(x) = x^T H x + b^T x with H symmetric built from the coefficient pool.
    let mut h = vec![vec![0.0; dim]; dim];
    let mut it = coeffs.iter().cycle();
    for i in 0..dim {
        for j in i..dim {
            let v = *it.next().unwrap();
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    let b: Vec<f64> = (0..dim).map(|_| *it.next().unwrap()).collect();
    let (hh, bb) = (h.clone(), b.clone());
    let p = Problem::new("random quadratic", dim, move |x: &[f64]| {
        let mut v = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                v += x[i] * hh[i][j] * x[j];
            }
            v += bb[i] * x[i];
        }
        v
    });
    (p, h, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spsa_enumeration_is_unbiased_on_quadratics(
        dim in 1usize..=4,
        coeffs in proptest::collection::vec(-3.0f64..3.0, 15),
        x in proptest::collection::vec(-2.0f64..2.0, 4),
        c in 0.1f64..2.0,
    ) {
        let (problem, h, b) = random_quadratic(dim, &coeffs);
        let theta = &x[..dim];
        let mut mean = vec![0.0; dim];
        let count = (1u32 << dim) as f64;
        for delta in PerturbationVector::enumerate(dim) {
            let mut oracle = LossOracle::new(&problem, RngStream::new(0, 0));
            let (g, _) = spsa_gradient_estimate(&mut oracle, theta, c, &delta, 0).unwrap();
            for (m, gj) in mean.iter_mut().zip(g) {
                *m += gj / count;
            }
        }
        for i in 0..dim {
            let exact: f64 = (0..dim).map(|j| 2.0 * h[i][j] * theta[j]).sum::<f64>() + b[i];
            prop_assert!((mean[i] - exact).abs() <= 1e-12, "{} vs {}", mean[i], exact);
        }
    }

    #[test]
    fn su_final_iterate_is_feasible(
        seed in any::<u64>(),
        start in proptest::collection::vec(-3.0f64..3.0, 4),
        quartic in any::<bool>(),
    ) {
        let base = if quartic { quartic_problem() } else { quadratic_problem() };
        let problem = base.with_initial_point(ParameterVector::new(start).unwrap()).unwrap();
        let trace = run_su(&problem, &GainConfig::default(), 150, &RngStream::new(seed, 0), DEFAULT_PULLBACK_CAP).unwrap();
        prop_assert!(problem.constraint_values(&trace.final_theta).iter().all(|q| *q <= 0.0));
        prop_assert_eq!(trace.measurements_used, 2 * 151);
    }
}

#[test]
fn pullback_records_follow_first_violated_rule() {
    let p = quadratic_problem();
    let trace = run_su(&p, &GainConfig::default(), 400, &RngStream::new(5, 1), DEFAULT_PULLBACK_CAP).unwrap();
    let mut before = trace.initial_theta.clone();
    for step in &trace.steps {
        if let StepKind::Pullback { constraint } = step.kind {
            let q = p.constraint_values(&before);
            assert!(q[constraint - 1] > 0.0);
            assert!(q[..constraint - 1].iter().all(|v| *v <= 0.0));
        }
        before = step.theta_after.clone();
    }
}

#[test]
fn loss_steps_enumerate_iterations() {
    let p = quartic_problem();
    let k_max = 250;
    let trace = run_su(&p, &GainConfig::default(), k_max, &RngStream::new(2, 2), DEFAULT_PULLBACK_CAP).unwrap();
    let ks: Vec<usize> = trace.loss_steps().map(|s| s.k).collect();
    assert_eq!(ks, (0..=k_max).collect::<Vec<_>>());
    // k only advances right after a loss step.
    for w in trace.steps.windows(2) {
        if w[1].k != w[0].k {
            assert!(w[1].is_loss_step());
            assert_eq!(w[1].k, w[0].k + 1);
        }
    }
}

#[test]
fn algorithms_consume_common_random_numbers() {
    let p = quadratic_problem();
    let rng = RngStream::new(99, 7);
    let gains = GainConfig::default();
    let su = run_su(&p, &gains, 300, &rng, DEFAULT_PULLBACK_CAP).unwrap();
    let avp = run_penalty_spsa(&p, PenaltyState::new(PenaltyKind::AbsoluteValue, 3), &gains.with_penalty(3.5, 0.0).unwrap(), 300, &rng).unwrap();
    let draws = |t: &switch_spsa::engines::RunTrace| -> Vec<_> {
        t.loss_steps().map(|s| (s.k, s.draws.clone().unwrap())).collect()
    };
    assert_eq!(draws(&su), draws(&avp));

    // Quartic noise is a vector draw per measurement; still shared.
    let q = quartic_problem();
    let su = run_su(&q, &gains, 50, &rng, DEFAULT_PULLBACK_CAP).unwrap();
    let avp = run_penalty_spsa(&q, PenaltyState::new(PenaltyKind::AbsoluteValue, 3), &gains.with_penalty(3.5, 0.0).unwrap(), 50, &rng).unwrap();
    assert_eq!(draws(&su), draws(&avp));
    assert_eq!(draws(&su)[0].1.noise[0].0.len(), 4);
}

#[test]
fn replicates_use_distinct_streams() {
    let p = quadratic_problem();
    let a = run_su(&p, &GainConfig::default(), 20, &RngStream::new(1, 0), DEFAULT_PULLBACK_CAP).unwrap();
    let b = run_su(&p, &GainConfig::default(), 20, &RngStream::new(1, 1), DEFAULT_PULLBACK_CAP).unwrap();
    assert_ne!(a.final_theta, b.final_theta);
}

#[test]
fn quadratic_proportion_settles_near_inverse_multiplier_sum() {
    // 1 / (1 + 2 + 1 + 0) = 0.25 over a long single run.
    let p = quadratic_problem();
    let trace = run_su(&p, &GainConfig::default(), 3000, &RngStream::new(4, 0), DEFAULT_PULLBACK_CAP).unwrap();
    let tail = &trace.steps[trace.steps.len() - 2000..];
    let share = tail.iter().filter(|s| s.is_loss_step()).count() as f64 / tail.len() as f64;
    assert!((share - 0.25).abs() < 0.05, "{share}");
}
