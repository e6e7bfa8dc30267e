//! Recomputes the stored optimum of the noise-free quartic benchmark.
//!
//! Several starting points are driven to a KKT point by deterministic
//! gradient descent whose feasibility is restored with the same pullback
//! model the optimizer uses. The best point is then polished by Newton's
//! method on the KKT system of its active set.
//!
//! Run with `cargo run --release --example quartic_reference`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use switch_spsa::engines::switch_update_model;
use switch_spsa::gain::GainConfig;
use switch_spsa::metrics::estimate_multipliers;
use switch_spsa::problems::{quartic_problem, Problem, QUARTIC_OPTIMUM};
use switch_spsa::ParameterVector;

fn descend(problem: &Problem, start: Vec<f64>, gains: &GainConfig) -> ParameterVector {
    let mut theta = ParameterVector::new(start).unwrap();
    for k in 0..20_000 {
        let grad = problem.loss_gradient(&theta).unwrap();
        let step: Vec<f64> = theta
            .iter()
            .zip(&grad)
            .map(|(x, g)| x - gains.gain_a(k) * g)
            .collect();
        theta = switch_update_model(problem, ParameterVector::new(step).unwrap(), k, gains, 100_000)
            .unwrap()
            .0;
    }
    theta
}

/// Newton iterations on `grad L + sum lambda_i grad q_i = 0, q_i = 0 (i active)`.
fn polish(problem: &Problem, theta: &[f64], active: &[usize], lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = problem.dim();
    let m = active.len();
    let mut x: Vec<f64> = theta.to_vec();
    let mut lam: Vec<f64> = active.iter().map(|&i| lambda[i]).collect();
    let residual = |x: &[f64], lam: &[f64]| -> DVector<f64> {
        let mut r = problem.loss_gradient(x).unwrap();
        for (&i, l) in active.iter().zip(lam) {
            for (rj, g) in r.iter_mut().zip(problem.constraints()[i].gradient(x)) {
                *rj += l * g;
            }
        }
        r.extend(active.iter().map(|&i| problem.constraints()[i].evaluate(x)));
        DVector::from_vec(r)
    };
    for _ in 0..50 {
        let r0 = residual(&x, &lam);
        if r0.norm() < 1e-14 {
            break;
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(p + m, p + m);
        for j in 0..p + m {
            let (mut xp, mut xm, mut lp, mut lm) = (x.clone(), x.clone(), lam.clone(), lam.clone());
            if j < p {
                xp[j] += h;
                xm[j] -= h;
            } else {
                lp[j - p] += h;
                lm[j - p] -= h;
            }
            let col = (residual(&xp, &lp) - residual(&xm, &lm)) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = jac.lu().solve(&r0).expect("nonsingular KKT matrix");
        for j in 0..p {
            x[j] -= step[j];
        }
        for j in 0..m {
            lam[j] -= step[p + j];
        }
    }
    (x, lam)
}

fn main() {
    let problem = quartic_problem().zero_noise();
    let gains = GainConfig::builder().a(0.05).big_a(10.0).beta(1.0).build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2021);

    let mut best: Option<(f64, ParameterVector)> = None;
    for start in 0..12 {
        let x0: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let theta = descend(&problem, x0, &gains);
        let loss = problem.loss(&theta);
        println!("start {start:2}: loss {loss:.10} at {:?}", theta.as_slice());
        if best.as_ref().is_none_or(|(l, _)| loss < *l) {
            best = Some((loss, theta));
        }
    }
    let (_, theta) = best.unwrap();
    let rough = estimate_multipliers(&problem, &theta, 1e-2).unwrap();
    let active: Vec<usize> = problem
        .constraint_values(&theta)
        .iter()
        .enumerate()
        .filter(|(_, q)| q.abs() <= 1e-2)
        .map(|(i, _)| i)
        .collect();
    let (x, lam) = polish(&problem, &theta, &active, &rough.lambda);
    let x = ParameterVector::new(x).unwrap();
    assert!(problem.constraint_values(&x).iter().all(|q| *q < 1e-12));
    let fine = estimate_multipliers(&problem, &x, 1e-10).unwrap();

    println!("optimum     {:?}", x.as_slice());
    println!("active set  {:?} multipliers {:?}", active.iter().map(|i| i + 1).collect::<Vec<_>>(), lam);
    println!("loss        {:.12}", problem.loss(&x));
    println!("constraints {:?}", problem.constraint_values(&x));
    println!("KKT residual {:.3e}, multipliers {:?}", fine.residual, fine.lambda);
    let stored = ParameterVector::new(QUARTIC_OPTIMUM.to_vec()).unwrap();
    println!("distance to stored optimum {:.3e}", x.distance(&stored));
    assert!(x.distance(&stored) < 1e-10, "stored optimum is stale");
}
