use crate::measure::NoiseDraw;
use crate::vector::{ParameterVector, PerturbationVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// SPSA step built from two loss measurements.
    Loss,
    /// Gradient step on constraint `constraint` (one-based).
    Pullback { constraint: usize },
}

/// Random inputs consumed by one SPSA step.
#[derive(Debug, Clone, PartialEq)]
pub struct SpsaDraws {
    pub perturbation: PerturbationVector,
    pub noise: [NoiseDraw; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Global count of gradient-based steps.
    pub t: usize,
    /// SPSA iteration this step belongs to.
    pub k: usize,
    pub kind: StepKind,
    pub theta_after: ParameterVector,
    pub gain_used: f64,
    /// Present on loss steps only.
    pub draws: Option<SpsaDraws>,
}

impl StepRecord {
    pub fn is_loss_step(&self) -> bool {
        self.kind == StepKind::Loss
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    pub measurements_used: u64,
    pub initial_theta: ParameterVector,
    pub final_theta: ParameterVector,
}

impl RunTrace {
    pub fn loss_steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(|s| s.is_loss_step())
    }

    /// Iterate at the end of each SPSA iteration `k = 0..=K`, i.e. after the
    /// loss step and any pullback steps that follow it.
    pub fn iterates_per_k(&self) -> Vec<&ParameterVector> {
        let mut out: Vec<&ParameterVector> = Vec::new();
        let mut seen_loss = false;
        for step in &self.steps {
            if step.is_loss_step() {
                out.push(&step.theta_after);
                seen_loss = true;
            } else if seen_loss {
                *out.last_mut().expect("loss step pushed") = &step.theta_after;
            }
        }
        out
    }
}
