//! Step-size schedules.
//!
//! SPSA uses two decaying sequences: `a_k = a / (k + 1 + A)^alpha` scales the
//! update and `c_k = c / (k + 1)^gamma` scales the perturbation. Pullback steps
//! inside the feasibility model use `a_k (k + l + 1)^beta / (k + 2l + 1)^beta`,
//! which starts at `a_k` and decreases in `l` towards `a_k / 2^beta`. Penalty
//! baselines weight their penalty by `r_k = r (k + 1)^rho`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConfig {
    a: f64,
    big_a: f64,
    c: f64,
    alpha: f64,
    gamma: f64,
    beta: f64,
    r: f64,
    rho: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            a: 0.1,
            big_a: 100.0,
            c: 1.0,
            alpha: 0.602,
            gamma: 0.101,
            beta: 1.0,
            r: 1.0,
            rho: 0.0,
        }
    }
}

impl GainConfig {
    pub fn builder() -> GainConfigBuilder {
        GainConfigBuilder(GainConfig::default())
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn big_a(&self) -> f64 {
        self.big_a
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Copy of this configuration with a different penalty schedule.
    pub fn with_penalty(&self, r: f64, rho: f64) -> Result<Self> {
        GainConfigBuilder(*self).r(r).rho(rho).build()
    }

    /// Update gain `a / (k + 1 + A)^alpha`.
    pub fn gain_a(&self, k: usize) -> f64 {
        update_gain(self.a, self.big_a, self.alpha, k)
    }

    /// Perturbation size `c / (k + 1)^gamma`.
    pub fn gain_c(&self, k: usize) -> f64 {
        perturbation_size(self.c, self.gamma, k)
    }

    /// Gain of the `l`-th pullback step taken after SPSA iteration `k`.
    pub fn pullback_gain(&self, k: usize, l: usize) -> f64 {
        let a_k = self.gain_a(k);
        if self.beta == 0.0 || l == 0 {
            return a_k;
        }
        let (k, l) = (k as f64, l as f64);
        a_k * ((k + l + 1.0) / (k + 2.0 * l + 1.0)).powf(self.beta)
    }

    /// Lower bound `a_k / 2^beta` of the pullback gains at iteration `k`.
    pub fn pullback_floor(&self, k: usize) -> f64 {
        self.gain_a(k) / 2f64.powf(self.beta)
    }

    /// Penalty weight `r (k + 1)^rho`.
    pub fn penalty_weight(&self, k: usize) -> f64 {
        self.r * (k as f64 + 1.0).powf(self.rho)
    }

    /// Growth conditions the penalty schedule must satisfy for the penalty
    /// SPSA baselines to converge.
    pub fn validate_penalty(&self) -> Result<()> {
        let first = self.alpha - self.gamma - 2.0 * self.rho;
        if first <= 0.0 {
            return Err(Error::InvalidGain(format!(
                "rho: alpha - gamma - 2 rho must be > 0 (got {first})"
            )));
        }
        let second = 3.0 * self.gamma - self.alpha / 2.0 + 1.5 * self.rho;
        if second <= 0.0 {
            return Err(Error::InvalidGain(format!(
                "rho: 3 gamma - alpha / 2 + 3 rho / 2 must be > 0 (got {second})"
            )));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidGain(format!("{key}: {what}")))
            }
        };
        let finite = [
            self.a, self.big_a, self.c, self.alpha, self.gamma, self.beta, self.r, self.rho,
        ]
        .iter()
        .all(|v| v.is_finite());
        check(finite, "gains", "all values must be finite")?;
        check(self.a > 0.0, "a", "must be > 0")?;
        check(self.big_a >= 0.0, "A", "must be >= 0")?;
        check(self.c > 0.0, "c", "must be > 0")?;
        check(
            self.alpha > 0.5 && self.alpha <= 1.0,
            "alpha",
            "must lie in (0.5, 1]",
        )?;
        check(
            self.gamma >= self.alpha / 6.0 && self.gamma < self.alpha - 0.5,
            "gamma",
            "must lie in [alpha/6, alpha - 0.5)",
        )?;
        check(self.beta >= 0.0, "beta", "must be >= 0")?;
        check(self.r >= 0.0, "r", "must be >= 0")?;
        check(self.rho >= 0.0, "rho", "must be >= 0")?;
        Ok(())
    }
}

pub fn update_gain(a: f64, big_a: f64, alpha: f64, k: usize) -> f64 {
    a / (k as f64 + 1.0 + big_a).powf(alpha)
}

pub fn perturbation_size(c: f64, gamma: f64, k: usize) -> f64 {
    c / (k as f64 + 1.0).powf(gamma)
}

#[derive(Debug, Clone, Copy)]
pub struct GainConfigBuilder(GainConfig);

impl GainConfigBuilder {
    pub fn a(mut self, v: f64) -> Self {
        self.0.a = v;
        self
    }
    pub fn big_a(mut self, v: f64) -> Self {
        self.0.big_a = v;
        self
    }
    pub fn c(mut self, v: f64) -> Self {
        self.0.c = v;
        self
    }
    pub fn alpha(mut self, v: f64) -> Self {
        self.0.alpha = v;
        self
    }
    pub fn gamma(mut self, v: f64) -> Self {
        self.0.gamma = v;
        self
    }
    pub fn beta(mut self, v: f64) -> Self {
        self.0.beta = v;
        self
    }
    pub fn r(mut self, v: f64) -> Self {
        self.0.r = v;
        self
    }
    pub fn rho(mut self, v: f64) -> Self {
        self.0.rho = v;
        self
    }

    pub fn build(self) -> Result<GainConfig> {
        self.0.validate()?;
        Ok(self.0)
    }
}
