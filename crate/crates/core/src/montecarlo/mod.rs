//! Stochastic oracles for the closed-form results.
//!
//! * [`simulate_semi_analytic`] draws symbols, relay decisions and received
//!   counts slot by slot and runs the destination detector on them.
//! * [`simulate_particle_q`] tracks individual molecules by Brownian motion
//!   and bins their absorption times into slots.

mod particle;
mod semi_analytic;

pub use particle::{simulate_particle_ages, simulate_particle_q, QEstimateReport};
pub use semi_analytic::{simulate_semi_analytic, simulate_threshold_sets, SimReport, SlotEstimate};

use serde::Deserialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::par::Execution;

/// How closely the semi-analytic simulator follows the analytical model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityMode {
    /// Every term of the received count is drawn from the Gaussian law the
    /// closed forms assign to it, with ISI emissions at prior `beta`.
    FormulaFaithful,
    /// Physical relay: ISI comes from the relay's actual past emissions,
    /// arrivals are multinomial over slots and the counting noise variance is
    /// the realized count.
    SystemFaithful,
}

impl FidelityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FidelityMode::FormulaFaithful => "formula-faithful",
            FidelityMode::SystemFaithful => "system-faithful",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Trials (semi-analytic) or molecules per emission age (particle).
    pub trials: u64,
    pub seed: u64,
    pub mode: FidelityMode,
    /// Particle time step [s].
    pub dt: f64,
    pub bridge_correction: bool,
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1,
            mode: FidelityMode::FormulaFaithful,
            dt: 1e-5,
            bridge_correction: true,
            execution: Execution::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self, tau: f64) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.trials >= crate::rng::MAX_TRIALS {
            return Err(Error::invalid("trials", "must be below 2^40"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.dt > tau / 100.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt",
                format!("must resolve the slot (dt <= tau/100 = {:e}), got {:e}", tau / 100.0, self.dt),
            ));
        }
        Ok(())
    }
}

/// A binomial proportion with its standard error `sqrt(p (1 - p) / n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub successes: u64,
    pub n: u64,
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, n: u64) -> Self {
        if n == 0 {
            return Self {
                successes,
                n,
                value: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let p = successes as f64 / n as f64;
        Self {
            successes,
            n,
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    /// `|value - reference|` in standard errors; infinite when the standard
    /// error is zero and the values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.value - reference).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Sample mean and variance of the received count, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
}

/// Power sums of `x - shift`; the shift keeps the sums well conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct PowerSums {
    n: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl PowerSums {
    pub(crate) fn push(&mut self, y: f64) {
        let y2 = y * y;
        self.n += 1;
        self.s1 += y;
        self.s2 += y2;
        self.s3 += y2 * y;
        self.s4 += y2 * y2;
    }

    pub(crate) fn merge(&mut self, other: &PowerSums) {
        self.n += other.n;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
    }

    pub(crate) fn estimate(&self, shift: f64) -> MomentEstimate {
        let n = self.n as f64;
        if self.n < 2 {
            return MomentEstimate {
                n: self.n,
                mean: if self.n == 1 { self.s1 + shift } else { f64::NAN },
                variance: f64::NAN,
                mean_se: f64::NAN,
                variance_se: f64::NAN,
            };
        }
        let m1 = self.s1 / n;
        let m2 = self.s2 / n;
        let m3 = self.s3 / n;
        let m4 = self.s4 / n;
        let var_pop = m2 - m1 * m1;
        let central4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4);
        let variance = var_pop * n / (n - 1.0);
        MomentEstimate {
            n: self.n,
            mean: m1 + shift,
            variance,
            mean_se: (variance / n).sqrt(),
            variance_se: ((central4 - var_pop * var_pop).max(0.0) / n).sqrt(),
        }
    }
}

/// Pearson chi-square test that two count histograms share one distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn homogeneity_test(a: &[u64], b: &[u64]) -> Result<HomogeneityTest> {
    if a.len() != b.len() {
        return Err(Error::invalid("histograms", "must have the same number of bins"));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("histograms", "must both be non-empty"));
    }
    let total = na + nb;
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        bins += 1;
        let (ea, eb) = (col * na / total, col * nb / total);
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = bins.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid("dof", e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(HomogeneityTest {
        statistic,
        dof,
        p_value,
    })
}
