//! End-to-end detection and false-alarm probabilities and ROC sweeps.

use crate::channel::ArrivalTable;
use crate::detector::{optimal_threshold, DetectorSetting};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::special::q_function;
use crate::stats::{all_moments, NoiseParams, RelayProfile, RelayQuality, SlotMoments};

pub const DEFAULT_ROC_POINTS: usize = 400;

/// End-to-end `(P_D^d, P_F^d)` of one slot at threshold `gamma`.
///
/// The count exceeds `gamma` with probability `Q((gamma - mu1)/sigma1)` when
/// the relay fired and `Q((gamma - mu0)/sigma0)` when it stayed silent; the
/// relay fires with probability `P_D^r` under H1 and `P_F^r` under H0.
pub fn slot_performance(gamma: f64, moments: &SlotMoments, quality: RelayQuality) -> (f64, f64) {
    let above_burst = q_function((gamma - moments.mu1) / moments.sigma1());
    let above_silent = q_function((gamma - moments.mu0) / moments.sigma0());
    let pd = above_burst * quality.pd + above_silent * (1.0 - quality.pd);
    let pf = above_burst * quality.pf + above_silent * (1.0 - quality.pf);
    (pd, pf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    OptimalPerSlot,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotPerformance {
    /// Symbol index `j`; the decision is made in slot `j + 1`.
    pub slot: usize,
    pub gamma: f64,
    pub pd: f64,
    pub pf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub per_slot: Vec<SlotPerformance>,
    pub avg_pd: f64,
    pub avg_pf: f64,
    pub horizon: usize,
}

/// Per-slot detector settings for a policy.
pub fn thresholds(
    moments: &[SlotMoments],
    relay: &RelayProfile,
    policy: ThresholdPolicy,
) -> Result<Vec<DetectorSetting>> {
    moments
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let j = i + 1;
            match policy {
                ThresholdPolicy::Fixed(gamma) => Ok(DetectorSetting::fixed(gamma)),
                ThresholdPolicy::OptimalPerSlot => {
                    optimal_threshold(m, relay.quality(j), relay.beta).map_err(|e| e.in_slot(j))
                }
            }
        })
        .collect()
}

/// Averages per-slot performance given precomputed moments and thresholds.
pub fn report_from_parts(
    moments: &[SlotMoments],
    settings: &[DetectorSetting],
    relay: &RelayProfile,
) -> PerformanceReport {
    let per_slot: Vec<SlotPerformance> = moments
        .iter()
        .zip(settings)
        .enumerate()
        .map(|(i, (m, s))| {
            let (pd, pf) = slot_performance(s.gamma, m, relay.quality(i + 1));
            SlotPerformance {
                slot: i + 1,
                gamma: s.gamma,
                pd,
                pf,
            }
        })
        .collect();
    let k = per_slot.len() as f64;
    PerformanceReport {
        avg_pd: per_slot.iter().map(|s| s.pd).sum::<f64>() / k,
        avg_pf: per_slot.iter().map(|s| s.pf).sum::<f64>() / k,
        horizon: per_slot.len(),
        per_slot,
    }
}

fn check_inputs(table: &ArrivalTable, relay: &RelayProfile, noise: &NoiseParams, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    if k > table.horizon() {
        return Err(Error::invalid(
            "k",
            format!("horizon {k} exceeds arrival table horizon {}", table.horizon()),
        ));
    }
    relay.validate(k)?;
    noise.validate()
}

/// Average detection and false-alarm probabilities over symbols `1..=k`.
pub fn average_performance(
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
    policy: ThresholdPolicy,
) -> Result<PerformanceReport> {
    check_inputs(table, relay, noise, k)?;
    let moments = all_moments(table, relay, noise, k)?;
    let settings = thresholds(&moments, relay, policy)?;
    Ok(report_from_parts(&moments, &settings, relay))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub gamma: f64,
    pub pf: f64,
    pub pd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Sorted by `gamma` ascending.
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// `P_D` at false-alarm level `target_pf`, by linear interpolation
    /// between the adjacent points bracketing it.
    pub fn pd_at_pf(&self, target_pf: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (hi, lo) = (w[0], w[1]);
            if hi.pf >= target_pf && target_pf >= lo.pf {
                if hi.pf == lo.pf {
                    return Some(hi.pd);
                }
                let t = (target_pf - lo.pf) / (hi.pf - lo.pf);
                Some(lo.pd + t * (hi.pd - lo.pd))
            } else {
                None
            }
        })
    }
}

/// `points` evenly spaced thresholds over `[0, max_j(mu1 + 6 sigma1)]`.
pub fn default_gamma_grid(
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
    points: usize,
) -> Result<Vec<f64>> {
    check_inputs(table, relay, noise, k)?;
    if points < 2 {
        return Err(Error::invalid("roc_gamma_points", "must be >= 2"));
    }
    let top = all_moments(table, relay, noise, k)?
        .iter()
        .map(|m| m.mu1 + 6.0 * m.sigma1())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(linspace(0.0, top, points))
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

/// Sweeps a common fixed threshold across all slots.
pub fn roc_curve(
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
    gamma_grid: &[f64],
) -> Result<RocCurve> {
    check_inputs(table, relay, noise, k)?;
    if gamma_grid.is_empty() {
        return Err(Error::invalid("gamma_grid", "must not be empty"));
    }
    if gamma_grid.windows(2).any(|w| !(w[1] > w[0])) || gamma_grid.iter().any(|g| g.is_nan()) {
        return Err(Error::invalid("gamma_grid", "must be strictly increasing"));
    }
    let moments = all_moments(table, relay, noise, k)?;
    let points = par::map_indexed(Execution::default(), gamma_grid.len(), |i| {
        let gamma = gamma_grid[i];
        let settings = vec![DetectorSetting::fixed(gamma); k];
        let report = report_from_parts(&moments, &settings, relay);
        RocPoint {
            gamma,
            pf: report.avg_pf,
            pd: report.avg_pd,
        }
    });
    Ok(RocCurve { points })
}
