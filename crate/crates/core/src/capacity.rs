//! Mutual information of the end-to-end binary channel and its maximization
//! over the source prior.

use log::warn;

use crate::channel::ArrivalTable;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::performance::{average_performance, ThresholdPolicy};
use crate::stats::{NoiseParams, RelayProfile};

/// `p * log2(p / mix)` with the `0 log 0 = 0` convention.
fn term(joint_weight: f64, p: f64, mix: f64) -> f64 {
    if joint_weight == 0.0 || p == 0.0 {
        0.0
    } else {
        joint_weight * p * (p / mix).log2()
    }
}

/// Mutual information [bits] between the source symbol and the destination
/// decision, for prior `beta` and end-to-end `(P_D^d, P_F^d)`.
pub fn mutual_information(beta: f64, pd_end: f64, pf_end: f64) -> f64 {
    let p_one = beta;
    let p_zero = 1.0 - beta;
    // Pr(y | x) for x in {0, 1}
    let y0_x0 = 1.0 - pf_end;
    let y1_x0 = pf_end;
    let y0_x1 = 1.0 - pd_end;
    let y1_x1 = pd_end;
    let y0 = y0_x0 * p_zero + y0_x1 * p_one;
    let y1 = y1_x0 * p_zero + y1_x1 * p_one;
    let info = term(p_zero, y0_x0, y0) + term(p_one, y0_x1, y0) + term(p_zero, y1_x0, y1) + term(p_one, y1_x1, y1);
    info.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSearch {
    /// Grid spacing; the grid is `step, 2 step, ..., 1 - step`.
    pub grid_step: f64,
    /// Golden-section refinement stops once the bracket is narrower than this.
    pub tolerance: f64,
}

impl Default for BetaSearch {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            tolerance: 1e-4,
        }
    }
}

impl BetaSearch {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.grid_step > 0.0 && self.grid_step < 0.5) {
            return Err(Error::invalid("beta_grid_step", "must lie in (0, 0.5)"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("beta_tolerance", "must be positive"));
        }
        let divisions = (1.0 / self.grid_step).round() as usize;
        Ok((1..divisions).map(|i| i as f64 / divisions as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Bits per slot.
    pub capacity: f64,
    pub beta_star: f64,
    /// Every evaluated `(beta, objective)`, sorted by `beta`.
    pub per_beta: Vec<(f64, f64)>,
    /// Candidates rejected by the detector's regime guards, with the reason.
    pub skipped: Vec<(f64, String)>,
    /// False when the grid objective had more than one local maximum; the
    /// grid argmax is returned unrefined in that case.
    pub unimodal: bool,
    /// Thresholds are re-derived for every candidate prior.
    pub thresholds_per_beta: bool,
}

impl Error {
    fn is_regime(&self) -> bool {
        match self {
            Error::DegenerateRegime { .. } | Error::ThresholdNegative { .. } | Error::EqualVariances { .. } => true,
            Error::Slot { source, .. } => source.is_regime(),
            _ => false,
        }
    }
}

fn count_peaks(values: &[f64]) -> usize {
    let mut peaks = 0;
    let mut rising = true;
    for w in values.windows(2) {
        if w[1] > w[0] {
            rising = true;
        } else if w[1] < w[0] && rising {
            peaks += 1;
            rising = false;
        }
    }
    if rising && values.len() > 1 {
        peaks += 1;
    }
    peaks
}

/// Maximizes `(1/(k+1)) * sum_j I(beta, P_D^d[j], P_F^d[j])` over `beta`,
/// where `per_slot(beta)` yields the end-to-end pairs for `j = 1..=k`.
pub fn maximize_over_beta<F>(k: usize, search: &BetaSearch, per_slot: F) -> Result<CapacityResult>
where
    F: Fn(f64) -> Result<Vec<(f64, f64)>> + Sync + Send,
{
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let objective = |beta: f64| -> Result<f64> {
        let pairs = per_slot(beta)?;
        let total: f64 = pairs.iter().map(|&(pd, pf)| mutual_information(beta, pd, pf)).sum();
        Ok(total / (k + 1) as f64)
    };

    let grid = search.grid()?;
    let evaluated = par::map_indexed(Execution::default(), grid.len(), |i| objective(grid[i]));

    let mut feasible = Vec::new();
    let mut skipped = Vec::new();
    for (&beta, outcome) in grid.iter().zip(evaluated) {
        match outcome {
            Ok(value) => feasible.push((beta, value)),
            Err(e) if e.is_regime() => skipped.push((beta, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if feasible.is_empty() {
        return Err(Error::NoFeasiblePrior);
    }

    // Strict comparison keeps the smallest beta on ties.
    let best_idx = (0..feasible.len()).fold(0, |best, i| if feasible[i].1 > feasible[best].1 { i } else { best });
    let values: Vec<f64> = feasible.iter().map(|p| p.1).collect();
    let unimodal = count_peaks(&values) <= 1;
    let mut per_beta = feasible.clone();
    let (mut beta_star, mut capacity) = feasible[best_idx];

    if unimodal {
        let lo = feasible[best_idx.saturating_sub(1)].0;
        let hi = feasible[(best_idx + 1).min(feasible.len() - 1)].0;
        let eval = |b: f64| objective(b).unwrap_or(f64::NEG_INFINITY);
        let mut probes = golden_section(lo, hi, search.tolerance, eval);
        for &(b, v) in &probes {
            if v > capacity || (v == capacity && b < beta_star) {
                beta_star = b;
                capacity = v;
            }
        }
        probes.retain(|p| p.1.is_finite());
        per_beta.extend(probes);
    } else {
        warn!("capacity objective is not unimodal over the prior grid; using the grid argmax");
    }
    per_beta.sort_by(|a, b| a.0.total_cmp(&b.0));

    Ok(CapacityResult {
        capacity,
        beta_star,
        per_beta,
        skipped,
        unimodal,
        thresholds_per_beta: true,
    })
}

/// Golden-section search for a maximum on `[lo, hi]`; returns every probe.
fn golden_section<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, tol: f64, f: F) -> Vec<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut probes = Vec::new();
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    probes.push((x1, f1));
    probes.push((x2, f2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
            probes.push((x1, f1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
            probes.push((x2, f2));
        }
    }
    probes
}

/// Capacity of the relay link: for each candidate prior, thresholds are
/// re-optimized per slot and the end-to-end probabilities recomputed.
/// `relay.beta` is ignored.
pub fn channel_capacity(
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
    search: &BetaSearch,
) -> Result<CapacityResult> {
    relay.with_beta(0.5).validate(k)?;
    noise.validate()?;
    maximize_over_beta(k, search, |beta| {
        let report = average_performance(table, &relay.with_beta(beta), noise, k, ThresholdPolicy::OptimalPerSlot)?;
        Ok(report.per_slot.iter().map(|s| (s.pd, s.pf)).collect())
    })
}
