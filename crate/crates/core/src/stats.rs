//! Per-slot Gaussian moments of the destination's received molecule count.
//!
//! Symbol `j` (decoded by the relay in slot `j`) is forwarded in slot `j + 1`
//! and observed there. Under H0 the count holds ISI from the relay's earlier
//! emissions, MSI and counting noise; under H1 it additionally holds the
//! current burst.

use serde::Deserialize;

use crate::channel::ArrivalTable;
use crate::error::{Error, Result};

/// A per-symbol quantity that is either constant or given slot by slot.
///
/// Indexed by symbol `j = 1..=k`; for molecule budgets, entry `j` is the
/// burst emitted in slot `j + 1`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Schedule<T> {
    Constant(T),
    PerSlot(Vec<T>),
}

impl<T: Copy> Schedule<T> {
    /// Value for symbol `j` (1-based).
    ///
    /// Panics if a per-slot schedule is shorter than `j`; call
    /// [`Schedule::covers`] first.
    pub fn at(&self, j: usize) -> T {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PerSlot(values) => values[j - 1],
        }
    }

    pub fn covers(&self, k: usize) -> bool {
        match self {
            Schedule::Constant(_) => true,
            Schedule::PerSlot(values) => values.len() >= k,
        }
    }

    fn values(&self) -> &[T] {
        match self {
            Schedule::Constant(v) => std::slice::from_ref(v),
            Schedule::PerSlot(values) => values,
        }
    }
}

impl<T> From<T> for Schedule<T> {
    fn from(value: T) -> Self {
        Schedule::Constant(value)
    }
}

/// Detection quality of the relay: `(P_D^r, P_F^r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayQuality {
    pub pd: f64,
    pub pf: f64,
}

impl RelayQuality {
    pub fn new(pd: f64, pf: f64) -> Self {
        Self { pd, pf }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pd) {
            return Err(Error::invalid("relay_pd", format!("must lie in [0, 1], got {}", self.pd)));
        }
        if !(0.0..=1.0).contains(&self.pf) {
            return Err(Error::invalid("relay_pf", format!("must lie in [0, 1], got {}", self.pf)));
        }
        if self.pf > self.pd {
            return Err(Error::invalid(
                "relay_pf",
                format!("must not exceed relay_pd ({} > {})", self.pf, self.pd),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayProfile {
    /// Prior probability of symbol 1.
    pub beta: f64,
    /// Molecules per relay burst.
    pub q1: Schedule<u32>,
    pub relay_pd: Schedule<f64>,
    pub relay_pf: Schedule<f64>,
}

impl RelayProfile {
    pub fn constant(beta: f64, q1: u32, quality: RelayQuality) -> Self {
        Self {
            beta,
            q1: Schedule::Constant(q1),
            relay_pd: Schedule::Constant(quality.pd),
            relay_pf: Schedule::Constant(quality.pf),
        }
    }

    pub fn quality(&self, j: usize) -> RelayQuality {
        RelayQuality::new(self.relay_pd.at(j), self.relay_pf.at(j))
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self {
            beta,
            ..self.clone()
        }
    }

    pub fn with_quality(&self, quality: RelayQuality) -> Self {
        Self {
            relay_pd: Schedule::Constant(quality.pd),
            relay_pf: Schedule::Constant(quality.pf),
            ..self.clone()
        }
    }

    /// Checks the profile for symbols `1..=k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        if !self.q1.covers(k) {
            return Err(Error::invalid("q1", format!("schedule shorter than horizon {k}")));
        }
        if !self.relay_pd.covers(k) || !self.relay_pf.covers(k) {
            return Err(Error::invalid("relay_pd", format!("schedule shorter than horizon {k}")));
        }
        for j in 1..=k {
            self.quality(j).validate()?;
        }
        if self.relay_pd.values().iter().chain(self.relay_pf.values()).any(|p| p.is_nan()) {
            return Err(Error::invalid("relay_pd", "NaN entry"));
        }
        Ok(())
    }
}

/// Multi-source interference statistics.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct NoiseParams {
    pub mu_o: f64,
    pub sigma2_o: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            mu_o: 10.0,
            sigma2_o: 10.0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_o.is_finite() && self.mu_o >= 0.0) {
            return Err(Error::invalid("mu_o", format!("must be >= 0, got {}", self.mu_o)));
        }
        if !(self.sigma2_o.is_finite() && self.sigma2_o >= 0.0) {
            return Err(Error::invalid("sigma2_o", format!("must be >= 0, got {}", self.sigma2_o)));
        }
        Ok(())
    }
}

/// Gaussian moments of the received count under H0 and H1 for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotMoments {
    pub mu0: f64,
    pub sigma2_0: f64,
    pub mu1: f64,
    pub sigma2_1: f64,
}

impl SlotMoments {
    pub fn sigma0(&self) -> f64 {
        self.sigma2_0.sqrt()
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma2_1.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("mu0", self.mu0),
            ("sigma2_0", self.sigma2_0),
            ("mu1", self.mu1),
            ("sigma2_1", self.sigma2_1),
        ];
        for (field, value) in all {
            if !value.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if !(self.sigma2_0 > 0.0) {
            return Err(Error::invalid("sigma2_0", format!("must be > 0, got {}", self.sigma2_0)));
        }
        if self.sigma2_1 < self.sigma2_0 {
            return Err(Error::invalid("sigma2_1", "must be >= sigma2_0"));
        }
        Ok(())
    }
}

/// One ISI term of the H0 count: molecules from the burst of symbol
/// `j - i + 1` still arriving `i - 1` slots after emission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiTerm {
    pub symbol: usize,
    pub molecules: u32,
    pub offset: usize,
    pub age: usize,
    pub q: f64,
}

impl IsiTerm {
    /// Mean contribution `beta Q q`.
    pub fn mean(&self, beta: f64) -> f64 {
        beta * f64::from(self.molecules) * self.q
    }

    /// Variance contribution `beta Q q (1 - q) + beta (1 - beta) (Q q)^2`.
    pub fn variance(&self, beta: f64) -> f64 {
        let n = f64::from(self.molecules);
        beta * n * self.q * (1.0 - self.q) + beta * (1.0 - beta) * (n * self.q).powi(2)
    }
}

fn check_slot(j: usize, table: &ArrivalTable) -> Result<()> {
    if j == 0 || j > table.horizon() {
        return Err(Error::SlotOutOfRange {
            slot: j,
            horizon: table.horizon(),
        });
    }
    Ok(())
}

/// ISI terms `i = 2..=j` seen while observing symbol `j`.
///
/// Term `i` is the burst for symbol `j - i + 1`, emitted at the start of slot
/// `j - i + 2`, so it carries mobility age `j - i + 1` and lands `i - 1` slots
/// after emission.
pub fn isi_terms(j: usize, table: &ArrivalTable, relay: &RelayProfile) -> Result<Vec<IsiTerm>> {
    check_slot(j, table)?;
    Ok((2..=j)
        .map(|i| {
            let symbol = j - i + 1;
            let (offset, age) = (i - 1, j - i + 1);
            IsiTerm {
                symbol,
                molecules: relay.q1.at(symbol),
                offset,
                age,
                q: table.q(offset, age),
            }
        })
        .collect())
}

/// `(mu0, sigma2_0)` of the count observed for symbol `j`.
pub fn null_moments(
    j: usize,
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
) -> Result<(f64, f64)> {
    let terms = isi_terms(j, table, relay)?;
    let beta = relay.beta;
    let mu0 = terms.iter().map(|t| t.mean(beta)).sum::<f64>() + noise.mu_o;
    let isi_var: f64 = terms.iter().map(|t| t.variance(beta)).sum();
    // Counting noise has variance equal to the expected count.
    let sigma2_0 = isi_var + noise.sigma2_o + mu0;
    Ok((mu0, sigma2_0))
}

/// Full H0/H1 moments of the count observed for symbol `j`.
pub fn alt_moments(
    j: usize,
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
) -> Result<SlotMoments> {
    let (mu0, sigma2_0) = null_moments(j, table, relay, noise)?;
    let q0 = table.q(0, j);
    let burst = f64::from(relay.q1.at(j));
    Ok(SlotMoments {
        mu0,
        sigma2_0,
        mu1: burst * q0 + mu0,
        sigma2_1: burst * q0 * (2.0 - q0) + sigma2_0,
    })
}

/// Moments for every symbol `1..=k`.
pub fn all_moments(
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
) -> Result<Vec<SlotMoments>> {
    (1..=k).map(|j| alt_moments(j, table, relay, noise)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_table() -> ArrivalTable {
        ArrivalTable::from_rows(
            vec![
                vec![0.6, 0.1, 0.05],
                vec![0.5, 0.12, 0.06],
                vec![0.45, 0.13, 0.07],
            ],
            0.0,
        )
        .unwrap()
    }

    fn relay(beta: f64, q1: u32) -> RelayProfile {
        RelayProfile::constant(beta, q1, RelayQuality::new(0.99, 0.01))
    }

    #[test]
    fn first_slot_has_no_isi() {
        let noise = NoiseParams::default();
        let (mu0, s0) = null_moments(1, &toy_table(), &relay(0.5, 30), &noise).unwrap();
        assert_eq!((mu0, s0), (10.0, 20.0));
    }

    #[test]
    fn vanishing_prior_removes_isi() {
        let noise = NoiseParams { mu_o: 7.0, sigma2_o: 3.0 };
        let (mu0, _) = null_moments(3, &toy_table(), &relay(1e-300, 50), &noise).unwrap();
        assert_relative_eq!(mu0, 7.0, max_relative = 1e-12);
    }

    #[test]
    fn isi_terms_use_emission_age() {
        // j = 3: i = 2 -> burst of symbol 2, offset 1, age 2; i = 3 -> symbol 1, offset 2, age 1
        let terms = isi_terms(3, &toy_table(), &relay(0.5, 30)).unwrap();
        assert_eq!(terms.len(), 2);
        assert_eq!((terms[0].symbol, terms[0].offset, terms[0].age), (2, 1, 2));
        assert_eq!(terms[0].q, 0.12);
        assert_eq!((terms[1].symbol, terms[1].offset, terms[1].age), (1, 2, 1));
        assert_eq!(terms[1].q, 0.05);
    }

    #[test]
    fn hand_computed_third_slot() {
        let noise = NoiseParams { mu_o: 10.0, sigma2_o: 10.0 };
        let m = alt_moments(3, &toy_table(), &relay(0.5, 30), &noise).unwrap();
        // ISI: 0.5*30*0.12 + 0.5*30*0.05 = 1.8 + 0.75
        assert_relative_eq!(m.mu0, 12.55, max_relative = 1e-14);
        let var_a = 0.5 * 30.0 * 0.12 * 0.88 + 0.25 * 3.6f64.powi(2);
        let var_b = 0.5 * 30.0 * 0.05 * 0.95 + 0.25 * 1.5f64.powi(2);
        assert_relative_eq!(m.sigma2_0, var_a + var_b + 10.0 + 12.55, max_relative = 1e-14);
        assert_relative_eq!(m.mu1, 30.0 * 0.45 + 12.55, max_relative = 1e-14);
        assert_relative_eq!(m.sigma2_1, 30.0 * 0.45 * 1.55 + m.sigma2_0, max_relative = 1e-14);
    }

    #[test]
    fn silent_relay_has_identical_hypotheses() {
        let m = alt_moments(2, &toy_table(), &relay(0.5, 0), &NoiseParams::default()).unwrap();
        assert_eq!(m.mu0, m.mu1);
        assert_eq!(m.sigma2_0, m.sigma2_1);
    }

    #[test]
    fn certain_arrival_adds_burst_size_to_variance() {
        let table = ArrivalTable::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]], 0.0).unwrap();
        let m = alt_moments(2, &table, &relay(0.5, 40), &NoiseParams::default()).unwrap();
        assert_relative_eq!(m.sigma2_1 - m.sigma2_0, 40.0, max_relative = 1e-14);
    }

    #[test]
    fn per_slot_budget_is_indexed_by_symbol() {
        let mut r = relay(0.5, 0);
        r.q1 = Schedule::PerSlot(vec![10, 20, 40]);
        let noise = NoiseParams { mu_o: 0.0, sigma2_o: 0.0 };
        let m = alt_moments(3, &toy_table(), &r, &noise).unwrap();
        // ISI from symbol 2 (20 molecules, q=0.12) and symbol 1 (10 molecules, q=0.05)
        assert_relative_eq!(m.mu0, 0.5 * 20.0 * 0.12 + 0.5 * 10.0 * 0.05, max_relative = 1e-14);
        assert_relative_eq!(m.mu1 - m.mu0, 40.0 * 0.45, max_relative = 1e-14);
    }

    #[test]
    fn slot_range_checked() {
        let t = toy_table();
        let r = relay(0.5, 30);
        let n = NoiseParams::default();
        assert!(matches!(
            null_moments(0, &t, &r, &n),
            Err(Error::SlotOutOfRange { slot: 0, horizon: 3 })
        ));
        assert!(alt_moments(4, &t, &r, &n).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(relay(1.5, 30).validate(3).is_err());
        assert!(relay(0.0, 30).validate(3).is_err());
        let bad = RelayProfile::constant(0.5, 30, RelayQuality::new(0.2, 0.3));
        assert!(bad.validate(3).is_err());
        let mut short = relay(0.5, 30);
        short.q1 = Schedule::PerSlot(vec![1, 2]);
        assert!(short.validate(3).is_err());
        assert!(relay(0.5, 30).validate(3).is_ok());
        assert!(NoiseParams { mu_o: -1.0, sigma2_o: 1.0 }.validate().is_err());
    }
}
