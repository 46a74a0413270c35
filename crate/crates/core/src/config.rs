//! Experiment configuration.
//!
//! Config files are flat `key = value` documents in TOML syntax: one key per
//! line, `#` comments, strings in double quotes, lists in brackets. Every key
//! is optional and unknown keys are rejected. The defaults reproduce the
//! baseline scenario (1 um initial separation, 10 ms slots, 10 symbols). The
//! README lists every key.

use std::path::Path;

use serde::Deserialize;

use crate::capacity::BetaSearch;
use crate::channel::{ChannelParams, DEFAULT_QUAD_TOL};
use crate::error::{Error, Result};
use crate::montecarlo::{FidelityMode, SimConfig};
use crate::par::Execution;
use crate::stats::{NoiseParams, RelayProfile, RelayQuality, Schedule};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d0: f64,
    pub tau: f64,
    pub v: f64,
    pub d_p: f64,
    pub d_m: f64,
    pub d_dn: f64,
    pub quad_tol: f64,
    pub k: usize,

    pub beta: f64,
    pub q1: Schedule<u32>,
    pub relay_pd: Schedule<f64>,
    pub relay_pf: Schedule<f64>,

    pub mu_o: f64,
    pub sigma2_o: f64,

    pub trials: u64,
    pub seed: u64,
    pub mode: FidelityMode,
    pub dt: f64,
    pub bridge_correction: bool,
    pub execution: Execution,
    /// Fixed threshold for `simulate`; the per-slot optimum when absent.
    pub sim_gamma: Option<f64>,

    pub roc_gamma_points: usize,
    /// Upper end of the ROC threshold grid; `max_j(mu1 + 6 sigma1)` when absent.
    pub roc_gamma_max: Option<f64>,
    pub roc_pf_targets: Vec<f64>,

    pub capacity_q1: u32,
    pub capacity_sigma2_o: Vec<f64>,
    pub capacity_relay: Vec<[f64; 2]>,
    pub beta_grid_step: f64,
    pub beta_tolerance: f64,

    /// Criteria run by `validate`; all of them when empty.
    pub validate_criteria: Vec<u8>,

    pub out: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let channel = ChannelParams::default();
        let noise = NoiseParams::default();
        let sim = SimConfig::default();
        let search = BetaSearch::default();
        Self {
            d0: channel.d0,
            tau: channel.tau,
            v: channel.v,
            d_p: channel.d_p,
            d_m: channel.d_m,
            d_dn: channel.d_dn,
            quad_tol: DEFAULT_QUAD_TOL,
            k: 10,
            beta: 0.5,
            q1: Schedule::Constant(30),
            relay_pd: Schedule::Constant(0.99),
            relay_pf: Schedule::Constant(0.01),
            mu_o: noise.mu_o,
            sigma2_o: noise.sigma2_o,
            trials: sim.trials,
            seed: sim.seed,
            mode: sim.mode,
            dt: sim.dt,
            bridge_correction: sim.bridge_correction,
            execution: sim.execution,
            sim_gamma: None,
            roc_gamma_points: crate::performance::DEFAULT_ROC_POINTS,
            roc_gamma_max: None,
            roc_pf_targets: vec![0.01],
            capacity_q1: 60,
            capacity_sigma2_o: vec![1.0, 5.0, 10.0, 50.0, 100.0],
            capacity_relay: vec![[0.99, 0.01], [0.85, 0.1]],
            beta_grid_step: search.grid_step,
            beta_tolerance: search.tolerance,
            validate_criteria: Vec::new(),
            out: "out".to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            d0: self.d0,
            tau: self.tau,
            v: self.v,
            d_p: self.d_p,
            d_m: self.d_m,
            d_dn: self.d_dn,
        }
    }

    pub fn relay(&self) -> RelayProfile {
        RelayProfile {
            beta: self.beta,
            q1: self.q1.clone(),
            relay_pd: self.relay_pd.clone(),
            relay_pf: self.relay_pf.clone(),
        }
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams {
            mu_o: self.mu_o,
            sigma2_o: self.sigma2_o,
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            trials: self.trials,
            seed: self.seed,
            mode: self.mode,
            dt: self.dt,
            bridge_correction: self.bridge_correction,
            execution: self.execution,
        }
    }

    pub fn beta_search(&self) -> BetaSearch {
        BetaSearch {
            grid_step: self.beta_grid_step,
            tolerance: self.beta_tolerance,
        }
    }

    pub fn capacity_relays(&self) -> Vec<RelayQuality> {
        self.capacity_relay.iter().map(|[pd, pf]| RelayQuality::new(*pd, *pf)).collect()
    }

    /// Checks every embedded invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        self.channel().validate()?;
        if self.k == 0 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::invalid("quad_tol", "must be > 0"));
        }
        self.relay().validate(self.k)?;
        self.noise().validate()?;
        self.sim().validate(self.tau)?;
        if let Some(g) = self.sim_gamma {
            if g.is_nan() {
                return Err(Error::invalid("sim_gamma", "must be a number"));
            }
        }
        if self.roc_gamma_points < 2 {
            return Err(Error::invalid("roc_gamma_points", "must be >= 2"));
        }
        if let Some(max) = self.roc_gamma_max {
            if !(max > 0.0) {
                return Err(Error::invalid("roc_gamma_max", "must be > 0"));
            }
        }
        if let Some(bad) = self.roc_pf_targets.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::invalid("roc_pf_targets", format!("{bad} outside (0, 1)")));
        }
        if let Some(bad) = self.capacity_sigma2_o.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::invalid("capacity_sigma2_o", format!("{bad} must be >= 0")));
        }
        for q in self.capacity_relays() {
            q.validate().map_err(|e| match e {
                Error::InvalidParameter { reason, .. } => Error::invalid("capacity_relay", reason),
                other => other,
            })?;
        }
        self.beta_search().grid()?;
        if let Some(bad) = self.validate_criteria.iter().find(|id| crate::validation::criterion_name(**id).is_none()) {
            return Err(Error::invalid("validate_criteria", format!("no criterion {bad}")));
        }
        if self.out.is_empty() {
            return Err(Error::invalid("out", "must not be empty"));
        }
        Ok(())
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
