//! Relay-assisted mobile molecular communication over a 1-D flow-induced
//! diffusive channel.
//!
//! A relay decodes each source symbol with finite reliability and forwards it
//! to a mobile destination as a burst of molecules. The crate provides:
//!
//! * [`channel`]: first-hitting-time density and slot-binned arrival
//!   probabilities,
//! * [`stats`]: per-slot hypothesis moments of the received count,
//! * [`detector`]: the likelihood-ratio-optimal threshold,
//! * [`performance`]: end-to-end detection/false-alarm and ROC sweeps,
//! * [`capacity`]: mutual information and capacity over the source prior,
//! * [`montecarlo`]: slot-level and particle-level simulators that check the
//!   closed forms,
//! * [`config`], [`commands`] and [`validation`]: the experiment harness
//!   behind the `molrelay` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod commands;
pub mod config;
pub mod detector;
pub mod error;
pub mod montecarlo;
pub mod par;
pub mod performance;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod special;
pub mod stats;
pub mod validation;

pub use capacity::{channel_capacity, maximize_over_beta, mutual_information, BetaSearch, CapacityResult};
pub use channel::{arrival_prob, build_arrival_table, first_hit_pdf, ArrivalTable, ChannelParams};
pub use detector::{decide, optimal_threshold, DetectorSetting};
pub use error::{Error, Result};
pub use montecarlo::{simulate_particle_q, simulate_semi_analytic, FidelityMode, SimConfig, SimReport};
pub use par::Execution;
pub use performance::{average_performance, roc_curve, slot_performance, PerformanceReport, RocCurve, ThresholdPolicy};
pub use stats::{alt_moments, null_moments, NoiseParams, RelayProfile, RelayQuality, Schedule, SlotMoments};
