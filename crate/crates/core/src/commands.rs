//! The `molrelay` subcommands: each turns a validated config into CSV files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};

use crate::capacity::channel_capacity;
use crate::channel::{build_arrival_table_with, ArrivalTable};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{simulate_semi_analytic, SimReport};
use crate::performance::{default_gamma_grid, linspace, roc_curve, thresholds, RocCurve, ThresholdPolicy};
use crate::report::{self, format_number, CapacityRow, Table};
use crate::stats::{all_moments, NoiseParams, RelayProfile};
use crate::validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Arrivals,
    Roc,
    Capacity,
    Simulate,
    Validate,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Arrivals,
        Command::Roc,
        Command::Capacity,
        Command::Simulate,
        Command::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Arrivals => "arrivals",
            Command::Roc => "roc",
            Command::Capacity => "capacity",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid("command", format!("unknown command `{s}`")))
    }
}

/// What a command wrote and whether it succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// False only when `validate` finds a failing criterion.
    pub passed: bool,
    /// Human-readable report for standard output.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_VALIDATION_FAILED
        }
    }
}

/// Exit status for a failed command.
pub fn error_exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

pub fn run_command(command: Command, config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    info!("running {command} into {}", out_dir.display());
    let (tables, passed, summary) = match command {
        Command::Arrivals => (arrivals_tables(config)?, true, String::new()),
        Command::Roc => (roc_tables(config)?, true, String::new()),
        Command::Capacity => (capacity_tables(config)?, true, String::new()),
        Command::Simulate => (simulate_tables(config)?, true, String::new()),
        Command::Validate => {
            let outcomes = validation::run_all(config);
            let passed = outcomes.iter().all(|o| o.passed);
            let summary = validation::summary_text(&outcomes);
            (vec![("validate.csv", validation::outcome_table(&outcomes))], passed, summary)
        }
    };
    let mut files = Vec::with_capacity(tables.len());
    for (name, table) in tables {
        let path = out_dir.join(name);
        table.write(&path)?;
        files.push(path);
    }
    let mut summary = summary;
    for f in &files {
        summary.push_str(&format!("wrote {}\n", f.display()));
    }
    Ok(Outcome { files, passed, summary })
}

pub type NamedTables = Vec<(&'static str, Table)>;

fn arrival_table(config: &ExperimentConfig) -> Result<ArrivalTable> {
    build_arrival_table_with(config.execution, &config.channel(), config.k, config.quad_tol)
}

pub fn arrivals_tables(config: &ExperimentConfig) -> Result<NamedTables> {
    let table = arrival_table(config)?;
    Ok(vec![("arrivals.csv", report::arrivals_table(&table))])
}

pub fn roc(config: &ExperimentConfig) -> Result<RocCurve> {
    let table = arrival_table(config)?;
    let (relay, noise) = (config.relay(), config.noise());
    let grid = match config.roc_gamma_max {
        Some(max) => linspace(0.0, max, config.roc_gamma_points),
        None => default_gamma_grid(&table, &relay, &noise, config.k, config.roc_gamma_points)?,
    };
    roc_curve(&table, &relay, &noise, config.k, &grid)
}

pub fn roc_tables(config: &ExperimentConfig) -> Result<NamedTables> {
    let curve = roc(config)?;
    Ok(vec![
        ("roc.csv", report::roc_table(&curve)),
        ("roc_summary.csv", report::roc_summary_table(&curve, &config.roc_pf_targets)),
    ])
}

/// Capacity for every `(relay quality, sigma2_o)` pair, relay-major.
pub fn capacity_rows(config: &ExperimentConfig) -> Result<Vec<CapacityRow>> {
    let table = arrival_table(config)?;
    let search = config.beta_search();
    let mut rows = Vec::new();
    for quality in config.capacity_relays() {
        let relay = RelayProfile::constant(config.beta, config.capacity_q1, quality);
        for &sigma2_o in &config.capacity_sigma2_o {
            let noise = NoiseParams {
                mu_o: config.mu_o,
                sigma2_o,
            };
            let result = channel_capacity(&table, &relay, &noise, config.k, &search)?;
            if !result.skipped.is_empty() {
                warn!(
                    "relay ({}, {}), sigma2_o = {sigma2_o}: {} prior(s) skipped as degenerate",
                    quality.pd,
                    quality.pf,
                    result.skipped.len()
                );
            }
            rows.push(CapacityRow {
                sigma2_o,
                relay: quality,
                beta_star: result.beta_star,
                capacity: result.capacity,
            });
        }
    }
    Ok(rows)
}

pub fn capacity_tables(config: &ExperimentConfig) -> Result<NamedTables> {
    Ok(vec![("capacity.csv", report::capacity_table(&capacity_rows(config)?))])
}

pub fn simulate(config: &ExperimentConfig) -> Result<SimReport> {
    let table = arrival_table(config)?;
    let (relay, noise) = (config.relay(), config.noise());
    let moments = all_moments(&table, &relay, &noise, config.k)?;
    let policy = match config.sim_gamma {
        Some(gamma) => ThresholdPolicy::Fixed(gamma),
        None => ThresholdPolicy::OptimalPerSlot,
    };
    let settings = thresholds(&moments, &relay, policy)?;
    simulate_semi_analytic(&config.sim(), &table, &relay, &noise, config.k, &settings)
}

pub fn simulate_tables(config: &ExperimentConfig) -> Result<NamedTables> {
    let report = simulate(config)?;
    let threshold = config.sim_gamma.map_or_else(|| "optimal".to_string(), format_number);
    Ok(vec![
        ("sim.csv", report::sim_table(&report)),
        ("sim_meta.csv", report::sim_meta_table(&report, &threshold)),
    ])
}
