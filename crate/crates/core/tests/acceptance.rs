//! Acceptance suite: every criterion on the baseline config, one line each.
//!
//! Runs without the libtest harness so the table prints on success as well.
//! `cargo test -p molrelay --test acceptance -- 4 9` runs a subset.

use std::process::ExitCode;

use molrelay::config::ExperimentConfig;
use molrelay::validation::{run_criterion, summary_line, CRITERIA};

fn main() -> ExitCode {
    let wanted: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let config = ExperimentConfig::default();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, _) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let outcome = run_criterion(id, &config).expect("listed criterion");
        println!("{}", summary_line(&outcome));
        ran += 1;
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {ran}/{ran} criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
