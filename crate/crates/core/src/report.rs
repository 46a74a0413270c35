//! CSV serialization of command results.
//!
//! Every file is UTF-8 with LF line endings and a fixed header. Numbers carry
//! 12 significant digits in the style of C's `%.12g`.

use std::path::Path;

use crate::channel::ArrivalTable;
use crate::error::{Error, Result};
use crate::montecarlo::SimReport;
use crate::performance::RocCurve;
use crate::stats::RelayQuality;

pub const ARRIVALS_HEADER: &[&str] = &["age", "offset", "q"];
pub const ROC_HEADER: &[&str] = &["gamma", "pf", "pd"];
pub const ROC_SUMMARY_HEADER: &[&str] = &["pf_target", "pd"];
pub const CAPACITY_HEADER: &[&str] = &["sigma2_o", "relay_pd", "relay_pf", "beta_star", "capacity_bits_per_slot"];
pub const SIM_HEADER: &[&str] = &["slot", "gamma", "pd", "pd_se", "pd_formula", "pf", "pf_se", "pf_formula"];
pub const SIM_META_HEADER: &[&str] = &["key", "value"];
pub const VALIDATE_HEADER: &[&str] = &["criterion", "name", "status", "detail"];

const SIGNIFICANT: usize = 12;

/// Formats `x` with 12 significant digits, trailing zeros removed, switching
/// to exponent notation outside `[1e-4, 1e12)`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (SIGNIFICANT as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// An in-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

fn nums<const N: usize>(values: [f64; N]) -> Vec<String> {
    values.iter().map(|&v| format_number(v)).collect()
}

pub fn arrivals_table(table: &ArrivalTable) -> Table {
    let mut t = Table::new(ARRIVALS_HEADER);
    for (age, offset, q) in table.cells() {
        t.push(vec![age.to_string(), offset.to_string(), format_number(q)]);
    }
    t
}

pub fn roc_table(curve: &RocCurve) -> Table {
    let mut t = Table::new(ROC_HEADER);
    for p in &curve.points {
        t.push(nums([p.gamma, p.pf, p.pd]));
    }
    t
}

/// Interpolated detection probability at each false-alarm target; `nan`
/// when the target lies outside the swept range.
pub fn roc_summary_table(curve: &RocCurve, targets: &[f64]) -> Table {
    let mut t = Table::new(ROC_SUMMARY_HEADER);
    for &pf in targets {
        t.push(nums([pf, curve.pd_at_pf(pf).unwrap_or(f64::NAN)]));
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityRow {
    pub sigma2_o: f64,
    pub relay: RelayQuality,
    pub beta_star: f64,
    pub capacity: f64,
}

pub fn capacity_table(rows: &[CapacityRow]) -> Table {
    let mut t = Table::new(CAPACITY_HEADER);
    for r in rows {
        t.push(nums([r.sigma2_o, r.relay.pd, r.relay.pf, r.beta_star, r.capacity]));
    }
    t
}

/// One row per slot, then an `avg` row over slots.
pub fn sim_table(report: &SimReport) -> Table {
    let mut t = Table::new(SIM_HEADER);
    for s in &report.slots {
        let mut row = vec![s.slot.to_string()];
        row.extend(nums([
            s.gamma,
            s.pd.value,
            s.pd.std_error,
            s.pd_formula,
            s.pf.value,
            s.pf.std_error,
            s.pf_formula,
        ]));
        t.push(row);
    }
    let mut row = vec!["avg".to_string()];
    let mean_gamma = report.slots.iter().map(|s| s.gamma).sum::<f64>() / report.slots.len() as f64;
    row.extend(nums([
        mean_gamma,
        report.avg_pd.value,
        report.avg_pd.std_error,
        report.avg_pd_formula,
        report.avg_pf.value,
        report.avg_pf.std_error,
        report.avg_pf_formula,
    ]));
    t.push(row);
    t
}

pub fn sim_meta_table(report: &SimReport, threshold: &str) -> Table {
    let mut t = Table::new(SIM_META_HEADER);
    for (k, v) in [
        ("mode", report.mode.as_str().to_string()),
        ("seed", report.seed.to_string()),
        ("trials", report.trials.to_string()),
        ("slots", report.slots.len().to_string()),
        ("threshold", threshold.to_string()),
    ] {
        t.push(vec![k.to_string(), v]);
    }
    t
}
