use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use super::{Estimate, FidelityMode, MomentEstimate, PowerSums, SimConfig};
use crate::channel::ArrivalTable;
use crate::detector::{decide, DetectorSetting};
use crate::error::{Error, Result};
use crate::par;
use crate::performance::report_from_parts;
use crate::rng::{DrawKind, StreamFactory};
use crate::stats::{all_moments, isi_terms, NoiseParams, RelayProfile, SlotMoments};

const CHUNK: usize = 1024;

/// Empirical versus analytical performance of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEstimate {
    pub slot: usize,
    pub gamma: f64,
    /// Decisions for 1 among trials whose source symbol was 1.
    pub pd: Estimate,
    /// Decisions for 1 among trials whose source symbol was 0.
    pub pf: Estimate,
    pub pd_formula: f64,
    pub pf_formula: f64,
    /// Received count when the relay stayed silent / fired.
    pub count_h0: MomentEstimate,
    pub count_h1: MomentEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub mode: FidelityMode,
    pub seed: u64,
    pub trials: u64,
    pub slots: Vec<SlotEstimate>,
    /// Mean of the per-slot estimates; the standard error combines the
    /// per-slot errors as independent.
    pub avg_pd: Estimate,
    pub avg_pf: Estimate,
    pub avg_pd_formula: f64,
    pub avg_pf_formula: f64,
}

#[derive(Debug, Clone)]
struct SlotTally {
    n_one: u64,
    n_zero: u64,
    // indexed by threshold set
    hits_one: Vec<u64>,
    hits_zero: Vec<u64>,
    // indexed by the relay decision
    counts: [PowerSums; 2],
}

impl SlotTally {
    fn new(sets: usize) -> Self {
        Self {
            n_one: 0,
            n_zero: 0,
            hits_one: vec![0; sets],
            hits_zero: vec![0; sets],
            counts: Default::default(),
        }
    }

    fn merge(&mut self, other: &SlotTally) {
        self.n_one += other.n_one;
        self.n_zero += other.n_zero;
        for (a, b) in self.hits_one.iter_mut().zip(&other.hits_one) {
            *a += b;
        }
        for (a, b) in self.hits_zero.iter_mut().zip(&other.hits_zero) {
            *a += b;
        }
        self.counts[0].merge(&other.counts[0]);
        self.counts[1].merge(&other.counts[1]);
    }

    fn record(&mut self, symbol: bool, relay_fired: bool, count: f64, m: &SlotMoments, settings: impl Iterator<Item = DetectorSetting>) {
        let hits = if symbol {
            self.n_one += 1;
            &mut self.hits_one
        } else {
            self.n_zero += 1;
            &mut self.hits_zero
        };
        for (h, s) in hits.iter_mut().zip(settings) {
            *h += u64::from(decide(count, &s));
        }
        let shift = if relay_fired { m.mu1 } else { m.mu0 };
        self.counts[usize::from(relay_fired)].push(count - shift);
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

struct Model<'a> {
    table: &'a ArrivalTable,
    relay: &'a RelayProfile,
    noise: &'a NoiseParams,
    moments: &'a [SlotMoments],
    sets: &'a [Vec<DetectorSetting>],
    streams: &'a StreamFactory,
    k: usize,
    // Per-slot ISI term moments (formula mode).
    isi: Vec<Vec<(f64, f64)>>,
}

impl Model<'_> {
    fn source_and_relay(&self, trial: u64, j: usize) -> (bool, bool) {
        let symbol = bernoulli(&mut self.streams.stream(trial, j, DrawKind::Symbol), self.relay.beta);
        let q = self.relay.quality(j);
        let fire_p = if symbol { q.pd } else { q.pf };
        let fired = bernoulli(&mut self.streams.stream(trial, j, DrawKind::Relay), fire_p);
        (symbol, fired)
    }

    fn formula_trial(&self, trial: u64, tallies: &mut [SlotTally]) {
        let sd_o = self.noise.sigma2_o.sqrt();
        for j in 1..=self.k {
            let m = &self.moments[j - 1];
            let (symbol, fired) = self.source_and_relay(trial, j);
            let mut count = 0.0;
            if fired {
                let q0 = self.table.q(0, j);
                let burst = f64::from(self.relay.q1.at(j));
                let mut rng = self.streams.stream(trial, j, DrawKind::Signal);
                count += burst * q0 + (burst * q0 * (1.0 - q0)).sqrt() * normal(&mut rng);
            }
            let mut rng = self.streams.stream(trial, j, DrawKind::Isi);
            for &(mean, var) in &self.isi[j - 1] {
                count += mean + var.sqrt() * normal(&mut rng);
            }
            count += self.noise.mu_o + sd_o * normal(&mut self.streams.stream(trial, j, DrawKind::Msi));
            let expected = if fired { m.mu1 } else { m.mu0 };
            count += expected.sqrt() * normal(&mut self.streams.stream(trial, j, DrawKind::Counting));
            tallies[j - 1].record(symbol, fired, count, m, self.sets.iter().map(|set| set[j - 1]));
        }
    }

    fn system_trial(&self, trial: u64, tallies: &mut [SlotTally]) {
        let k = self.k;
        let sd_o = self.noise.sigma2_o.sqrt();
        let mut arrivals = vec![0u64; k + 1];
        let mut draws = Vec::with_capacity(k);
        for j in 1..=k {
            let (symbol, fired) = self.source_and_relay(trial, j);
            draws.push((symbol, fired));
            if !fired {
                continue;
            }
            // Burst for symbol j: age j, observed for symbols j..=k at offsets 0..=k-j.
            let mut rng = self.streams.stream(trial, j, DrawKind::Signal);
            let mut remaining = u64::from(self.relay.q1.at(j));
            let mut mass_left = 1.0;
            for offset in 0..=(k - j) {
                if remaining == 0 {
                    break;
                }
                let p = self.table.q(offset, j);
                let cond = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 0.0 };
                let hits = binomial(&mut rng, remaining, cond);
                arrivals[j + offset] += hits;
                remaining -= hits;
                mass_left -= p;
            }
        }
        for j in 1..=k {
            let m = &self.moments[j - 1];
            let (symbol, fired) = draws[j - 1];
            let molecules = arrivals[j] as f64;
            let msi = self.noise.mu_o + sd_o * normal(&mut self.streams.stream(trial, j, DrawKind::Msi));
            let realized = (molecules + msi).max(0.0);
            let count = molecules + msi + realized.sqrt() * normal(&mut self.streams.stream(trial, j, DrawKind::Counting));
            tallies[j - 1].record(symbol, fired, count, m, self.sets.iter().map(|set| set[j - 1]));
        }
    }
}

/// Runs the slot-level simulator and compares it with the closed forms at
/// the supplied per-slot thresholds.
pub fn simulate_semi_analytic(
    config: &SimConfig,
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
    settings: &[DetectorSetting],
) -> Result<SimReport> {
    let mut reports = simulate_threshold_sets(config, table, relay, noise, k, &[settings.to_vec()])?;
    Ok(reports.pop().expect("one threshold set"))
}

/// Like [`simulate_semi_analytic`], but scores every threshold set against
/// the same simulated counts. Report `i` belongs to `sets[i]`; the count
/// moments are shared.
pub fn simulate_threshold_sets(
    config: &SimConfig,
    table: &ArrivalTable,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
    sets: &[Vec<DetectorSetting>],
) -> Result<Vec<SimReport>> {
    if k == 0 || k > table.horizon() {
        return Err(Error::invalid("k", format!("must lie in 1..={}", table.horizon())));
    }
    if config.trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    relay.validate(k)?;
    noise.validate()?;
    if sets.is_empty() {
        return Err(Error::invalid("thresholds", "need at least one threshold set"));
    }
    for settings in sets {
        if settings.len() != k {
            return Err(Error::invalid("thresholds", format!("need {k} per-slot thresholds, got {}", settings.len())));
        }
        if let Some(bad) = settings.iter().position(|s| s.gamma.is_nan()) {
            return Err(Error::invalid("thresholds", format!("threshold for slot {} is NaN", bad + 1)));
        }
    }

    let moments = all_moments(table, relay, noise, k)?;
    let isi = (1..=k)
        .map(|j| {
            Ok(isi_terms(j, table, relay)?
                .iter()
                .map(|t| (t.mean(relay.beta), t.variance(relay.beta)))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let streams = StreamFactory::new(config.seed);
    let model = Model {
        table,
        relay,
        noise,
        moments: &moments,
        sets,
        streams: &streams,
        k,
        isi,
    };

    let chunks = par::fold_chunks(
        config.execution,
        config.trials as usize,
        CHUNK,
        || vec![SlotTally::new(sets.len()); k],
        |tallies, trial| match config.mode {
            FidelityMode::FormulaFaithful => model.formula_trial(trial as u64, tallies),
            FidelityMode::SystemFaithful => model.system_trial(trial as u64, tallies),
        },
    );
    let mut total = vec![SlotTally::new(sets.len()); k];
    for chunk in &chunks {
        for (acc, part) in total.iter_mut().zip(chunk) {
            acc.merge(part);
        }
    }

    let reports = sets
        .iter()
        .enumerate()
        .map(|(set, settings)| {
            let formula = report_from_parts(&moments, settings, relay);
            let slots: Vec<SlotEstimate> = total
                .iter()
                .enumerate()
                .map(|(i, t)| SlotEstimate {
                    slot: i + 1,
                    gamma: settings[i].gamma,
                    pd: Estimate::from_counts(t.hits_one[set], t.n_one),
                    pf: Estimate::from_counts(t.hits_zero[set], t.n_zero),
                    pd_formula: formula.per_slot[i].pd,
                    pf_formula: formula.per_slot[i].pf,
                    count_h0: t.counts[0].estimate(moments[i].mu0),
                    count_h1: t.counts[1].estimate(moments[i].mu1),
                })
                .collect();
            SimReport {
                mode: config.mode,
                seed: config.seed,
                trials: config.trials,
                avg_pd: average(slots.iter().map(|s| s.pd)),
                avg_pf: average(slots.iter().map(|s| s.pf)),
                avg_pd_formula: formula.avg_pd,
                avg_pf_formula: formula.avg_pf,
                slots,
            }
        })
        .collect();
    Ok(reports)
}

fn average(estimates: impl Iterator<Item = Estimate>) -> Estimate {
    let all: Vec<Estimate> = estimates.collect();
    let k = all.len() as f64;
    Estimate {
        successes: all.iter().map(|e| e.successes).sum(),
        n: all.iter().map(|e| e.n).sum(),
        value: all.iter().map(|e| e.value).sum::<f64>() / k,
        std_error: all.iter().map(|e| e.std_error.powi(2)).sum::<f64>().sqrt() / k,
    }
}
