use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Estimate, SimConfig};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{DrawKind, StreamFactory};

const CHUNK: usize = 4096;

/// Histogram of absorption slots from the particle simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct QEstimateReport {
    pub seed: u64,
    pub molecules_per_age: u64,
    pub dt: f64,
    pub bridge_correction: bool,
    /// Offsets tracked per age; molecules still free after this many slots
    /// count as lost.
    pub horizon: usize,
    pub ages: Vec<usize>,
    /// `counts[i][m]`: molecules of age `ages[i]` absorbed at offset `m`.
    pub counts: Vec<Vec<u64>>,
    pub lost: Vec<u64>,
}

impl QEstimateReport {
    pub fn estimate(&self, offset: usize, age: usize) -> Option<Estimate> {
        let i = self.ages.iter().position(|&a| a == age)?;
        let hits = *self.counts[i].get(offset)?;
        Some(Estimate::from_counts(hits, self.molecules_per_age))
    }

    /// Offset histogram followed by the lost count, for homogeneity tests.
    pub fn histogram(&self, age: usize) -> Option<Vec<u64>> {
        let i = self.ages.iter().position(|&a| a == age)?;
        let mut h = self.counts[i].clone();
        h.push(self.lost[i]);
        Some(h)
    }
}

struct Walk {
    tau: f64,
    d0: f64,
    v: f64,
    d_m: f64,
    d_dn: f64,
    step_mol: f64,
    step_dn: f64,
    drift_step: f64,
    // 1 / (D_rel dt) for the bridge crossing probability
    bridge_scale: Option<f64>,
    steps_per_slot: usize,
    horizon: usize,
}

impl Walk {
    /// Absorption offset of one molecule, or `None` if it outlives the horizon.
    fn run(&self, age: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        let release = age as f64 * self.tau;
        let z_cn: f64 = StandardNormal.sample(rng);
        let z_dn: f64 = StandardNormal.sample(rng);
        // Positions at release, drawn exactly from the accumulated increments.
        let relay = self.v * release + (2.0 * self.d_m * release).sqrt() * z_cn;
        let mut dest = self.d0 + self.v * release + (2.0 * self.d_dn * release).sqrt() * z_dn;
        let mut molecule = relay;

        let mut gap = dest - molecule;
        if gap == 0.0 {
            return Some(0);
        }
        let side = gap.signum();
        for step in 0..self.horizon * self.steps_per_slot {
            let z_mol: f64 = StandardNormal.sample(rng);
            let z_dest: f64 = StandardNormal.sample(rng);
            molecule += self.drift_step + self.step_mol * z_mol;
            dest += self.drift_step + self.step_dn * z_dest;
            let next = dest - molecule;
            let crossed = next * side <= 0.0
                || self.bridge_scale.is_some_and(|scale| {
                    let p = (-gap * next * scale).exp();
                    rng.random::<f64>() < p
                });
            if crossed {
                return Some(step / self.steps_per_slot);
            }
            gap = next;
        }
        None
    }
}

/// Estimates `q(offset, age)` for ages `1..=k`, offsets `0..k`.
pub fn simulate_particle_q(config: &SimConfig, params: &ChannelParams, k: usize) -> Result<QEstimateReport> {
    let ages: Vec<usize> = (1..=k).collect();
    simulate_particle_ages(config, params, &ages, k)
}

/// Estimates `q(offset, age)` for the listed ages and offsets `0..horizon`.
///
/// `config.trials` molecules are released per age. Molecule `n` of age `a`
/// draws from the stream `(seed, n, a, Particle)`.
pub fn simulate_particle_ages(
    config: &SimConfig,
    params: &ChannelParams,
    ages: &[usize],
    horizon: usize,
) -> Result<QEstimateReport> {
    params.validate()?;
    config.validate(params.tau)?;
    if horizon == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    if ages.is_empty() {
        return Err(Error::invalid("ages", "must not be empty"));
    }
    let ratio = params.tau / config.dt;
    let steps_per_slot = ratio.round() as usize;
    if (ratio - steps_per_slot as f64).abs() > 1e-6 * ratio {
        return Err(Error::invalid("dt", format!("must divide tau evenly (tau/dt = {ratio})")));
    }

    let walk = Walk {
        tau: params.tau,
        d0: params.d0,
        v: params.v,
        d_m: params.d_m,
        d_dn: params.d_dn,
        step_mol: (2.0 * params.d_p * config.dt).sqrt(),
        step_dn: (2.0 * params.d_dn * config.dt).sqrt(),
        drift_step: params.v * config.dt,
        bridge_scale: config
            .bridge_correction
            .then(|| 1.0 / ((params.d_p + params.d_dn) * config.dt)),
        steps_per_slot,
        horizon,
    };
    let streams = StreamFactory::new(config.seed);
    let molecules = config.trials as usize;

    let mut counts = Vec::with_capacity(ages.len());
    let mut lost = Vec::with_capacity(ages.len());
    for &age in ages {
        let chunks = par::fold_chunks(
            config.execution,
            molecules,
            CHUNK,
            || vec![0u64; horizon + 1],
            |hist, n| {
                let mut rng = streams.stream(n as u64, age, DrawKind::Particle);
                match walk.run(age, &mut rng) {
                    Some(offset) => hist[offset] += 1,
                    None => hist[horizon] += 1,
                }
            },
        );
        let mut hist = vec![0u64; horizon + 1];
        for chunk in chunks {
            for (acc, c) in hist.iter_mut().zip(chunk) {
                *acc += c;
            }
        }
        lost.push(hist.pop().expect("lost bin"));
        counts.push(hist);
    }

    Ok(QEstimateReport {
        seed: config.seed,
        molecules_per_age: config.trials,
        dt: config.dt,
        bridge_correction: config.bridge_correction,
        horizon,
        ages: ages.to_vec(),
        counts,
        lost,
    })
}
