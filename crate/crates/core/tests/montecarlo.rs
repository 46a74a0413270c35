use molrelay::channel::{arrival_prob, build_arrival_table, ChannelParams, DEFAULT_QUAD_TOL};
use molrelay::montecarlo::{simulate_particle_ages, simulate_semi_analytic, FidelityMode, SimConfig, SimReport};
use molrelay::performance::{thresholds, ThresholdPolicy};
use molrelay::stats::{all_moments, NoiseParams, RelayProfile, RelayQuality};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run(
    params: &ChannelParams,
    relay: &RelayProfile,
    noise: &NoiseParams,
    k: usize,
    config: &SimConfig,
) -> SimReport {
    let table = build_arrival_table(params, k, DEFAULT_QUAD_TOL).unwrap();
    let m = all_moments(&table, relay, noise, k).unwrap();
    let settings = thresholds(&m, relay, ThresholdPolicy::OptimalPerSlot).unwrap();
    simulate_semi_analytic(config, &table, relay, noise, k, &settings).unwrap()
}

/// Slot-averaged deviation in binomial standard errors at the formula value.
fn z(report: &SimReport, detection: bool) -> f64 {
    let k = report.slots.len() as f64;
    let (mut diff, mut var) = (0.0, 0.0);
    for s in &report.slots {
        let (est, p) = if detection { (s.pd, s.pd_formula) } else { (s.pf, s.pf_formula) };
        diff += est.value - p;
        var += p * (1.0 - p) / est.n as f64;
    }
    (diff / k).abs() / (var.sqrt() / k)
}

#[test]
fn formula_mode_matches_closed_forms_across_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for case in 0..4 {
        let params = ChannelParams {
            d0: rng.random_range(0.8e-6..1.5e-6),
            d_m: rng.random_range(0.5e-10..2e-10),
            ..ChannelParams::default()
        };
        let k = rng.random_range(2..=5);
        let relay = RelayProfile::constant(
            rng.random_range(0.3..0.7),
            rng.random_range(20..=60),
            RelayQuality::new(rng.random_range(0.85..1.0), rng.random_range(0.0..0.1)),
        );
        let noise = NoiseParams {
            mu_o: rng.random_range(5.0..15.0),
            sigma2_o: rng.random_range(1.0..30.0),
        };
        let config = SimConfig {
            trials: 100_000,
            seed: 100 + case,
            ..SimConfig::default()
        };
        let r = run(&params, &relay, &noise, k, &config);
        for detection in [true, false] {
            let z = z(&r, detection);
            assert!(z <= 3.0, "case {case}: z = {z} (detection = {detection})");
        }
    }
}

#[test]
fn received_counts_follow_hypothesis_moments() {
    let params = ChannelParams::default();
    let relay = RelayProfile::constant(0.5, 30, RelayQuality::new(0.99, 0.01));
    let noise = NoiseParams::default();
    let k = 10;
    let table = build_arrival_table(&params, k, DEFAULT_QUAD_TOL).unwrap();
    let m = all_moments(&table, &relay, &noise, k).unwrap();
    let r = run(&params, &relay, &noise, k, &SimConfig { seed: 7, ..SimConfig::default() });
    for (s, mom) in r.slots.iter().zip(&m) {
        for (est, mean, var) in [(s.count_h0, mom.mu0, mom.sigma2_0), (s.count_h1, mom.mu1, mom.sigma2_1)] {
            assert!((est.mean - mean).abs() <= 5.0 * est.mean_se, "slot {}: mean {} vs {mean}", s.slot, est.mean);
            assert!(
                (est.variance - var).abs() <= 5.0 * est.variance_se,
                "slot {}: variance {} vs {var}",
                s.slot,
                est.variance
            );
        }
    }
}

#[test]
fn bridge_correction_reduces_discretization_error() {
    let params = ChannelParams::default();
    let coarse = SimConfig {
        trials: 100_000,
        seed: 11,
        dt: params.tau / 100.0,
        ..SimConfig::default()
    };
    let error = |bridge_correction| {
        let r = simulate_particle_ages(&SimConfig { bridge_correction, ..coarse }, &params, &[1], 4).unwrap();
        (0..4)
            .map(|m| (r.estimate(m, 1).unwrap().value - arrival_prob(m, 1, &params, DEFAULT_QUAD_TOL).unwrap()).abs())
            .sum::<f64>()
    };
    let (with, without) = (error(true), error(false));
    assert!(with < without, "bridge {with} vs plain {without}");
}

#[test]
fn system_mode_reports_formula_alongside_empirical() {
    let params = ChannelParams::default();
    let relay = RelayProfile::constant(0.5, 30, RelayQuality::new(0.99, 0.01));
    let noise = NoiseParams::default();
    let base = SimConfig {
        trials: 20_000,
        seed: 3,
        ..SimConfig::default()
    };
    let formula = run(&params, &relay, &noise, 6, &base);
    let system = run(&params, &relay, &noise, 6, &SimConfig { mode: FidelityMode::SystemFaithful, ..base });
    assert_eq!(system.mode, FidelityMode::SystemFaithful);
    assert_eq!(system.avg_pd_formula, formula.avg_pd_formula);
    assert_eq!(system.avg_pf_formula, formula.avg_pf_formula);
    // The physical relay emits with probability beta*P_D + (1-beta)*P_F = 0.5 here,
    // so only binomial and counting-noise shape separate the two modes.
    assert!((system.avg_pd.value - system.avg_pd_formula).abs() < 0.05);
    assert!((system.avg_pf.value - system.avg_pf_formula).abs() < 0.05);
}
