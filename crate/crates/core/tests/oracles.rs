//! Reference values computed outside this crate with 40-digit arithmetic
//! (direct evaluation, adaptive high-precision quadrature, root finding and
//! bounded scalar optimization).

#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use molrelay::capacity::{channel_capacity, mutual_information, BetaSearch};
use molrelay::channel::{build_arrival_table, first_hit_pdf, ChannelParams, DEFAULT_QUAD_TOL};
use molrelay::detector::optimal_threshold;
use molrelay::performance::{average_performance, slot_performance, ThresholdPolicy};
use molrelay::stats::{all_moments, NoiseParams, RelayProfile, RelayQuality};

fn baseline_relay(q1: u32) -> RelayProfile {
    RelayProfile::constant(0.5, q1, RelayQuality::new(0.99, 0.01))
}

#[test]
fn density_at_one_millisecond() {
    let f = first_hit_pdf(1e-3, 1, &ChannelParams::default()).unwrap();
    assert_relative_eq!(f, 137.370655247754822, max_relative = 1e-12);
}

#[test]
fn arrival_table_cells() {
    let table = build_arrival_table(&ChannelParams::default(), 10, DEFAULT_QUAD_TOL).unwrap();
    let reference = [
        (0, 1, 0.67582718048471982),
        (1, 1, 0.085357347127107903),
        (2, 1, 0.040954961203816141),
        (3, 1, 0.025218771706659338),
        (0, 10, 0.38383975252246031),
        (9, 10, 0.012937983721619244),
    ];
    for (offset, age, q) in reference {
        assert!((table.q(offset, age) - q).abs() < 1e-9, "q({offset}, {age}) = {}", table.q(offset, age));
    }
}

#[test]
fn hypothesis_moments_first_and_last_slot() {
    let table = build_arrival_table(&ChannelParams::default(), 10, DEFAULT_QUAD_TOL).unwrap();
    let m = all_moments(&table, &baseline_relay(30), &NoiseParams::default(), 10).unwrap();
    let expect = [
        (0, [10.0, 20.0, 30.274815414541595, 46.847359492625407]),
        (9, [14.620939478695377, 33.326450632543623, 26.136132054369186, 51.936847115396134]),
    ];
    for (i, [mu0, s0, mu1, s1]) in expect {
        assert_relative_eq!(m[i].mu0, mu0, max_relative = 1e-10);
        assert_relative_eq!(m[i].sigma2_0, s0, max_relative = 1e-10);
        assert_relative_eq!(m[i].mu1, mu1, max_relative = 1e-10);
        assert_relative_eq!(m[i].sigma2_1, s1, max_relative = 1e-10);
    }
}

#[test]
fn threshold_matches_likelihood_root() {
    let table = build_arrival_table(&ChannelParams::default(), 1, DEFAULT_QUAD_TOL).unwrap();
    let relay = baseline_relay(30);
    let m = all_moments(&table, &relay, &NoiseParams::default(), 1).unwrap();
    let quality = relay.quality(1);
    let setting = optimal_threshold(&m[0], quality, 0.5).unwrap();
    assert!((setting.gamma - 18.646067190672048).abs() < 1e-6, "gamma = {}", setting.gamma);

    let (pd, pf) = slot_performance(setting.gamma, &m[0], quality);
    assert_relative_eq!(pd, 0.94605190480047941, max_relative = 1e-9);
    assert_relative_eq!(pf, 0.035885840659331165, max_relative = 1e-9);
}

#[test]
fn slot_averaged_performance_full_chain() {
    let table = build_arrival_table(&ChannelParams::default(), 10, DEFAULT_QUAD_TOL).unwrap();
    let r = average_performance(
        &table,
        &baseline_relay(30),
        &NoiseParams::default(),
        10,
        ThresholdPolicy::OptimalPerSlot,
    )
    .unwrap();
    assert_relative_eq!(r.avg_pd, 0.84583770483214975, max_relative = 1e-9);
    assert_relative_eq!(r.avg_pf, 0.10702581536256972, max_relative = 1e-9);
}

#[test]
fn mutual_information_by_entropy_difference() {
    assert_relative_eq!(mutual_information(0.5, 0.8, 0.01), 0.57243975404658853, max_relative = 1e-13);
}

#[test]
fn baseline_capacity_against_bounded_optimizer() {
    let table = build_arrival_table(&ChannelParams::default(), 10, DEFAULT_QUAD_TOL).unwrap();
    let r = channel_capacity(
        &table,
        &baseline_relay(60),
        &NoiseParams::default(),
        10,
        &BetaSearch::default(),
    )
    .unwrap();
    assert!((r.capacity - 0.6567235814422181).abs() < 1e-8, "capacity = {}", r.capacity);
    assert!((r.beta_star - 0.46435295477923405).abs() < 1e-3, "beta* = {}", r.beta_star);
}
