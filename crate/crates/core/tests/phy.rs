mod common;

use pareto_route::phy::{
    ber, enumerate_interfering_sets, link_prob_exact, link_prob_mc, per, sinr,
    EnumerationConfig, LinkProbabilityTable, Network, PhyError, PhyParams,
};
use pareto_route::solution::Solution;
use proptest::prelude::*;
use rand::Rng;

fn network(nodes: Vec<[f64; 2]>) -> Network {
    Network::new(common::explicit_topology(nodes), PhyParams::default()).unwrap()
}

/// Transmitter 0 to receiver 1 in a single resource, with extra nodes
/// transmitting at the given rates.
fn single_resource(n: usize, rates: &[(usize, f64)]) -> Solution {
    let mut s = Solution::zeros(n, 1);
    s.set_rate(0, 0, 1.0);
    for &(k, tau) in rates {
        s.set_rate(k, 0, tau);
    }
    s
}

/// Independent evaluation: every subset of the other nodes, plain powers
/// and `(1 - BER)^N_b`.
fn brute_force(net: &Network, s: &Solution, i: usize, j: usize, r: usize) -> f64 {
    let p = &net.params;
    let lambda = 299_792_458.0 / p.carrier;
    let gain = |a: usize, b: usize| {
        let d = net.topology.distance(a, b);
        let g = p.tx_gain * p.rx_gain * (lambda / (4.0 * std::f64::consts::PI)).powi(2)
            / d.powf(p.pathloss_exponent);
        g.min(1.0)
    };
    let others: Vec<usize> = (0..s.n_nodes()).filter(|&k| k != i && k != j).collect();
    let noise = p.noise_density * p.bandwidth;
    let mut total = 0.0;
    for mask in 0u32..(1 << others.len()) {
        let mut prob = 1.0;
        let mut interference = 0.0;
        for (b, &k) in others.iter().enumerate() {
            let tau = s.rate(k, r);
            if mask >> b & 1 == 1 {
                prob *= tau;
                interference += p.tx_power * gain(k, j);
            } else {
                prob *= 1.0 - tau;
            }
        }
        let gamma = p.tx_power * gain(i, j) / (noise + interference);
        let bit = 0.5 * libm::erfc(gamma.sqrt());
        total += prob * (1.0 - bit).powi(p.packet_bits as i32);
    }
    total
}

#[test]
#[allow(clippy::excessive_precision)]
fn four_node_instance_matches_frozen_value() {
    // 40-digit reference from an arbitrary-precision evaluation.
    let net = network(vec![[0.0, 0.0], [150.0, 0.0], [400.0, 60.0], [-250.0, -380.0]]);
    let s = single_resource(4, &[(2, 0.3), (3, 0.6)]);
    let p = link_prob_exact(0, 1, 0, &s, &net, &EnumerationConfig::default()).unwrap();
    assert!((p - 0.697_504_953_456_377_26).abs() < 1e-12, "{p}");
    assert!((sinr(0, 1, &[], &net).unwrap() - 11.1046).abs() < 1e-3);
    assert!((sinr(0, 1, &[2, 3], &net).unwrap() - 3.2389).abs() < 1e-3);
}

#[test]
fn exact_matches_brute_force() {
    let mut rng = common::rng(11);
    for _ in 0..30 {
        let n = rng.gen_range(3..9);
        let nodes: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0)])
            .collect();
        let net = network(nodes);
        let mut s = Solution::zeros(n, 2);
        for k in 0..n {
            for r in 0..2 {
                if rng.gen_bool(0.6) {
                    s.set_rate(k, r, rng.gen_range(0..=20) as f64 / 20.0);
                }
            }
        }
        s.set_rate(0, 0, 0.5);
        let p = link_prob_exact(0, 1, 0, &s, &net, &EnumerationConfig::default()).unwrap();
        let oracle = brute_force(&net, &s, 0, 1, 0);
        assert!((p - oracle).abs() < 1e-12, "{p} vs {oracle}");
    }
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let mut rng = common::rng(5);
    for seed in 0..10 {
        let n = rng.gen_range(3..9);
        let nodes: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-250.0..250.0), rng.gen_range(-250.0..250.0)])
            .collect();
        let net = network(nodes);
        let rates: Vec<(usize, f64)> = (2..n).map(|k| (k, rng.gen_range(0..=20) as f64 / 20.0)).collect();
        let s = single_resource(n, &rates);
        let exact = link_prob_exact(0, 1, 0, &s, &net, &EnumerationConfig::default()).unwrap();
        let mc = link_prob_mc(0, 1, 0, &s, &net, 20_000, seed).unwrap();
        assert!(
            (mc.mean - exact).abs() <= 4.0 * mc.stderr + 1e-12,
            "exact {exact}, mc {} +- {}",
            mc.mean,
            mc.stderr
        );
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let net = network(vec![[0.0, 0.0], [150.0, 0.0], [400.0, 60.0], [-250.0, -380.0]]);
    let s = single_resource(4, &[(2, 0.3), (3, 0.6)]);
    let a = link_prob_mc(0, 1, 0, &s, &net, 1000, 42).unwrap();
    let b = link_prob_mc(0, 1, 0, &s, &net, 1000, 42).unwrap();
    assert_eq!(a, b);
}

#[test]
fn interfering_set_probabilities_sum_to_one() {
    let mut rng = common::rng(8);
    for m in 1..=12 {
        let mut s = Solution::zeros(m, 1);
        for k in 0..m {
            s.set_rate(k, 0, rng.gen_range(0..=20) as f64 / 20.0);
        }
        let active: Vec<usize> = (0..m).collect();
        let sets = enumerate_interfering_sets(&active, 0, &s, 0, 20).unwrap();
        assert_eq!(sets.len(), 1 << (m - 1));
        let total: f64 = sets.iter().map(|x| x.probability).sum();
        assert!((total - 1.0).abs() < 1e-12, "m = {m}: {total}");
    }
}

#[test]
fn silent_interferers_do_not_matter() {
    let net = network(vec![[0.0, 0.0], [100.0, 0.0], [120.0, 10.0], [50.0, 40.0]]);
    let lone = single_resource(4, &[]);
    let p = link_prob_exact(0, 1, 0, &lone, &net, &EnumerationConfig::default()).unwrap();
    let gamma = sinr(0, 1, &[], &net).unwrap();
    assert_eq!(p, 1.0 - per(gamma, 1024).unwrap());
}

#[test]
fn enumeration_cap_counts_only_weighted_interferers() {
    let n = 25;
    let nodes: Vec<[f64; 2]> = (0..n).map(|k| [k as f64 * 30.0, 5.0 * k as f64]).collect();
    let net = network(nodes);
    let cfg = EnumerationConfig { cap: 20, truncation_epsilon: None };

    let busy: Vec<(usize, f64)> = (2..23).map(|k| (k, 0.1)).collect();
    let err = link_prob_exact(0, 1, 0, &single_resource(n, &busy), &net, &cfg).unwrap_err();
    assert!(matches!(err, PhyError::EnumerationCap { interferers: 21, cap: 20 }));
    assert!(err.to_string().contains("Monte Carlo"));

    let fewer: Vec<(usize, f64)> = (2..22).map(|k| (k, 0.1)).collect();
    assert!(link_prob_exact(0, 1, 0, &single_resource(n, &fewer), &net, &cfg).is_ok());
}

#[test]
fn truncation_drops_faint_interferers() {
    let net = network(vec![[0.0, 0.0], [100.0, 0.0], [9000.0, 0.0], [110.0, 0.0]]);
    let s = single_resource(4, &[(2, 0.5), (3, 0.5)]);
    let full = LinkProbabilityTable::compute(&s, &net, &EnumerationConfig::default()).unwrap();
    let cut = LinkProbabilityTable::compute(&s, &net, &EnumerationConfig::default().with_truncation()).unwrap();
    assert_eq!(full.truncated(), 0);
    assert!(cut.truncated() > 0);
    let (a, b) = (full.get(0, 1, 0).unwrap(), cut.get(0, 1, 0).unwrap());
    assert!(b >= a && b - a < 1e-3);
}

#[test]
fn table_covers_active_nodes_and_destination() {
    let net = network(vec![[0.0, 0.0], [100.0, 0.0], [50.0, 30.0], [60.0, -40.0]]);
    let mut s = Solution::zeros(4, 2);
    s.set_rate(0, 0, 1.0);
    s.set_rate(2, 1, 0.5);
    let t = LinkProbabilityTable::compute(&s, &net, &EnumerationConfig::default()).unwrap();
    assert_eq!(t.nodes(), &[0, 1, 2]);
    assert!(t.get(0, 1, 0).is_some() && t.get(0, 2, 0).is_some());
    assert!(t.get(0, 1, 1).is_none(), "source silent in resource 1");
    assert!(t.get(2, 1, 1).is_some());
    assert!(t.get(3, 1, 0).is_none());
}

proptest! {
    #[test]
    fn per_decreases_with_sinr(g in 0.0f64..40.0, dg in 1e-3f64..5.0, bits in 1u32..4096) {
        prop_assert!(per(g + dg, bits).unwrap() <= per(g, bits).unwrap());
    }

    #[test]
    fn per_increases_with_packet_length(g in 0.0f64..40.0, bits in 1u32..4096, extra in 1u32..1024) {
        prop_assert!(per(g, bits + extra).unwrap() >= per(g, bits).unwrap());
    }

    #[test]
    fn ber_is_a_probability(g in 0.0f64..1e3) {
        let b = ber(g).unwrap();
        prop_assert!((0.0..=0.5).contains(&b));
    }

    #[test]
    fn link_probability_decreases_with_interferer_rate(t1 in 0u32..=20, t2 in 0u32..=20) {
        let net = network(vec![[0.0, 0.0], [150.0, 0.0], [200.0, 50.0]]);
        let (lo, hi) = (t1.min(t2) as f64 / 20.0, t1.max(t2) as f64 / 20.0);
        let cfg = EnumerationConfig::default();
        let p_lo = link_prob_exact(0, 1, 0, &single_resource(3, &[(2, lo)]), &net, &cfg).unwrap();
        let p_hi = link_prob_exact(0, 1, 0, &single_resource(3, &[(2, hi)]), &net, &cfg).unwrap();
        prop_assert!(p_hi <= p_lo + 1e-15);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(ber(-1.0), Err(PhyError::NegativeSinr(_))));
    assert!(matches!(per(1.0, 0), Err(PhyError::ZeroBits)));
    let net = network(vec![[0.0, 0.0], [100.0, 0.0]]);
    let s = Solution::zeros(2, 1);
    let cfg = EnumerationConfig::default();
    assert!(matches!(
        link_prob_exact(0, 1, 0, &s, &net, &cfg),
        Err(PhyError::InactiveTransmitter { .. })
    ));
    assert!(matches!(
        link_prob_exact(1, 1, 0, &single_resource(2, &[(1, 0.5)]), &net, &cfg),
        Err(PhyError::SelfLink(1))
    ));
}
