#![allow(dead_code)]

use std::f64::consts::PI;

use pareto_route::phy::{Network, PhyParams};
use pareto_route::solution::{RateAlphabet, Solution, SourcePattern};
use pareto_route::topology::{generate_topology, NetworkTopology, TOPOLOGY_FORMAT};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` nodes on a disk of radius 100 m, source and destination 120 m apart.
pub fn small_topology(n: usize, seed: u64) -> NetworkTopology {
    let radius = 100.0;
    let density = n as f64 / (PI * radius * radius);
    let topo = generate_topology(density, radius, radius, 120.0, seed).unwrap();
    assert_eq!(topo.len(), n);
    topo
}

pub fn small_network(n: usize, seed: u64) -> Network {
    Network::new(small_topology(n, seed), PhyParams::default()).unwrap()
}

/// Desk-scale instance: N = 50 at 0.004 nodes/m^2, S and D 120 m apart.
pub fn desk_network(seed: u64) -> Network {
    let radius = (50.0 / (0.004 * PI)).sqrt();
    let topo = generate_topology(0.004, radius, 60.0, 120.0, seed).unwrap();
    assert_eq!(topo.len(), 50);
    Network::new(topo, PhyParams::default()).unwrap()
}

pub fn explicit_topology(nodes: Vec<[f64; 2]>) -> NetworkTopology {
    NetworkTopology {
        format: TOPOLOGY_FORMAT.to_string(),
        seed: 0,
        density: 0.0,
        disk_radius: 1e4,
        core_radius: 1e4,
        source: 0,
        destination: 1,
        nodes,
    }
}

/// Source in the first slot plus `relays` random relays with random
/// alphabet rates obeying the cumulative-slot constraint.
pub fn random_solution(topo: &NetworkTopology, frame: usize, relays: usize, rng: &mut ChaCha8Rng) -> Solution {
    let alphabet = RateAlphabet::default();
    let mut s = Solution::with_source(topo, &SourcePattern::first_slot(frame));
    let mut candidates = topo.relay_candidates();
    candidates.shuffle(rng);
    let limit = frame as f64 - 1.0;
    for &k in candidates.iter().take(relays) {
        loop {
            let row: Vec<f64> = (0..frame)
                .map(|_| *alphabet.values().choose(rng).unwrap())
                .collect();
            let sum: f64 = row.iter().sum();
            if sum > 0.0 && sum <= limit + 1e-9 {
                s.set_row(k, &row);
                break;
            }
        }
    }
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}
