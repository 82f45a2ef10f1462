//! Physical layer: BPSK/AWGN error rates, interference, SINR and per-resource
//! link probabilities.
//!
//! A link `(i, j)` in resource `r` succeeds with probability
//! `sum_l [1 - PER(gamma_l)] * P_l(r)` where `l` ranges over every subset of
//! the other nodes transmitting in `r`, and `P_l(r)` is the probability that
//! exactly that subset is on air.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solution::Solution;
use crate::topology::{NetworkTopology, NodeId, PathlossTable, TopologyError};

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("SINR must be non-negative, got {0}")]
    NegativeSinr(f64),
    #[error("packet must carry at least one bit")]
    ZeroBits,
    #[error(
        "{interferers} potential interferers exceed the exact enumeration cap of {cap}; \
         use the Monte Carlo estimator or enable power truncation"
    )]
    EnumerationCap { interferers: usize, cap: usize },
    #[error("node {node} does not transmit in resource {resource}")]
    InactiveTransmitter { node: NodeId, resource: usize },
    #[error("transmitter and receiver must differ (node {0})")]
    SelfLink(NodeId),
    #[error("invalid radio parameter: {0}")]
    Parameter(String),
}

/// Radio constants. Defaults are the reference deployment: 151 mW,
/// -154 dBm/Hz, 1 MHz, 2.4 GHz, exponent 3, unit gains, 1024-bit packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhyParams {
    /// W
    pub tx_power: f64,
    /// W/Hz
    pub noise_density: f64,
    /// Hz
    pub bandwidth: f64,
    /// Hz
    pub carrier: f64,
    pub pathloss_exponent: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub packet_bits: u32,
}

impl Default for PhyParams {
    fn default() -> Self {
        Self {
            tx_power: 0.151,
            noise_density: dbm_to_watts(-154.0),
            bandwidth: 1e6,
            carrier: 2.4e9,
            pathloss_exponent: 3.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            packet_bits: 1024,
        }
    }
}

impl PhyParams {
    /// Thermal noise power `N0 * B` in W.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    /// Airtime energy of one packet, `P * N_b / B`, in J.
    pub fn packet_energy(&self) -> f64 {
        self.tx_power * f64::from(self.packet_bits) / self.bandwidth
    }

    pub fn validate(&self) -> Result<(), PhyError> {
        let positive = [
            ("tx_power", self.tx_power),
            ("noise_density", self.noise_density),
            ("bandwidth", self.bandwidth),
            ("carrier", self.carrier),
            ("pathloss_exponent", self.pathloss_exponent),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PhyError::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.packet_bits == 0 {
            return Err(PhyError::ZeroBits);
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// Controls exact interfering-set enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationConfig {
    /// Largest number of interferers enumerated exactly (2^cap sets).
    pub cap: usize,
    /// When set, interferers whose power at the receiver is below
    /// `epsilon * noise power` are dropped before enumeration.
    pub truncation_epsilon: Option<f64>,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            cap: 20,
            truncation_epsilon: None,
        }
    }
}

impl EnumerationConfig {
    pub const DEFAULT_TRUNCATION_EPSILON: f64 = 1e-2;

    pub fn with_truncation(mut self) -> Self {
        self.truncation_epsilon = Some(Self::DEFAULT_TRUNCATION_EPSILON);
        self
    }
}

/// Topology, radio constants and the derived pathloss table.
#[derive(Debug, Clone)]
pub struct Network {
    pub topology: NetworkTopology,
    pub params: PhyParams,
    pub pathloss: PathlossTable,
}

impl Network {
    pub fn new(topology: NetworkTopology, params: PhyParams) -> Result<Self, TopologyError> {
        let pathloss = PathlossTable::new(&topology, &params)?;
        Ok(Self {
            topology,
            params,
            pathloss,
        })
    }

    pub fn len(&self) -> usize {
        self.topology.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topology.is_empty()
    }

    pub fn source(&self) -> NodeId {
        self.topology.source
    }

    pub fn destination(&self) -> NodeId {
        self.topology.destination
    }

    /// `P_k * a_kj`
    #[inline]
    pub fn received_power(&self, k: NodeId, j: NodeId) -> f64 {
        self.params.tx_power * self.pathloss.get(k, j)
    }
}

/// BPSK over AWGN: `0.5 * erfc(sqrt(gamma))`.
pub fn ber(sinr: f64) -> Result<f64, PhyError> {
    if !(sinr >= 0.0) {
        return Err(PhyError::NegativeSinr(sinr));
    }
    Ok(ber_unchecked(sinr))
}

#[inline]
fn ber_unchecked(sinr: f64) -> f64 {
    0.5 * libm::erfc(sinr.sqrt())
}

/// `1 - (1 - BER)^N_b`
pub fn per(sinr: f64, packet_bits: u32) -> Result<f64, PhyError> {
    if packet_bits == 0 {
        return Err(PhyError::ZeroBits);
    }
    let b = ber(sinr)?;
    Ok(-(f64::from(packet_bits) * (-b).ln_1p()).exp_m1())
}

/// `(1 - BER)^N_b`, the packet success probability.
#[inline]
fn packet_success(sinr: f64, packet_bits: u32) -> f64 {
    (f64::from(packet_bits) * (-ber_unchecked(sinr)).ln_1p()).exp()
}

/// `sum_k P_k * a_kj` over the interfering set.
pub fn interference_power(receiver: NodeId, interferers: &[NodeId], network: &Network) -> f64 {
    interferers
        .iter()
        .map(|&k| network.received_power(k, receiver))
        .sum()
}

/// `P_i a_ij / (N0 B + I_ij)`
pub fn sinr(
    transmitter: NodeId,
    receiver: NodeId,
    interferers: &[NodeId],
    network: &Network,
) -> Result<f64, PhyError> {
    if transmitter == receiver {
        return Err(PhyError::SelfLink(transmitter));
    }
    debug_assert!(!interferers.contains(&transmitter));
    Ok(network.received_power(transmitter, receiver)
        / (network.params.noise_power() + interference_power(receiver, interferers, network)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferingSet {
    pub members: Vec<NodeId>,
    /// Probability that exactly `members` transmit in the resource.
    pub probability: f64,
}

/// Every subset of `active \ {transmitter}`, each with its occurrence
/// probability in `resource`. Yields `2^(M-1)` sets including the empty one.
pub fn enumerate_interfering_sets(
    active: &[NodeId],
    transmitter: NodeId,
    rates: &Solution,
    resource: usize,
    cap: usize,
) -> Result<Vec<InterferingSet>, PhyError> {
    let others: Vec<NodeId> = active.iter().copied().filter(|&k| k != transmitter).collect();
    if others.len() > cap {
        return Err(PhyError::EnumerationCap {
            interferers: others.len(),
            cap,
        });
    }
    let count = 1usize << others.len();
    let mut sets = Vec::with_capacity(count);
    for mask in 0..count {
        let mut members = Vec::new();
        let mut probability = 1.0;
        for (bit, &k) in others.iter().enumerate() {
            let tau = rates.rate(k, resource);
            if mask & (1 << bit) != 0 {
                members.push(k);
                probability *= tau;
            } else {
                probability *= 1.0 - tau;
            }
        }
        sets.push(InterferingSet {
            members,
            probability,
        });
    }
    Ok(sets)
}

/// Interferers of link `(i, j)` in `resource` that carry nonzero weight:
/// nodes other than `i` and `j` with `tau_k(r) > 0`, after optional
/// truncation. Returns `(power at j, tau)` pairs and the truncated count.
fn weighted_interferers(
    transmitter: NodeId,
    receiver: NodeId,
    transmitting: &[NodeId],
    rates: &Solution,
    resource: usize,
    network: &Network,
    cfg: &EnumerationConfig,
) -> (Vec<(f64, f64)>, usize) {
    let floor = cfg
        .truncation_epsilon
        .map(|eps| eps * network.params.noise_power());
    let mut truncated = 0;
    let mut out = Vec::with_capacity(transmitting.len());
    for &k in transmitting {
        if k == transmitter || k == receiver {
            continue;
        }
        let power = network.received_power(k, receiver);
        if floor.is_some_and(|f| power < f) {
            truncated += 1;
            continue;
        }
        out.push((power, rates.rate(k, resource)));
    }
    (out, truncated)
}

fn expected_success(
    signal: f64,
    noise: f64,
    interferers: &[(f64, f64)],
    packet_bits: u32,
    interference: f64,
    probability: f64,
) -> f64 {
    match interferers.split_first() {
        None => probability * packet_success(signal / (noise + interference), packet_bits),
        Some((&(power, tau), rest)) => {
            let mut acc = 0.0;
            if tau < 1.0 {
                acc += expected_success(
                    signal,
                    noise,
                    rest,
                    packet_bits,
                    interference,
                    probability * (1.0 - tau),
                );
            }
            if tau > 0.0 {
                acc += expected_success(
                    signal,
                    noise,
                    rest,
                    packet_bits,
                    interference + power,
                    probability * tau,
                );
            }
            acc
        }
    }
}

fn transmitting_in(rates: &Solution, resource: usize) -> Vec<NodeId> {
    (0..rates.n_nodes())
        .filter(|&k| rates.rate(k, resource) > 0.0)
        .collect()
}

fn link_prob_with(
    transmitter: NodeId,
    receiver: NodeId,
    resource: usize,
    transmitting: &[NodeId],
    rates: &Solution,
    network: &Network,
    cfg: &EnumerationConfig,
) -> Result<(f64, usize), PhyError> {
    let (interferers, truncated) =
        weighted_interferers(transmitter, receiver, transmitting, rates, resource, network, cfg);
    if interferers.len() > cfg.cap {
        return Err(PhyError::EnumerationCap {
            interferers: interferers.len(),
            cap: cfg.cap,
        });
    }
    let p = expected_success(
        network.received_power(transmitter, receiver),
        network.params.noise_power(),
        &interferers,
        network.params.packet_bits,
        0.0,
        1.0,
    );
    Ok((p.clamp(0.0, 1.0), truncated))
}

/// Exact link probability `p_ij(r)` by interfering-set enumeration.
///
/// The receiver is never counted as an interferer of its own link
/// (half-duplex). Interferers with `tau_k(r) = 0` are skipped since every set
/// containing them has probability zero.
pub fn link_prob_exact(
    transmitter: NodeId,
    receiver: NodeId,
    resource: usize,
    rates: &Solution,
    network: &Network,
    cfg: &EnumerationConfig,
) -> Result<f64, PhyError> {
    check_link(transmitter, receiver, resource, rates)?;
    let transmitting = transmitting_in(rates, resource);
    link_prob_with(transmitter, receiver, resource, &transmitting, rates, network, cfg).map(|(p, _)| p)
}

fn check_link(
    transmitter: NodeId,
    receiver: NodeId,
    resource: usize,
    rates: &Solution,
) -> Result<(), PhyError> {
    if transmitter == receiver {
        return Err(PhyError::SelfLink(transmitter));
    }
    if !(rates.rate(transmitter, resource) > 0.0) {
        return Err(PhyError::InactiveTransmitter {
            node: transmitter,
            resource,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `p_ij(r)`: each other node transmits
/// independently with probability `tau_k(r)`. Deterministic for a seed.
pub fn link_prob_mc(
    transmitter: NodeId,
    receiver: NodeId,
    resource: usize,
    rates: &Solution,
    network: &Network,
    samples: usize,
    seed: u64,
) -> Result<McEstimate, PhyError> {
    check_link(transmitter, receiver, resource, rates)?;
    let samples = samples.max(1);
    let transmitting = transmitting_in(rates, resource);
    let (interferers, _) = weighted_interferers(
        transmitter,
        receiver,
        &transmitting,
        rates,
        resource,
        network,
        &EnumerationConfig::default(),
    );
    let signal = network.received_power(transmitter, receiver);
    let noise = network.params.noise_power();
    let bits = network.params.packet_bits;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for n in 1..=samples {
        let interference: f64 = interferers
            .iter()
            .filter(|&&(_, tau)| rng.gen::<f64>() < tau)
            .map(|&(power, _)| power)
            .sum();
        let x = packet_success(signal / (noise + interference), bits);
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    let stderr = if samples > 1 {
        (m2 / (samples - 1) as f64).sqrt() / (samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr,
        samples,
    })
}

/// Per-resource link probabilities for every active transmitter towards
/// every active node and the destination.
#[derive(Debug, Clone)]
pub struct LinkProbabilityTable {
    frame: usize,
    nodes: Vec<NodeId>,
    local: Vec<Option<usize>>,
    p: Vec<f64>,
    truncated: usize,
}

impl LinkProbabilityTable {
    pub fn compute(
        rates: &Solution,
        network: &Network,
        cfg: &EnumerationConfig,
    ) -> Result<Self, PhyError> {
        let frame = rates.frame();
        let mut nodes = rates.active_nodes();
        let destination = network.destination();
        if !nodes.contains(&destination) {
            nodes.push(destination);
            nodes.sort_unstable();
        }
        let mut local = vec![None; network.len()];
        for (idx, &k) in nodes.iter().enumerate() {
            local[k] = Some(idx);
        }

        let a = nodes.len();
        let mut p = vec![f64::NAN; a * a * frame];
        let mut truncated = 0;
        for r in 0..frame {
            let transmitting = transmitting_in(rates, r);
            for &i in &transmitting {
                let li = local[i].expect("transmitting nodes are active");
                for (lj, &j) in nodes.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let (value, t) =
                        link_prob_with(i, j, r, &transmitting, rates, network, cfg)?;
                    p[(li * a + lj) * frame + r] = value;
                    truncated += t;
                }
            }
        }
        Ok(Self {
            frame,
            nodes,
            local,
            p,
            truncated,
        })
    }

    /// Build a table from explicit values, mostly for tests. `values` maps
    /// `(i, j, r)` to `p_ij(r)`.
    pub fn from_entries(
        n_nodes: usize,
        frame: usize,
        values: impl IntoIterator<Item = ((NodeId, NodeId, usize), f64)>,
    ) -> Self {
        let values: Vec<_> = values.into_iter().collect();
        let mut nodes: Vec<NodeId> = values
            .iter()
            .flat_map(|&((i, j, _), _)| [i, j])
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut local = vec![None; n_nodes];
        for (idx, &k) in nodes.iter().enumerate() {
            local[k] = Some(idx);
        }
        let a = nodes.len();
        let mut p = vec![f64::NAN; a * a * frame];
        for ((i, j, r), v) in values {
            let (li, lj) = (local[i].unwrap(), local[j].unwrap());
            p[(li * a + lj) * frame + r] = v;
        }
        Self {
            frame,
            nodes,
            local,
            p,
            truncated: 0,
        }
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    /// Nodes covered by the table (active nodes plus the destination).
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of interferer terms dropped by power truncation.
    pub fn truncated(&self) -> usize {
        self.truncated
    }

    /// `p_ij(r)`, or `None` when `i` is silent in `r` or either node is not
    /// covered by the table.
    #[inline]
    pub fn get(&self, i: NodeId, j: NodeId, r: usize) -> Option<f64> {
        let li = (*self.local.get(i)?)?;
        let lj = (*self.local.get(j)?)?;
        let v = self.p[(li * self.nodes.len() + lj) * self.frame + r];
        (!v.is_nan()).then_some(v)
    }
}
