//! Robustness, delay and energy of a routing strategy.
//!
//! All three objectives are driven by `P(T_iD | H = h)`, the probability that
//! a packet held by `i` reaches the destination in exactly `h` more hops:
//!
//! ```text
//! P(i, 1) = p_iD
//! P(i, h) = 1 - prod_j [1 - p_ij chi_j P(j, h - 1)]
//! ```
//!
//! where `j` ranges over the active relays other than `i`. Two evaluators are
//! provided: a path walk that abandons any path whose accumulated probability
//! drops below `P_th`, and an exact memoized table that ignores `P_th`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::{EnumerationConfig, LinkProbabilityTable, Network, PhyParams};
use crate::solution::{
    global_link_probability, validate_structure, FeasibilityReport, ForwardingProfile,
    RateAlphabet, Solution, SolutionError, UsefulnessMode,
};
use crate::topology::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{0}")]
    Infeasible(FeasibilityReport),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("invalid evaluation config: {0}")]
    Config(String),
}

impl From<crate::phy::PhyError> for EvalError {
    fn from(e: crate::phy::PhyError) -> Self {
        Self::Solution(e.into())
    }
}

/// `(f_R, f_D, f_E)`: robustness is maximized, delay and energy minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub robustness: f64,
    /// Slots; `+inf` when no route exists.
    #[serde(with = "crate::serde_inf")]
    pub delay: f64,
    /// Joules.
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    #[default]
    PrunedPathWalk,
    ExactMemoized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// `H_M`
    pub max_hops: usize,
    /// `P_th`
    pub path_threshold: f64,
    /// `e_T`, J per forwarded packet.
    pub tx_energy: f64,
    /// `e_R`, J per received packet.
    pub rx_energy: f64,
    pub mode: EvalMode,
    pub usefulness: UsefulnessMode,
    pub enumeration: EnumerationConfig,
}

impl EvalConfig {
    /// `H_M = 2`, `P_th = 1e-10`, `e_T` = packet airtime energy, `e_R = 0`.
    pub fn new(params: &PhyParams) -> Self {
        Self {
            max_hops: 2,
            path_threshold: 1e-10,
            tx_energy: params.packet_energy(),
            rx_energy: 0.0,
            mode: EvalMode::PrunedPathWalk,
            usefulness: UsefulnessMode::Unit,
            enumeration: EnumerationConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.max_hops < 1 {
            return Err(EvalError::Config("max_hops must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.path_threshold) {
            return Err(EvalError::Config(format!(
                "path_threshold must lie in [0, 1), got {}",
                self.path_threshold
            )));
        }
        if !(self.tx_energy >= 0.0 && self.rx_energy >= 0.0) {
            return Err(EvalError::Config("energies must be non-negative".into()));
        }
        Ok(())
    }
}

/// Global link probabilities and relay gains between the source and the
/// active relays, on compact local indices (0 is the source).
#[derive(Debug, Clone)]
pub struct HopModel {
    nodes: Vec<NodeId>,
    direct: Vec<f64>,
    reach: Vec<f64>,
    gain: Vec<f64>,
    frame: usize,
}

/// Work counters for one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub expansions: u64,
}

impl HopModel {
    pub fn new(
        s: &Solution,
        links: &LinkProbabilityTable,
        profile: &ForwardingProfile,
    ) -> Result<Self, SolutionError> {
        let source = profile.source;
        let destination = profile.destination;
        let mut nodes = vec![source];
        nodes.extend(
            links
                .nodes()
                .iter()
                .copied()
                .filter(|&k| k != source && k != destination && profile.outgoing[k] > 0.0),
        );
        let m = nodes.len();
        let mut direct = vec![0.0; m];
        let mut reach = vec![0.0; m * m];
        let mut gain = vec![0.0; m * m];
        for (u, &i) in nodes.iter().enumerate() {
            if s.cumulative_rate(i) == 0.0 {
                // silent source: nothing leaves it
                continue;
            }
            direct[u] = global_link_probability(i, destination, s, links)?;
            for (v, &j) in nodes.iter().enumerate().skip(1) {
                if u == v {
                    continue;
                }
                let p = global_link_probability(i, j, s, links)?;
                reach[u * m + v] = p;
                gain[u * m + v] = profile.relay_gain(p, j);
            }
        }
        Ok(Self {
            nodes,
            direct,
            reach,
            gain,
            frame: s.frame(),
        })
    }

    /// Node ids behind the local indices; index 0 is the source.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    fn local(&self, node: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&k| k == node)
    }

    #[inline]
    fn m(&self) -> usize {
        self.nodes.len()
    }

    fn walk_success(&self, u: usize, hops: usize, acc: f64, threshold: f64, stats: &mut EvalStats) -> f64 {
        stats.expansions += 1;
        if hops == 1 {
            let p = self.direct[u];
            return if acc * p < threshold { 0.0 } else { p };
        }
        let m = self.m();
        let mut miss = 1.0;
        for v in 1..m {
            let g = self.gain[u * m + v];
            if v == u || g == 0.0 {
                continue;
            }
            let path = acc * g;
            if path < threshold {
                continue;
            }
            miss *= 1.0 - g * self.walk_success(v, hops - 1, path, threshold, stats);
        }
        1.0 - miss
    }

    fn walk_energy(&self, u: usize, hops: usize, acc: f64, cfg: &EvalConfig, stats: &mut EvalStats) -> f64 {
        stats.expansions += 1;
        if hops == 1 {
            return 0.0;
        }
        let m = self.m();
        let mut total = 0.0;
        for v in 1..m {
            if v == u {
                continue;
            }
            let g = self.gain[u * m + v];
            let path = acc * g;
            if path < cfg.path_threshold {
                continue;
            }
            total += self.reach[u * m + v] * cfg.rx_energy
                + g * (cfg.tx_energy + self.walk_energy(v, hops - 1, path, cfg, stats));
        }
        total
    }

    /// `P(T_uD | H = h)` for every local node and `h = 1..=H_M`, without
    /// pruning. Row `h - 1` holds hop count `h`.
    fn success_table(&self, max_hops: usize, stats: &mut EvalStats) -> Vec<Vec<f64>> {
        let m = self.m();
        let mut table = vec![self.direct.clone()];
        stats.expansions += m as u64;
        for h in 1..max_hops {
            let prev = &table[h - 1];
            let row = (0..m)
                .map(|u| {
                    let mut miss = 1.0;
                    for v in 1..m {
                        let g = self.gain[u * m + v];
                        if v == u || g == 0.0 {
                            continue;
                        }
                        miss *= 1.0 - g * prev[v];
                    }
                    1.0 - miss
                })
                .collect();
            stats.expansions += m as u64;
            table.push(row);
        }
        table
    }

    fn energy_table(&self, cfg: &EvalConfig, stats: &mut EvalStats) -> Vec<Vec<f64>> {
        let m = self.m();
        let mut table = vec![vec![0.0; m]];
        stats.expansions += m as u64;
        for h in 1..cfg.max_hops {
            let prev = &table[h - 1];
            let row = (0..m)
                .map(|u| {
                    let mut total = 0.0;
                    for v in 1..m {
                        if v == u {
                            continue;
                        }
                        let g = self.gain[u * m + v];
                        total += self.reach[u * m + v] * cfg.rx_energy
                            + g * (cfg.tx_energy + prev[v]);
                    }
                    total
                })
                .collect();
            stats.expansions += m as u64;
            table.push(row);
        }
        table
    }

    /// `P(T_iD | H = h)` for one node and hop count.
    pub fn hop_success_prob(&self, node: NodeId, hops: usize, cfg: &EvalConfig, stats: &mut EvalStats) -> f64 {
        assert!(hops >= 1);
        let Some(u) = self.local(node) else {
            return 0.0;
        };
        match cfg.mode {
            EvalMode::PrunedPathWalk => self.walk_success(u, hops, 1.0, cfg.path_threshold, stats),
            EvalMode::ExactMemoized => self.success_table(hops, stats)[hops - 1][u],
        }
    }

    /// `P(T_SD | H = h)` for `h = 1..=H_M`.
    pub fn source_success(&self, cfg: &EvalConfig, stats: &mut EvalStats) -> Vec<f64> {
        match cfg.mode {
            EvalMode::PrunedPathWalk => (1..=cfg.max_hops)
                .map(|h| self.walk_success(0, h, 1.0, cfg.path_threshold, stats))
                .collect(),
            EvalMode::ExactMemoized => self
                .success_table(cfg.max_hops, stats)
                .into_iter()
                .map(|row| row[0])
                .collect(),
        }
    }

    /// `E(T_SD | H = h)` for `h = 1..=H_M`.
    pub fn source_energy(&self, cfg: &EvalConfig, stats: &mut EvalStats) -> Vec<f64> {
        match cfg.mode {
            EvalMode::PrunedPathWalk => (1..=cfg.max_hops)
                .map(|h| self.walk_energy(0, h, 1.0, cfg, stats))
                .collect(),
            EvalMode::ExactMemoized => self
                .energy_table(cfg, stats)
                .into_iter()
                .map(|row| row[0])
                .collect(),
        }
    }

    pub fn frame(&self) -> usize {
        self.frame
    }
}

/// `1 - prod_h (1 - P_h)`, accumulated as `f += (1 - f) P_h`.
pub fn robustness_from(hop_success: &[f64]) -> f64 {
    hop_success
        .iter()
        .fold(0.0, |f, &p| f + (1.0 - f) * p)
}

/// `R_h = P_h * prod_{i<h} (1 - P_i)`.
pub fn arrival_distribution(hop_success: &[f64]) -> Vec<f64> {
    let mut miss = 1.0;
    hop_success
        .iter()
        .map(|&p| {
            let r = p * miss;
            miss *= 1.0 - p;
            r
        })
        .collect()
}

/// `R * sqrt(sum_h (h - 1)^2 R_h)`, or `+inf` when nothing arrives.
pub fn delay_from(arrivals: &[f64], frame: usize) -> f64 {
    if arrivals.iter().all(|&r| r == 0.0) {
        return f64::INFINITY;
    }
    let spread: f64 = arrivals
        .iter()
        .enumerate()
        .map(|(idx, &r)| (idx * idx) as f64 * r)
        .sum();
    frame as f64 * spread.sqrt()
}

pub fn hop_success_prob(
    node: NodeId,
    hops: usize,
    s: &Solution,
    profile: &ForwardingProfile,
    links: &LinkProbabilityTable,
    cfg: &EvalConfig,
) -> Result<f64, SolutionError> {
    let model = HopModel::new(s, links, profile)?;
    Ok(model.hop_success_prob(node, hops, cfg, &mut EvalStats::default()))
}

pub fn robustness(
    s: &Solution,
    profile: &ForwardingProfile,
    links: &LinkProbabilityTable,
    cfg: &EvalConfig,
) -> Result<f64, SolutionError> {
    let model = HopModel::new(s, links, profile)?;
    Ok(robustness_from(&model.source_success(cfg, &mut EvalStats::default())))
}

pub fn delay(
    s: &Solution,
    profile: &ForwardingProfile,
    links: &LinkProbabilityTable,
    cfg: &EvalConfig,
) -> Result<f64, SolutionError> {
    let model = HopModel::new(s, links, profile)?;
    let arrivals = arrival_distribution(&model.source_success(cfg, &mut EvalStats::default()));
    Ok(delay_from(&arrivals, s.frame()))
}

pub fn energy(
    s: &Solution,
    profile: &ForwardingProfile,
    links: &LinkProbabilityTable,
    cfg: &EvalConfig,
) -> Result<f64, SolutionError> {
    let model = HopModel::new(s, links, profile)?;
    Ok(model.source_energy(cfg, &mut EvalStats::default()).iter().sum())
}

/// Everything computed while evaluating one solution.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    pub hop_success: Vec<f64>,
    pub arrivals: Vec<f64>,
    pub hop_energy: Vec<f64>,
    pub profile: ForwardingProfile,
    pub stats: EvalStats,
}

/// Evaluates solutions against one network, alphabet and configuration.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub network: &'a Network,
    pub alphabet: &'a RateAlphabet,
    pub cfg: &'a EvalConfig,
}

impl<'a> Evaluator<'a> {
    pub fn new(network: &'a Network, alphabet: &'a RateAlphabet, cfg: &'a EvalConfig) -> Self {
        Self {
            network,
            alphabet,
            cfg,
        }
    }

    /// Link probabilities once, then the forwarding profile, then the
    /// three objectives. Infeasible solutions are rejected with their report.
    pub fn evaluate_detailed(&self, s: &Solution) -> Result<Evaluation, EvalError> {
        let mut report = validate_structure(s, &self.network.topology, s.frame(), self.alphabet)?;
        if !report.structurally_valid() {
            return Err(EvalError::Infeasible(report));
        }
        let links = LinkProbabilityTable::compute(s, self.network, &self.cfg.enumeration)?;
        let profile = ForwardingProfile::compute(
            s,
            &links,
            self.network.source(),
            self.network.destination(),
            self.cfg.usefulness,
        );
        report.check_forwarding(&profile);
        if !report.is_feasible() {
            return Err(EvalError::Infeasible(report));
        }
        let model = HopModel::new(s, &links, &profile)?;
        let mut stats = EvalStats::default();
        let hop_success = model.source_success(self.cfg, &mut stats);
        let hop_energy = model.source_energy(self.cfg, &mut stats);
        let arrivals = arrival_distribution(&hop_success);
        let objectives = ObjectiveVector {
            robustness: robustness_from(&hop_success),
            delay: delay_from(&arrivals, s.frame()),
            energy: hop_energy.iter().sum(),
        };
        Ok(Evaluation {
            objectives,
            hop_success,
            arrivals,
            hop_energy,
            profile,
            stats,
        })
    }

    pub fn evaluate(&self, s: &Solution) -> Result<ObjectiveVector, EvalError> {
        self.evaluate_detailed(s).map(|e| e.objectives)
    }
}
