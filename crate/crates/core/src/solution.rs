//! Routing strategies as `N x R` rate tables, their feasibility, and the
//! forwarding probabilities they imply.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::{EnumerationConfig, LinkProbabilityTable, Network, PhyError};
use crate::topology::{NetworkTopology, NodeId};

/// Slack applied to the cumulative-slot constraint so that sums like
/// `0.35 + 0.65` are not rejected over a rounding ulp.
pub const RATE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SolutionError {
    #[error("rate table is {got_nodes} x {got_frame}, expected {nodes} x {frame}")]
    DimensionMismatch {
        nodes: usize,
        frame: usize,
        got_nodes: usize,
        got_frame: usize,
    },
    #[error("invalid rate alphabet: {0}")]
    Alphabet(String),
    #[error("node {0} is inactive, its global link probability is undefined")]
    Inactive(NodeId),
    #[error("link probability p({0}, {1}, {2}) is not available")]
    MissingLink(NodeId, NodeId, usize),
    #[error("malformed solution document: {0}")]
    Document(String),
    #[error(transparent)]
    Phy(#[from] PhyError),
}

/// Sorted set of allowed transmission rates, always containing 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RateAlphabet(Vec<f64>);

impl RateAlphabet {
    pub fn new(values: Vec<f64>) -> Result<Self, SolutionError> {
        if values.first() != Some(&0.0) {
            return Err(SolutionError::Alphabet("must start with 0".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(SolutionError::Alphabet("values must lie in [0, 1]".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SolutionError::Alphabet("values must be strictly increasing".into()));
        }
        Ok(Self(values))
    }

    /// `{0, 1/steps, 2/steps, ..., 1}`
    pub fn uniform(steps: u32) -> Self {
        assert!(steps >= 1);
        Self(
            (0..=steps)
                .map(|k| f64::from(k) / f64::from(steps))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, tau: f64) -> bool {
        self.0.binary_search_by(|v| v.total_cmp(&tau)).is_ok()
    }
}

impl Default for RateAlphabet {
    /// 21 levels in steps of 0.05.
    fn default() -> Self {
        Self::uniform(20)
    }
}

impl TryFrom<Vec<f64>> for RateAlphabet {
    type Error = SolutionError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<RateAlphabet> for Vec<f64> {
    fn from(a: RateAlphabet) -> Self {
        a.0
    }
}

/// The source's fixed per-resource rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourcePattern(pub Vec<f64>);

impl SourcePattern {
    /// Constant traffic in the first resource only.
    pub fn first_slot(frame: usize) -> Self {
        let mut rates = vec![0.0; frame];
        rates[0] = 1.0;
        Self(rates)
    }
}

/// Transmission rates `tau_i(r)` for every node and resource.
#[derive(Clone, PartialEq)]
pub struct Solution {
    n_nodes: usize,
    frame: usize,
    rates: Vec<f64>,
}

impl fmt::Debug for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let active: Vec<_> = self
            .active_nodes()
            .into_iter()
            .map(|i| (i, self.row(i).to_vec()))
            .collect();
        f.debug_struct("Solution")
            .field("n_nodes", &self.n_nodes)
            .field("frame", &self.frame)
            .field("active", &active)
            .finish()
    }
}

impl Solution {
    pub fn zeros(n_nodes: usize, frame: usize) -> Self {
        Self {
            n_nodes,
            frame,
            rates: vec![0.0; n_nodes * frame],
        }
    }

    /// Zero table with the source row set to `pattern`.
    pub fn with_source(topology: &NetworkTopology, pattern: &SourcePattern) -> Self {
        let mut s = Self::zeros(topology.len(), pattern.0.len());
        s.set_row(topology.source, &pattern.0);
        s
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    #[inline]
    pub fn rate(&self, node: NodeId, resource: usize) -> f64 {
        self.rates[node * self.frame + resource]
    }

    pub fn set_rate(&mut self, node: NodeId, resource: usize, tau: f64) {
        self.rates[node * self.frame + resource] = tau;
    }

    #[inline]
    pub fn row(&self, node: NodeId) -> &[f64] {
        &self.rates[node * self.frame..(node + 1) * self.frame]
    }

    pub fn set_row(&mut self, node: NodeId, rates: &[f64]) {
        self.rates[node * self.frame..(node + 1) * self.frame].copy_from_slice(rates);
    }

    /// `sum_r tau_i(r)`
    #[inline]
    pub fn cumulative_rate(&self, node: NodeId) -> f64 {
        self.row(node).iter().sum()
    }

    pub fn active_nodes(&self) -> Vec<NodeId> {
        active_nodes(self)
    }

    pub fn to_document(&self, alphabet: &RateAlphabet) -> SolutionDocument {
        let mut rates = Vec::new();
        for i in 0..self.n_nodes {
            for r in 0..self.frame {
                let tau = self.rate(i, r);
                if tau != 0.0 {
                    rates.push((i, r, tau));
                }
            }
        }
        SolutionDocument {
            node_count: self.n_nodes,
            frame: self.frame,
            alphabet: alphabet.clone(),
            rates,
        }
    }
}

/// Sparse on-disk form of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    pub node_count: usize,
    pub frame: usize,
    pub alphabet: RateAlphabet,
    /// `[node, resource, tau]` for every nonzero entry.
    pub rates: Vec<(NodeId, usize, f64)>,
}

impl SolutionDocument {
    pub fn to_solution(&self) -> Result<Solution, SolutionError> {
        if self.frame == 0 {
            return Err(SolutionError::Document("frame must be at least 1".into()));
        }
        let mut s = Solution::zeros(self.node_count, self.frame);
        for &(i, r, tau) in &self.rates {
            if i >= self.node_count || r >= self.frame {
                return Err(SolutionError::Document(format!(
                    "entry [{i}, {r}, {tau}] outside a {} x {} table",
                    self.node_count, self.frame
                )));
            }
            s.set_rate(i, r, tau);
        }
        Ok(s)
    }
}

/// Nodes with `sum_r tau_i(r) > 0`, in index order.
pub fn active_nodes(s: &Solution) -> Vec<NodeId> {
    (0..s.n_nodes)
        .filter(|&i| s.row(i).iter().any(|&t| t > 0.0))
        .collect()
}

/// Number of candidate solutions `sum_m C(N-2, m) * T^(R m)`, before any
/// constraint is applied.
pub fn search_space_size(n_nodes: u64, alphabet_len: u64, frame: u64) -> BigUint {
    assert!(n_nodes >= 2 && alphabet_len >= 1 && frame >= 1);
    let relays = n_nodes - 2;
    let per_relay = BigUint::from(alphabet_len).pow(u32::try_from(frame).expect("frame fits u32"));
    let mut total = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    let mut power = BigUint::from(1u32);
    for m in 0..=relays {
        total += &binom * &power;
        binom = binom * BigUint::from(relays - m) / BigUint::from(m + 1);
        power *= &per_relay;
    }
    total
}

/// Definition of the global link probability: `p_ij(r)` averaged over the
/// resources `i` uses, weighted by `tau_i(r) / sum_r tau_i(r)`.
pub fn global_link_probability(
    i: NodeId,
    j: NodeId,
    s: &Solution,
    links: &LinkProbabilityTable,
) -> Result<f64, SolutionError> {
    let total = s.cumulative_rate(i);
    if !(total > 0.0) {
        return Err(SolutionError::Inactive(i));
    }
    let mut p = 0.0;
    for (r, &tau) in s.row(i).iter().enumerate() {
        if tau != 0.0 {
            let pr = links.get(i, j, r).ok_or(SolutionError::MissingLink(i, j, r))?;
            p += pr * tau / total;
        }
    }
    Ok(p)
}

/// `q_i = sum_{k != i, D} sum_r p_ki(r) tau_k(r) v_ki`.
///
/// `usefulness[k]` is `v_ki`; it depends only on the hop counts of the
/// packets `k` holds, so one value per transmitter suffices.
pub fn incoming_traffic(
    i: NodeId,
    s: &Solution,
    links: &LinkProbabilityTable,
    destination: NodeId,
    usefulness: &[f64],
) -> f64 {
    let mut q = 0.0;
    for &k in links.nodes() {
        if k == i || k == destination {
            continue;
        }
        for r in 0..s.frame() {
            let tau = s.rate(k, r);
            if tau > 0.0 {
                if let Some(p) = links.get(k, i, r) {
                    q += p * tau * usefulness[k];
                }
            }
        }
    }
    q
}

/// `x_i = sum_r tau_i(r) / q_i`. Idle nodes get 0; a node that transmits
/// with no incoming traffic gets `+inf`.
pub fn forwarding_probability(
    i: NodeId,
    s: &Solution,
    links: &LinkProbabilityTable,
    destination: NodeId,
    usefulness: &[f64],
) -> f64 {
    let out = s.cumulative_rate(i);
    if out == 0.0 {
        return 0.0;
    }
    let q = incoming_traffic(i, s, links, destination, usefulness);
    if q == 0.0 {
        f64::INFINITY
    } else {
        out / q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UsefulnessMode {
    /// `v_ki = 1` everywhere.
    #[default]
    Unit,
    /// One refinement pass: `v_k` is the fraction of `k`'s hop-arrival mass
    /// that arrives with fewer than `max_hops` hops.
    HopArrival { max_hops: usize },
}

/// Node-level quantities derived from a rate table.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardingProfile {
    pub source: NodeId,
    pub destination: NodeId,
    /// `sum_r tau_i(r)`
    pub outgoing: Vec<f64>,
    /// `q_i`
    pub incoming: Vec<f64>,
    /// `x_i`; 0 for the source and destination, which never forward.
    pub forwarding: Vec<f64>,
    /// `xi_i`, the availability multiplier.
    pub availability: Vec<f64>,
    /// `v_ki`, stored per transmitter `k`.
    pub usefulness: Vec<f64>,
}

impl ForwardingProfile {
    pub fn compute(
        s: &Solution,
        links: &LinkProbabilityTable,
        source: NodeId,
        destination: NodeId,
        mode: UsefulnessMode,
    ) -> Self {
        let n = s.n_nodes();
        let outgoing = (0..n).map(|i| s.cumulative_rate(i)).collect();
        let mut profile = Self {
            source,
            destination,
            outgoing,
            incoming: vec![0.0; n],
            forwarding: vec![0.0; n],
            availability: vec![1.0; n],
            usefulness: vec![1.0; n],
        };
        profile.refresh(s, links);
        if let UsefulnessMode::HopArrival { max_hops } = mode {
            profile.usefulness = hop_arrival_usefulness(s, links, &profile, max_hops);
            profile.refresh(s, links);
        }
        profile
    }

    pub fn with_availability(mut self, availability: Vec<f64>) -> Self {
        assert_eq!(availability.len(), self.forwarding.len());
        self.availability = availability;
        self
    }

    fn refresh(&mut self, s: &Solution, links: &LinkProbabilityTable) {
        for &i in links.nodes() {
            if i == self.source || i == self.destination {
                continue;
            }
            let q = incoming_traffic(i, s, links, self.destination, &self.usefulness);
            self.incoming[i] = q;
            self.forwarding[i] = if self.outgoing[i] == 0.0 {
                0.0
            } else if q == 0.0 {
                f64::INFINITY
            } else {
                self.outgoing[i] / q
            };
        }
    }

    /// `chi_j = xi_j * x_j`
    #[inline]
    pub fn node_probability(&self, j: NodeId) -> f64 {
        self.availability[j] * self.forwarding[j]
    }

    /// `p * chi_j` for a link into relay `j` with global probability `p`.
    ///
    /// Evaluated as `xi_j * out_j * (p / q_j)` so that the common case
    /// `p = q_j` is exact.
    #[inline]
    pub fn relay_gain(&self, p: f64, j: NodeId) -> f64 {
        let q = self.incoming[j];
        if self.outgoing[j] == 0.0 || q == 0.0 {
            return 0.0;
        }
        self.availability[j] * self.outgoing[j] * (p / q)
    }
}

/// Hop-arrival distribution at every relay, then `v_k = P(h < H) / P(h <= H)`.
fn hop_arrival_usefulness(
    s: &Solution,
    links: &LinkProbabilityTable,
    profile: &ForwardingProfile,
    max_hops: usize,
) -> Vec<f64> {
    let n = s.n_nodes();
    let relays: Vec<NodeId> = links
        .nodes()
        .iter()
        .copied()
        .filter(|&k| k != profile.source && k != profile.destination && profile.outgoing[k] > 0.0)
        .collect();
    let global = |i: NodeId, j: NodeId| global_link_probability(i, j, s, links).unwrap_or(0.0);

    let mut usefulness = vec![1.0; n];
    if max_hops < 2 {
        for &k in &relays {
            usefulness[k] = 0.0;
        }
        return usefulness;
    }
    // arrivals[h - 1][k]: probability k receives the packet at hop h
    let mut arrivals = vec![vec![0.0; n]];
    for &k in &relays {
        arrivals[0][k] = global(profile.source, k);
    }
    for h in 1..max_hops {
        let prev = &arrivals[h - 1];
        let mut next = vec![0.0; n];
        for &k in &relays {
            let miss: f64 = relays
                .iter()
                .filter(|&&j| j != k)
                .map(|&j| 1.0 - prev[j] * profile.node_probability(j) * global(j, k))
                .product();
            next[k] = 1.0 - miss;
        }
        arrivals.push(next);
    }
    for &k in &relays {
        let total: f64 = arrivals.iter().map(|a| a[k]).sum();
        if total > 0.0 {
            let useful: f64 = arrivals[..max_hops - 1].iter().map(|a| a[k]).sum();
            usefulness[k] = useful / total;
        }
    }
    usefulness
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    /// Entries not in the alphabet.
    pub alphabet_violations: Vec<(NodeId, usize, f64)>,
    /// Nodes with `sum_r tau_i(r) > R - 1`.
    pub slot_violations: Vec<(NodeId, f64)>,
    pub destination_transmits: bool,
    /// Relays with `x_i > 1`.
    pub forwarding_violations: Vec<(NodeId, f64)>,
    /// Relays that transmit but receive nothing.
    pub orphan_transmitters: Vec<NodeId>,
    /// False until the forwarding check has run.
    pub forwarding_checked: bool,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.alphabet_violations.is_empty()
            && self.slot_violations.is_empty()
            && !self.destination_transmits
            && self.forwarding_violations.is_empty()
            && self.orphan_transmitters.is_empty()
    }

    pub fn structurally_valid(&self) -> bool {
        self.alphabet_violations.is_empty()
            && self.slot_violations.is_empty()
            && !self.destination_transmits
    }

    /// Record the `x_i <= 1` screen for every relay.
    pub fn check_forwarding(&mut self, profile: &ForwardingProfile) {
        self.forwarding_checked = true;
        for (i, &x) in profile.forwarding.iter().enumerate() {
            if i == profile.source || i == profile.destination || profile.outgoing[i] == 0.0 {
                continue;
            }
            if profile.incoming[i] == 0.0 {
                self.orphan_transmitters.push(i);
            } else if x > 1.0 {
                self.forwarding_violations.push((i, x));
            }
        }
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_feasible() {
            return write!(f, "feasible");
        }
        let mut parts = Vec::new();
        if !self.alphabet_violations.is_empty() {
            parts.push(format!("{} rates outside the alphabet", self.alphabet_violations.len()));
        }
        for (i, sum) in &self.slot_violations {
            parts.push(format!("node {i} uses {sum} cumulative slots"));
        }
        if self.destination_transmits {
            parts.push("destination transmits".into());
        }
        for (i, x) in &self.forwarding_violations {
            parts.push(format!("relay {i} has forwarding probability {x} > 1"));
        }
        for i in &self.orphan_transmitters {
            parts.push(format!("relay {i} transmits without incoming traffic"));
        }
        write!(f, "infeasible: {}", parts.join("; "))
    }
}

/// Alphabet membership, the cumulative-slot constraint and a silent
/// destination. Does not need link probabilities.
pub fn validate_structure(
    s: &Solution,
    topology: &NetworkTopology,
    frame: usize,
    alphabet: &RateAlphabet,
) -> Result<FeasibilityReport, SolutionError> {
    if s.n_nodes() != topology.len() || s.frame() != frame {
        return Err(SolutionError::DimensionMismatch {
            nodes: topology.len(),
            frame,
            got_nodes: s.n_nodes(),
            got_frame: s.frame(),
        });
    }
    let limit = frame as f64 - 1.0 + RATE_SUM_TOLERANCE;
    let mut report = FeasibilityReport::default();
    for i in 0..s.n_nodes() {
        for (r, &tau) in s.row(i).iter().enumerate() {
            if !alphabet.contains(tau) {
                report.alphabet_violations.push((i, r, tau));
            }
        }
        if i == topology.source {
            continue;
        }
        let sum = s.cumulative_rate(i);
        if sum > limit {
            report.slot_violations.push((i, sum));
        }
    }
    report.destination_transmits = s.cumulative_rate(topology.destination) > 0.0;
    Ok(report)
}

/// Full feasibility check, including `x_i <= 1` for every relay.
pub fn validate(
    s: &Solution,
    network: &Network,
    alphabet: &RateAlphabet,
    enumeration: &EnumerationConfig,
    usefulness: UsefulnessMode,
) -> Result<FeasibilityReport, SolutionError> {
    let mut report = validate_structure(s, &network.topology, s.frame(), alphabet)?;
    if report.structurally_valid() {
        let links = LinkProbabilityTable::compute(s, network, enumeration)?;
        let profile = ForwardingProfile::compute(
            s,
            &links,
            network.source(),
            network.destination(),
            usefulness,
        );
        report.check_forwarding(&profile);
    }
    Ok(report)
}
