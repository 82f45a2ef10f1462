use serde::{Deserialize, Serialize};

use crate::solution::{RateAlphabet, Solution, SourcePattern, RATE_SUM_TOLERANCE};
use crate::topology::{NetworkTopology, NodeId};

use super::SearchError;

/// Restriction of the search to solutions with at most `max_relays`
/// forwarding nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MRelayProblem {
    pub max_relays: usize,
    /// Candidate relays; never the source or destination.
    pub candidates: Vec<NodeId>,
    pub alphabet: RateAlphabet,
    pub source_pattern: SourcePattern,
    /// Exhaustive enumeration refuses spaces larger than this.
    pub budget: u64,
}

impl MRelayProblem {
    pub fn new(
        topology: &NetworkTopology,
        max_relays: usize,
        alphabet: RateAlphabet,
        source_pattern: SourcePattern,
    ) -> Self {
        Self {
            max_relays,
            candidates: topology.relay_candidates(),
            alphabet,
            source_pattern,
            budget: 10_000_000,
        }
    }

    pub fn frame(&self) -> usize {
        self.source_pattern.0.len()
    }
}

/// Relays of one solution with the index of their rate vector, sorted by
/// node id.
pub type RelayAssignment = Vec<(NodeId, usize)>;

/// Bijection between `0..size` and the solutions of an [`MRelayProblem`].
///
/// Blocks are ordered by relay count; inside a block, relay combinations are
/// in lexicographic node order and rate vectors in lexicographic alphabet
/// order, the first relay being most significant.
#[derive(Debug, Clone)]
pub struct RelaySpace {
    candidates: Vec<NodeId>,
    rate_vectors: Vec<Vec<f64>>,
    /// Alphabet digits of each rate vector, for reverse lookup.
    vector_lookup: Vec<Option<usize>>,
    alphabet_len: usize,
    frame: usize,
    /// `(first index, size)` of the block with `m` relays.
    blocks: Vec<(u128, u128)>,
    size: u128,
    template: Solution,
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

impl RelaySpace {
    pub fn new(problem: &MRelayProblem, topology: &NetworkTopology) -> Result<Self, SearchError> {
        let frame = problem.frame();
        if frame == 0 {
            return Err(SearchError::Problem("frame must have at least one resource".into()));
        }
        if problem
            .candidates
            .iter()
            .any(|&k| k == topology.source || k == topology.destination || k >= topology.len())
        {
            return Err(SearchError::Problem(
                "candidates must be valid nodes other than source and destination".into(),
            ));
        }
        let mut candidates = problem.candidates.clone();
        candidates.sort_unstable();
        candidates.dedup();

        let values = problem.alphabet.values();
        let t = values.len();
        let lookup_len = t
            .checked_pow(frame as u32)
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| SearchError::Problem("alphabet^frame is too large to index".into()))?;
        let limit = frame as f64 - 1.0 + RATE_SUM_TOLERANCE;
        let mut rate_vectors = Vec::new();
        let mut vector_lookup = vec![None; lookup_len];
        for code in 1..lookup_len {
            // digits, first resource most significant
            let mut digits = vec![0; frame];
            let mut rest = code;
            for r in (0..frame).rev() {
                digits[r] = rest % t;
                rest /= t;
            }
            let rates: Vec<f64> = digits.iter().map(|&d| values[d]).collect();
            if rates.iter().sum::<f64>() <= limit {
                vector_lookup[code] = Some(rate_vectors.len());
                rate_vectors.push(rates);
            }
        }

        let v = rate_vectors.len();
        let mut blocks = Vec::new();
        let mut size: u128 = 0;
        let overflow = || SearchError::BudgetExceeded {
            size: "more than 2^128".into(),
            budget: problem.budget,
        };
        for m in 0..=problem.max_relays.min(candidates.len()) {
            let combos = binomial(candidates.len(), m).ok_or_else(overflow)?;
            let vectors = (v as u128).checked_pow(m as u32).ok_or_else(overflow)?;
            let block = combos.checked_mul(vectors).ok_or_else(overflow)?;
            blocks.push((size, block));
            size = size.checked_add(block).ok_or_else(overflow)?;
        }

        Ok(Self {
            candidates,
            rate_vectors,
            vector_lookup,
            alphabet_len: t,
            frame,
            blocks,
            size,
            template: Solution::with_source(topology, &problem.source_pattern),
        })
    }

    pub fn size(&self) -> u128 {
        self.size
    }

    /// Nonzero per-relay rate vectors obeying `sum_r tau(r) <= R - 1`.
    pub fn rate_vectors(&self) -> &[Vec<f64>] {
        &self.rate_vectors
    }

    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn max_relays(&self) -> usize {
        self.blocks.len() - 1
    }

    /// `(first index, size)` of the block holding solutions with `m` relays.
    pub fn block(&self, m: usize) -> (u128, u128) {
        self.blocks[m]
    }

    /// Index of the rate vector with these rates, if it is admissible.
    pub fn vector_index(&self, rates: &[f64], alphabet: &RateAlphabet) -> Option<usize> {
        let mut code = 0;
        for &tau in rates {
            let d = alphabet
                .values()
                .binary_search_by(|v| v.total_cmp(&tau))
                .ok()?;
            code = code * self.alphabet_len + d;
        }
        self.vector_lookup.get(code).copied().flatten()
    }

    pub fn decode(&self, index: u128) -> RelayAssignment {
        assert!(index < self.size, "index {index} outside space of {}", self.size);
        let m = self
            .blocks
            .iter()
            .rposition(|&(start, len)| len > 0 && index >= start)
            .expect("index inside some block");
        let mut rest = index - self.blocks[m].0;
        let v = self.rate_vectors.len() as u128;
        let per_combo = v.pow(m as u32);
        let mut combo_rank = rest / per_combo;
        rest %= per_combo;

        let c = self.candidates.len();
        let mut picks = Vec::with_capacity(m);
        let mut next = 0;
        for slot in 0..m {
            loop {
                let count = binomial(c - next - 1, m - slot - 1).unwrap();
                if combo_rank < count {
                    break;
                }
                combo_rank -= count;
                next += 1;
            }
            picks.push(next);
            next += 1;
        }

        let mut vectors = vec![0; m];
        for slot in (0..m).rev() {
            vectors[slot] = (rest % v) as usize;
            rest /= v;
        }
        picks
            .into_iter()
            .zip(vectors)
            .map(|(p, vi)| (self.candidates[p], vi))
            .collect()
    }

    /// Inverse of [`decode`](Self::decode). `assignment` must be sorted by
    /// node with distinct candidate relays.
    pub fn encode(&self, assignment: &[(NodeId, usize)]) -> u128 {
        let m = assignment.len();
        let c = self.candidates.len();
        let v = self.rate_vectors.len() as u128;
        let mut combo_rank: u128 = 0;
        let mut next = 0;
        for (slot, &(node, _)) in assignment.iter().enumerate() {
            let p = self
                .candidates
                .binary_search(&node)
                .expect("relay is a candidate");
            while next < p {
                combo_rank += binomial(c - next - 1, m - slot - 1).unwrap();
                next += 1;
            }
            next = p + 1;
        }
        let mut vec_rank: u128 = 0;
        for &(_, vi) in assignment {
            vec_rank = vec_rank * v + vi as u128;
        }
        self.blocks[m].0 + combo_rank * v.pow(m as u32) + vec_rank
    }

    pub fn solution(&self, assignment: &[(NodeId, usize)]) -> Solution {
        let mut s = self.template.clone();
        for &(node, vi) in assignment {
            s.set_row(node, &self.rate_vectors[vi]);
        }
        s
    }

    pub fn solution_at(&self, index: u128) -> Solution {
        self.solution(&self.decode(index))
    }

    pub fn frame(&self) -> usize {
        self.frame
    }
}
