use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::objectives::{EvalConfig, EvalError, Evaluator};
use crate::phy::Network;

use super::{ArchiveEntry, MRelayProblem, ParetoArchive, RelayAssignment, RelaySpace, SearchError};

/// Chance of a random restart instead of mutating an archived solution.
const RESTART_PROBABILITY: f64 = 0.2;
/// Attempts at drawing an unseen solution before falling back to a scan.
const FRESH_ATTEMPTS: usize = 32;

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Sorted by solution id.
    pub archive: ParetoArchive,
    pub evaluations: u64,
    pub feasible: u64,
}

struct Sampler<'a> {
    space: &'a RelaySpace,
    problem: &'a MRelayProblem,
    rng: ChaCha8Rng,
    visited: HashSet<u128>,
    /// Everything below this index has been visited.
    scan: u128,
}

impl Sampler<'_> {
    fn random_index(&mut self) -> u128 {
        let non_empty: Vec<usize> = (0..=self.space.max_relays())
            .filter(|&m| self.space.block(m).1 > 0)
            .collect();
        let m = *non_empty.choose(&mut self.rng).expect("the direct solution always exists");
        let (start, len) = self.space.block(m);
        start + self.rng.gen_range(0..len)
    }

    fn random_vector(&mut self) -> usize {
        self.rng.gen_range(0..self.space.rate_vectors().len())
    }

    /// One rate change, a relay move, or a relay addition.
    fn mutate(&mut self, parent: u128) -> u128 {
        let mut relays: RelayAssignment = self.space.decode(parent);
        let candidates = self.space.candidates();
        let can_add = relays.len() < self.space.max_relays();
        let choice = self.rng.gen_range(0..10);
        if relays.is_empty() || (choice == 0 && can_add) {
            let free: Vec<_> = candidates
                .iter()
                .copied()
                .filter(|c| relays.iter().all(|&(n, _)| n != *c))
                .collect();
            if let Some(&node) = free.choose(&mut self.rng) {
                if can_add && !self.space.rate_vectors().is_empty() {
                    let v = self.random_vector();
                    relays.push((node, v));
                }
            }
        } else if choice == 1 {
            let slot = self.rng.gen_range(0..relays.len());
            let free: Vec<_> = candidates
                .iter()
                .copied()
                .filter(|c| relays.iter().all(|&(n, _)| n != *c))
                .collect();
            if let Some(&node) = free.choose(&mut self.rng) {
                relays[slot].0 = node;
            }
        } else {
            let slot = self.rng.gen_range(0..relays.len());
            let mut rates = self.space.rate_vectors()[relays[slot].1].clone();
            let r = self.rng.gen_range(0..rates.len());
            rates[r] = *self
                .problem
                .alphabet
                .values()
                .choose(&mut self.rng)
                .expect("alphabet is non-empty");
            if rates.iter().all(|&t| t == 0.0) {
                relays.remove(slot);
            } else if let Some(v) = self.space.vector_index(&rates, &self.problem.alphabet) {
                relays[slot].1 = v;
            } else {
                relays[slot].1 = self.random_vector();
            }
        }
        relays.sort_unstable_by_key(|&(n, _)| n);
        self.space.encode(&relays)
    }

    /// An index not yet visited, or `None` once the space is exhausted.
    fn fresh(&mut self, proposal: u128) -> Option<u128> {
        if !self.visited.contains(&proposal) {
            return Some(proposal);
        }
        for _ in 0..FRESH_ATTEMPTS {
            let idx = self.random_index();
            if !self.visited.contains(&idx) {
                return Some(idx);
            }
        }
        while self.scan < self.space.size() {
            let idx = self.scan;
            self.scan += 1;
            if !self.visited.contains(&idx) {
                return Some(idx);
            }
        }
        None
    }
}

/// Dominance-driven random search over the M-relay space.
///
/// Each step either restarts from a uniformly drawn solution or mutates a
/// random archive member. Solutions are never evaluated twice, so a budget
/// at least as large as the space visits all of it.
pub fn stochastic_search(
    problem: &MRelayProblem,
    network: &Network,
    cfg: &EvalConfig,
    budget: u64,
    seed: u64,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let space = RelaySpace::new(problem, &network.topology)?;
    let evaluator = Evaluator::new(network, &problem.alphabet, cfg);
    let mut sampler = Sampler {
        space: &space,
        problem,
        rng: ChaCha8Rng::seed_from_u64(seed),
        visited: HashSet::new(),
        scan: 0,
    };
    let mut archive = ParetoArchive::new();
    let mut evaluations = 0;
    let mut feasible = 0;

    while evaluations < budget.max(1) {
        let proposal = if archive.is_empty() || sampler.rng.gen_bool(RESTART_PROBABILITY) {
            sampler.random_index()
        } else {
            let parent = archive.entries()[sampler.rng.gen_range(0..archive.len())].id;
            sampler.mutate(u128::from(parent))
        };
        let Some(id) = sampler.fresh(proposal) else {
            break;
        };
        sampler.visited.insert(id);
        evaluations += 1;
        let solution = space.solution_at(id);
        match evaluator.evaluate(&solution) {
            Ok(objectives) => {
                feasible += 1;
                archive.insert(ArchiveEntry {
                    id: id as u64,
                    solution,
                    objectives,
                });
            }
            Err(EvalError::Infeasible(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    archive.sort_by_id();
    Ok(SearchOutcome {
        archive,
        evaluations,
        feasible,
    })
}
