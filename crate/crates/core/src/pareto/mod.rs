//! Pareto dominance, the non-dominated archive, and the two ways of filling
//! it: exhaustive M-relay enumeration and a seeded stochastic search.

mod enumerate;
mod search;
mod space;

pub use enumerate::{enumerate_m_relay, evaluate_all, EnumerationCounts, EnumerationOutcome};
pub use search::{stochastic_search, SearchOutcome};
pub use space::{MRelayProblem, RelayAssignment, RelaySpace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::{EvalError, ObjectiveVector};
use crate::solution::Solution;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(
        "search space of {size} solutions exceeds the enumeration budget of {budget}; \
         use the stochastic search instead"
    )]
    BudgetExceeded { size: String, budget: u64 },
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// `a` dominates `b`: no worse on every objective (robustness maximized,
/// delay and energy minimized) and strictly better on at least one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let no_worse =
        a.robustness >= b.robustness && a.delay <= b.delay && a.energy <= b.energy;
    let better = a.robustness > b.robustness || a.delay < b.delay || a.energy < b.energy;
    no_worse && better
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    /// Position of the solution in its problem's enumeration order.
    pub id: u64,
    pub solution: Solution,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveCounters {
    pub offered: u64,
    pub accepted: u64,
    pub evicted: u64,
    pub comparisons: u64,
}

/// Mutually non-dominated set of evaluated solutions. Entries with equal
/// objective vectors are all kept.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
    pub counters: ArchiveCounters,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<ArchiveEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns whether the entry was kept.
    pub fn insert(&mut self, entry: ArchiveEntry) -> bool {
        self.counters.offered += 1;
        for e in &self.entries {
            self.counters.comparisons += 1;
            if dominates(&e.objectives, &entry.objectives) {
                return false;
            }
            if e.objectives == entry.objectives && e.solution == entry.solution {
                return false;
            }
        }
        let before = self.entries.len();
        let mut comparisons = 0;
        self.entries.retain(|e| {
            comparisons += 1;
            !dominates(&entry.objectives, &e.objectives)
        });
        self.counters.comparisons += comparisons;
        self.counters.evicted += (before - self.entries.len()) as u64;
        self.counters.accepted += 1;
        self.entries.push(entry);
        true
    }

    /// Insert every entry of `other`. The resulting set does not depend on
    /// the order of merges.
    pub fn merge(mut self, other: ParetoArchive) -> ParetoArchive {
        let (mut big, small) = if self.entries.len() >= other.entries.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, self)
        };
        let extra = small.counters;
        for e in small.entries {
            big.insert(e);
        }
        big.counters.offered += extra.offered;
        big.counters.accepted += extra.accepted;
        big.counters.evicted += extra.evicted;
        big.counters.comparisons += extra.comparisons;
        big
    }

    /// Sort entries by id for reproducible output.
    pub fn sort_by_id(&mut self) {
        self.entries.sort_by_key(|e| e.id);
    }

    /// True when no entry dominates another.
    pub fn is_mutually_non_dominated(&self) -> bool {
        self.entries.iter().all(|a| {
            self.entries
                .iter()
                .all(|b| !dominates(&a.objectives, &b.objectives))
        })
    }
}

impl FromIterator<ArchiveEntry> for ParetoArchive {
    fn from_iter<T: IntoIterator<Item = ArchiveEntry>>(iter: T) -> Self {
        let mut archive = ParetoArchive::new();
        for e in iter {
            archive.insert(e);
        }
        archive
    }
}
