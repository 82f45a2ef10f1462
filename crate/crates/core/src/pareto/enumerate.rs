use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::objectives::{EvalConfig, EvalError, Evaluator};
use crate::phy::Network;

use super::{ArchiveEntry, MRelayProblem, ParetoArchive, RelaySpace, SearchError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationCounts {
    /// Solutions enumerated.
    pub total: u64,
    /// Solutions passing the `x <= 1` screen.
    pub feasible: u64,
    /// Archive size.
    pub pareto: u64,
}

#[derive(Debug, Clone)]
pub struct EnumerationOutcome {
    /// Sorted by solution id.
    pub archive: ParetoArchive,
    pub counts: EnumerationCounts,
}

/// Chunks per worker; more than one keeps workers busy when chunk costs vary.
const CHUNKS_PER_WORKER: u128 = 4;

fn evaluate_range(
    space: &RelaySpace,
    evaluator: &Evaluator<'_>,
    lo: u128,
    hi: u128,
    mut sink: impl FnMut(ArchiveEntry),
) -> Result<(), SearchError> {
    for id in lo..hi {
        let solution = space.solution_at(id);
        match evaluator.evaluate(&solution) {
            Ok(objectives) => sink(ArchiveEntry {
                id: id as u64,
                solution,
                objectives,
            }),
            Err(EvalError::Infeasible(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn checked_space(
    problem: &MRelayProblem,
    network: &Network,
    cfg: &EvalConfig,
) -> Result<RelaySpace, SearchError> {
    cfg.validate()?;
    let space = RelaySpace::new(problem, &network.topology)?;
    if space.size() > u128::from(problem.budget) {
        return Err(SearchError::BudgetExceeded {
            size: space.size().to_string(),
            budget: problem.budget,
        });
    }
    Ok(space)
}

/// Evaluate every solution of the M-relay problem and keep the
/// non-dominated ones.
///
/// The index space is cut into contiguous chunks; each chunk fills its own
/// archive and the archives are merged pairwise. The final set is the same
/// for every `jobs` value.
pub fn enumerate_m_relay(
    problem: &MRelayProblem,
    network: &Network,
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<EnumerationOutcome, SearchError> {
    let space = checked_space(problem, network, cfg)?;
    let evaluator = Evaluator::new(network, &problem.alphabet, cfg);
    let jobs = jobs.max(1);
    let size = space.size();

    let run_chunk = |(lo, hi): (u128, u128)| -> Result<(ParetoArchive, u64), SearchError> {
        let mut archive = ParetoArchive::new();
        let mut feasible = 0;
        evaluate_range(&space, &evaluator, lo, hi, |e| {
            feasible += 1;
            archive.insert(e);
        })?;
        Ok((archive, feasible))
    };

    let (mut archive, feasible) = if jobs == 1 {
        run_chunk((0, size))?
    } else {
        let n_chunks = (jobs as u128 * CHUNKS_PER_WORKER).min(size.max(1));
        let chunks: Vec<(u128, u128)> = (0..n_chunks)
            .map(|c| (size * c / n_chunks, size * (c + 1) / n_chunks))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| SearchError::Pool(e.to_string()))?;
        pool.install(|| {
            chunks.into_par_iter().map(run_chunk).try_reduce(
                || (ParetoArchive::new(), 0),
                |(a, fa), (b, fb)| Ok((a.merge(b), fa + fb)),
            )
        })?
    };
    archive.sort_by_id();
    let counts = EnumerationCounts {
        total: size as u64,
        feasible,
        pareto: archive.len() as u64,
    };
    Ok(EnumerationOutcome { archive, counts })
}

/// Every feasible solution of the problem with its objectives, in
/// enumeration order. Single-threaded.
pub fn evaluate_all(
    problem: &MRelayProblem,
    network: &Network,
    cfg: &EvalConfig,
) -> Result<Vec<ArchiveEntry>, SearchError> {
    let space = checked_space(problem, network, cfg)?;
    let evaluator = Evaluator::new(network, &problem.alphabet, cfg);
    let mut out = Vec::new();
    evaluate_range(&space, &evaluator, 0, space.size(), |e| out.push(e))?;
    Ok(out)
}
