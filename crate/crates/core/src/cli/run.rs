//! Experiment orchestration: topology, evaluation, Pareto runs, artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::objectives::{Evaluation, Evaluator, ObjectiveVector};
use crate::pareto::{
    enumerate_m_relay, stochastic_search, ArchiveEntry, EnumerationCounts, MRelayProblem,
};
use crate::phy::Network;
use crate::solution::{search_space_size, SolutionDocument};
use crate::topology::{generate_topology, load_topology, save_topology, NetworkTopology};

use super::config::{derive_seed, ExperimentConfig, SeedStream, TopologySource};
use super::export::{write_archive_csv, write_archive_json, ArchiveHeader};
use super::{CliError, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub root: u64,
    pub topology: u64,
    pub search: u64,
}

impl RunSeeds {
    pub fn from_root(root: u64) -> Self {
        Self {
            root,
            topology: derive_seed(root, SeedStream::Topology),
            search: derive_seed(root, SeedStream::Search),
        }
    }
}

/// Written next to the artifacts as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seeds: RunSeeds,
    pub node_count: usize,
    /// Unconstrained `|S|` of the full problem, as a decimal string.
    pub full_space_size: String,
    pub counts: EnumerationCounts,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub entries: Vec<ArchiveEntry>,
    pub topology: NetworkTopology,
}

pub fn build_topology(cfg: &ExperimentConfig) -> Result<NetworkTopology, CliError> {
    match &cfg.topology {
        TopologySource::Generate(g) => {
            let radius = g.disk_radius()?;
            let seed = RunSeeds::from_root(cfg.seed).topology;
            Ok(generate_topology(
                g.density_per_m2,
                radius,
                g.core_radius_m.unwrap_or(radius),
                g.sd_separation_m,
                seed,
            )?)
        }
        TopologySource::File(p) => Ok(load_topology(p)?),
    }
}

pub fn build_network(cfg: &ExperimentConfig) -> Result<Network, CliError> {
    let topology = build_topology(cfg)?;
    Ok(Network::new(topology, cfg.phy_params())?)
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Generate (or load) the topology and write `topology.json`.
pub fn gen_topology(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let topology = build_topology(cfg)?;
    let path = prepare_out(cfg)?.join("topology.json");
    save_topology(&topology, &path)?;
    Ok(path)
}

/// Evaluate one solution document; writes `evaluation.json`.
pub fn evaluate_solution_file(
    cfg: &ExperimentConfig,
    solution: &Path,
) -> Result<(ObjectiveVector, PathBuf), CliError> {
    let text = fs::read_to_string(solution)?;
    let doc: SolutionDocument =
        serde_json::from_str(&text).map_err(|e| CliError::artifact(solution, e))?;
    let s = doc
        .to_solution()
        .map_err(|e| CliError::artifact(solution, e))?;
    let network = build_network(cfg)?;
    let eval_cfg = cfg.eval_config();
    let alphabet = cfg.alphabet()?;
    let evaluation: Evaluation = Evaluator::new(&network, &alphabet, &eval_cfg).evaluate_detailed(&s)?;

    #[derive(Serialize)]
    struct Report<'a> {
        config_hash: String,
        objectives: ObjectiveVector,
        hop_success: &'a [f64],
        arrivals: &'a [f64],
        hop_energy: &'a [f64],
        forwarding: &'a [f64],
    }
    let report = Report {
        config_hash: cfg.hash(),
        objectives: evaluation.objectives,
        hop_success: &evaluation.hop_success,
        arrivals: &evaluation.arrivals,
        hop_energy: &evaluation.hop_energy,
        forwarding: &evaluation.profile.forwarding,
    };
    let path = prepare_out(cfg)?.join("evaluation.json");
    let mut out = serde_json::to_string_pretty(&report).map_err(|e| CliError::artifact(&path, e))?;
    out.push('\n');
    fs::write(&path, out)?;
    Ok((evaluation.objectives, path))
}

fn problem(cfg: &ExperimentConfig, topology: &NetworkTopology) -> Result<MRelayProblem, CliError> {
    let mut p = MRelayProblem::new(
        topology,
        cfg.problem.max_relays,
        cfg.alphabet()?,
        cfg.source_pattern(),
    );
    p.budget = cfg.problem.enumeration_budget;
    Ok(p)
}

fn write_artifacts(
    cfg: &ExperimentConfig,
    command: &str,
    network: &Network,
    entries: Vec<ArchiveEntry>,
    counts: EnumerationCounts,
    started: Instant,
) -> Result<RunSummary, CliError> {
    let dir = prepare_out(cfg)?;
    let hash = cfg.hash();
    let topology = network.topology.clone();
    let header = ArchiveHeader::new(&hash, &topology, &cfg.source_pattern().0);
    let names = ["topology.json", "archive.csv", "archive.json", "manifest.json"];
    save_topology(&topology, dir.join(names[0]))?;
    write_archive_csv(&dir.join(names[1]), &header, &entries)?;
    write_archive_json(&dir.join(names[2]), &header, &entries)?;
    let alphabet = cfg.alphabet()?;
    let manifest = Manifest {
        version: VERSION.into(),
        command: command.into(),
        config_hash: hash,
        config: cfg.clone(),
        seeds: RunSeeds::from_root(cfg.seed),
        node_count: topology.len(),
        full_space_size: search_space_size(
            topology.len() as u64,
            alphabet.len() as u64,
            cfg.frame as u64,
        )
        .to_string(),
        counts,
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: names.iter().map(|s| s.to_string()).collect(),
    };
    let path = dir.join(names[3]);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::artifact(&path, e))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(RunSummary {
        manifest,
        entries,
        topology,
    })
}

/// Exhaustive M-relay enumeration with `cfg.jobs` workers.
pub fn run_exhaustive(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let network = build_network(cfg)?;
    let problem = problem(cfg, &network.topology)?;
    let outcome = enumerate_m_relay(&problem, &network, &cfg.eval_config(), cfg.jobs)?;
    let counts = outcome.counts;
    write_artifacts(
        cfg,
        "pareto-exhaustive",
        &network,
        outcome.archive.into_entries(),
        counts,
        started,
    )
}

/// Stochastic search with `problem.search_evaluations` evaluations, seeded
/// from the search stream.
pub fn run_search(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let network = build_network(cfg)?;
    let problem = problem(cfg, &network.topology)?;
    let seeds = RunSeeds::from_root(cfg.seed);
    let outcome = stochastic_search(
        &problem,
        &network,
        &cfg.eval_config(),
        cfg.problem.search_evaluations,
        seeds.search,
    )?;
    let counts = EnumerationCounts {
        total: outcome.evaluations,
        feasible: outcome.feasible,
        pareto: outcome.archive.len() as u64,
    };
    write_artifacts(
        cfg,
        "pareto-search",
        &network,
        outcome.archive.into_entries(),
        counts,
        started,
    )
}
