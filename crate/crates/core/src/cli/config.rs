//! Experiment configuration. Field names carry their units.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::objectives::{EvalConfig, EvalMode};
use crate::phy::{dbm_to_watts, EnumerationConfig, PhyParams};
use crate::solution::{RateAlphabet, SourcePattern, UsefulnessMode};

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root of every random stream, see [`derive_seed`].
    #[serde(default)]
    pub seed: u64,
    pub topology: TopologySource,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    /// Allowed rates; 21 levels in steps of 0.05 when absent.
    #[serde(default)]
    pub alphabet: Option<Vec<f64>>,
    #[serde(default = "default_frame")]
    pub frame: usize,
    /// Source rates per resource; all traffic in the first resource when absent.
    #[serde(default)]
    pub source_rates: Option<Vec<f64>>,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_frame() -> usize {
    2
}

fn default_jobs() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySource {
    Generate(GenerateTopology),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateTopology {
    pub density_per_m2: f64,
    /// Either this or `node_count`.
    #[serde(default)]
    pub disk_radius_m: Option<f64>,
    /// Derives the disk radius as `sqrt(N / (density * pi))`.
    #[serde(default)]
    pub node_count: Option<usize>,
    /// Defaults to the disk radius.
    #[serde(default)]
    pub core_radius_m: Option<f64>,
    pub sd_separation_m: f64,
}

impl GenerateTopology {
    pub fn disk_radius(&self) -> Result<f64, CliError> {
        match (self.disk_radius_m, self.node_count) {
            (Some(r), None) => Ok(r),
            (None, Some(n)) => Ok((n as f64 / (self.density_per_m2 * PI)).sqrt()),
            _ => Err(CliError::field(
                "topology.generate",
                "give exactly one of disk_radius_m and node_count",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_mw: f64,
    pub noise_density_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub pathloss_exponent: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub packet_bits: u32,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_mw: 151.0,
            noise_density_dbm_per_hz: -154.0,
            bandwidth_hz: 1e6,
            carrier_hz: 2.4e9,
            pathloss_exponent: 3.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            packet_bits: 1024,
        }
    }
}

impl RadioConfig {
    pub fn params(&self) -> PhyParams {
        PhyParams {
            tx_power: self.tx_power_mw * 1e-3,
            noise_density: dbm_to_watts(self.noise_density_dbm_per_hz),
            bandwidth: self.bandwidth_hz,
            carrier: self.carrier_hz,
            pathloss_exponent: self.pathloss_exponent,
            tx_gain: self.tx_gain,
            rx_gain: self.rx_gain,
            packet_bits: self.packet_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub enumeration_cap: usize,
    pub truncation_epsilon: Option<f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        let d = EnumerationConfig::default();
        Self {
            enumeration_cap: d.cap,
            truncation_epsilon: d.truncation_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub max_hops: usize,
    pub path_threshold: f64,
    /// Packet airtime energy `P * N_b / B` when absent.
    pub tx_energy_j: Option<f64>,
    pub rx_energy_j: f64,
    pub mode: EvalMode,
    pub usefulness: UsefulnessMode,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            max_hops: 2,
            path_threshold: 1e-10,
            tx_energy_j: None,
            rx_energy_j: 0.0,
            mode: EvalMode::PrunedPathWalk,
            usefulness: UsefulnessMode::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub max_relays: usize,
    /// Largest space the exhaustive enumerator accepts.
    pub enumeration_budget: u64,
    /// Evaluations spent by the stochastic search.
    pub search_evaluations: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            max_relays: 1,
            enumeration_budget: 10_000_000,
            search_evaluations: 10_000,
        }
    }
}

/// Purpose tags for [`derive_seed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Topology = 1,
    Search = 2,
    MonteCarlo = 3,
}

/// `splitmix64(root + stream * 0x9E3779B97F4A7C15)`: independent,
/// reproducible seeds per purpose regardless of worker count.
pub fn derive_seed(root: u64, stream: SeedStream) -> u64 {
    let mut z = root.wrapping_add((stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // topology files are relative to the config
        if let TopologySource::File(p) = &mut cfg.topology {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match &self.topology {
            TopologySource::Generate(g) => {
                positive("topology.generate.density_per_m2", g.density_per_m2)?;
                let radius = g.disk_radius()?;
                positive("topology.generate.disk_radius_m", radius)?;
                if let Some(rc) = g.core_radius_m {
                    positive("topology.generate.core_radius_m", rc)?;
                    if rc > radius {
                        return Err(CliError::field(
                            "topology.generate.core_radius_m",
                            format!("{rc} exceeds the disk radius {radius}"),
                        ));
                    }
                }
                let rc = g.core_radius_m.unwrap_or(radius);
                positive("topology.generate.sd_separation_m", g.sd_separation_m)?;
                if g.sd_separation_m > 2.0 * rc {
                    return Err(CliError::field(
                        "topology.generate.sd_separation_m",
                        format!("{} exceeds twice the core radius ({rc})", g.sd_separation_m),
                    ));
                }
            }
            TopologySource::File(p) => {
                if !p.exists() {
                    return Err(CliError::field(
                        "topology.file",
                        format!("{} does not exist", p.display()),
                    ));
                }
            }
        }
        let r = &self.radio;
        for (name, v) in [
            ("radio.tx_power_mw", r.tx_power_mw),
            ("radio.bandwidth_hz", r.bandwidth_hz),
            ("radio.carrier_hz", r.carrier_hz),
            ("radio.pathloss_exponent", r.pathloss_exponent),
            ("radio.tx_gain", r.tx_gain),
            ("radio.rx_gain", r.rx_gain),
        ] {
            positive(name, v)?;
        }
        if !r.noise_density_dbm_per_hz.is_finite() {
            return Err(CliError::field("radio.noise_density_dbm_per_hz", "must be finite"));
        }
        if r.packet_bits == 0 {
            return Err(CliError::field("radio.packet_bits", "must be at least 1"));
        }
        if let Some(eps) = self.link.truncation_epsilon {
            positive("link.truncation_epsilon", eps)?;
        }
        let e = &self.evaluation;
        if e.max_hops == 0 {
            return Err(CliError::field("evaluation.max_hops", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&e.path_threshold) {
            return Err(CliError::field("evaluation.path_threshold", "must lie in [0, 1)"));
        }
        if let Some(et) = e.tx_energy_j {
            if !(et >= 0.0) {
                return Err(CliError::field("evaluation.tx_energy_j", "must be non-negative"));
            }
        }
        if !(e.rx_energy_j >= 0.0) {
            return Err(CliError::field("evaluation.rx_energy_j", "must be non-negative"));
        }
        if self.frame == 0 {
            return Err(CliError::field("frame", "must be at least 1"));
        }
        self.alphabet()?;
        let pattern = self.source_pattern();
        if pattern.0.len() != self.frame {
            return Err(CliError::field(
                "source_rates",
                format!("has {} entries, frame is {}", pattern.0.len(), self.frame),
            ));
        }
        if pattern.0.iter().any(|t| !(0.0..=1.0).contains(t)) || pattern.0.iter().all(|&t| t == 0.0) {
            return Err(CliError::field("source_rates", "need rates in [0, 1], not all zero"));
        }
        if self.jobs == 0 {
            return Err(CliError::field("jobs", "must be at least 1"));
        }
        Ok(())
    }

    pub fn alphabet(&self) -> Result<RateAlphabet, CliError> {
        match &self.alphabet {
            None => Ok(RateAlphabet::default()),
            Some(v) => RateAlphabet::new(v.clone()).map_err(|e| CliError::field("alphabet", e.to_string())),
        }
    }

    pub fn source_pattern(&self) -> SourcePattern {
        match &self.source_rates {
            Some(r) => SourcePattern(r.clone()),
            None => SourcePattern::first_slot(self.frame.max(1)),
        }
    }

    pub fn phy_params(&self) -> PhyParams {
        self.radio.params()
    }

    pub fn eval_config(&self) -> EvalConfig {
        let params = self.phy_params();
        let e = &self.evaluation;
        EvalConfig {
            max_hops: e.max_hops,
            path_threshold: e.path_threshold,
            tx_energy: e.tx_energy_j.unwrap_or_else(|| params.packet_energy()),
            rx_energy: e.rx_energy_j,
            mode: e.mode,
            usefulness: e.usefulness,
            enumeration: EnumerationConfig {
                cap: self.link.enumeration_cap,
                truncation_epsilon: self.link.truncation_epsilon,
            },
        }
    }

    /// SHA-256 over every field that affects results (not `jobs`, not the
    /// output directory).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.jobs = 1;
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(field, format!("must be positive and finite, got {v}")))
    }
}
