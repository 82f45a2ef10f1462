//! Random disk topologies and the pairwise pathloss table.
//!
//! Node 0 is always the source and node 1 the destination; the remaining
//! `N - 2` nodes are drawn uniformly on the disk.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::PhyParams;

pub type NodeId = usize;

/// Version tag written into every topology file.
pub const TOPOLOGY_FORMAT: &str = "pareto-route/topology/1";

/// Speed of light in m/s.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reference distance of the power-law pathloss model, in meters.
const REFERENCE_DISTANCE: f64 = 1.0;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("nodes {0} and {1} are co-located")]
    CoLocated(NodeId, NodeId),
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("topology file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("topology file {path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub format: String,
    pub seed: u64,
    pub density: f64,
    pub disk_radius: f64,
    pub core_radius: f64,
    pub source: NodeId,
    pub destination: NodeId,
    pub nodes: Vec<[f64; 2]>,
}

/// `round(density * pi * radius^2)`.
pub fn node_count(density: f64, disk_radius: f64) -> usize {
    (density * PI * disk_radius * disk_radius).round() as usize
}

/// Generate a topology with `N = round(density * pi * disk_radius^2)` nodes.
///
/// Source and destination sit on the x axis at `(-sep/2, 0)` and `(sep/2, 0)`;
/// every other node is uniform i.i.d. on the disk. The RNG is ChaCha8 seeded
/// with `seed`, so the output is identical across platforms.
pub fn generate_topology(
    density: f64,
    disk_radius: f64,
    core_radius: f64,
    sd_separation: f64,
    seed: u64,
) -> Result<NetworkTopology, TopologyError> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(TopologyError::Geometry(format!(
            "density must be positive, got {density}"
        )));
    }
    if !(core_radius > 0.0 && core_radius <= disk_radius && disk_radius.is_finite()) {
        return Err(TopologyError::Geometry(format!(
            "need 0 < core radius ({core_radius}) <= disk radius ({disk_radius})"
        )));
    }
    if !(sd_separation > 0.0) || sd_separation > 2.0 * core_radius {
        return Err(TopologyError::Geometry(format!(
            "source/destination separation {sd_separation} m must lie in (0, 2 * core radius = {} m]",
            2.0 * core_radius
        )));
    }
    let n = node_count(density, disk_radius);
    if n < 2 {
        return Err(TopologyError::Geometry(format!(
            "density {density} on radius {disk_radius} yields {n} nodes, need at least 2"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = sd_separation / 2.0;
    let mut nodes = Vec::with_capacity(n);
    nodes.push([-half, 0.0]);
    nodes.push([half, 0.0]);
    for _ in 2..n {
        let r = disk_radius * rng.gen::<f64>().sqrt();
        let theta = 2.0 * PI * rng.gen::<f64>();
        nodes.push([r * theta.cos(), r * theta.sin()]);
    }

    Ok(NetworkTopology {
        format: TOPOLOGY_FORMAT.to_string(),
        seed,
        density,
        disk_radius,
        core_radius,
        source: 0,
        destination: 1,
        nodes,
    })
}

impl NetworkTopology {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn distance(&self, i: NodeId, j: NodeId) -> f64 {
        let [xi, yi] = self.nodes[i];
        let [xj, yj] = self.nodes[j];
        (xi - xj).hypot(yi - yj)
    }

    /// Every node other than source and destination, in index order.
    pub fn relay_candidates(&self) -> Vec<NodeId> {
        (0..self.len())
            .filter(|&k| k != self.source && k != self.destination)
            .collect()
    }

    fn check(&self) -> Result<(), String> {
        if self.format != TOPOLOGY_FORMAT {
            return Err(format!(
                "unsupported format {:?}, expected {TOPOLOGY_FORMAT:?}",
                self.format
            ));
        }
        let n = self.nodes.len();
        if self.source >= n || self.destination >= n {
            return Err(format!(
                "source {} / destination {} out of range for {n} nodes",
                self.source, self.destination
            ));
        }
        if self.source == self.destination {
            return Err("source and destination must differ".into());
        }
        if let Some(k) = self
            .nodes
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(format!("node {k} has a non-finite coordinate"));
        }
        Ok(())
    }
}

pub fn save_topology(topology: &NetworkTopology, path: impl AsRef<Path>) -> Result<(), TopologyError> {
    let mut text = serde_json::to_string_pretty(topology).expect("topology serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<NetworkTopology, TopologyError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let topology: NetworkTopology =
        serde_json::from_str(&text).map_err(|source| TopologyError::Parse {
            path: display.clone(),
            source,
        })?;
    topology
        .check()
        .map_err(|reason| TopologyError::Invalid { path: display, reason })?;
    Ok(topology)
}

/// `G_T * G_R * (lambda / (4 pi d0))^2 * (d0 / d)^alpha`, clamped to 1.
pub fn pathloss(distance: f64, params: &PhyParams) -> Result<f64, TopologyError> {
    if !(distance > 0.0) {
        return Err(TopologyError::NonPositiveDistance(distance));
    }
    let wavelength = SPEED_OF_LIGHT / params.carrier;
    let reference = params.tx_gain
        * params.rx_gain
        * (wavelength / (4.0 * PI * REFERENCE_DISTANCE)).powi(2);
    let a = reference * (REFERENCE_DISTANCE / distance).powf(params.pathloss_exponent);
    Ok(a.min(1.0))
}

/// Symmetric table of linear attenuation factors `a_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathlossTable {
    n: usize,
    a: Vec<f64>,
}

impl PathlossTable {
    pub fn new(topology: &NetworkTopology, params: &PhyParams) -> Result<Self, TopologyError> {
        let n = topology.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = topology.distance(i, j);
                if d == 0.0 {
                    return Err(TopologyError::CoLocated(i, j));
                }
                let v = pathloss(d, params)?;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        Ok(Self { n, a })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.a[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_density_gives_333_nodes() {
        assert_eq!(node_count(0.004, 162.8), 333);
    }

    #[test]
    fn source_destination_separation() {
        let t = generate_topology(0.004, 162.8, 110.0, 215.0, 7).unwrap();
        assert_eq!(t.len(), 333);
        assert!((t.distance(t.source, t.destination) - 215.0).abs() < 0.01);
    }

    #[test]
    fn rejects_separation_beyond_core() {
        let err = generate_topology(0.004, 162.8, 50.0, 215.0, 7).unwrap_err();
        assert!(matches!(err, TopologyError::Geometry(_)));
        assert!(err.to_string().contains("separation"));
    }

    #[test]
    fn same_seed_same_nodes() {
        let a = generate_topology(0.004, 100.0, 50.0, 80.0, 99).unwrap();
        let b = generate_topology(0.004, 100.0, 50.0, 80.0, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(0.004, 100.0, 50.0, 80.0, 100).unwrap();
        assert_ne!(a.nodes, c.nodes);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn pathloss_at_one_meter() {
        // (c / 2.4 GHz / 4 pi)^2, evaluated at 40 digits
        let a = pathloss(1.0, &PhyParams::default()).unwrap();
        assert!((a - 9.880961210318490e-5).abs() < 1e-17);
        assert!((10.0 * a.log10() + 40.0).abs() < 0.1);
    }

    #[test]
    fn pathloss_power_law() {
        let p = PhyParams::default();
        let near = pathloss(40.0, &p).unwrap();
        let far = pathloss(80.0, &p).unwrap();
        assert!((near / far - 8.0).abs() < 1e-12);
    }

    #[test]
    fn pathloss_rejects_zero_distance() {
        assert!(matches!(
            pathloss(0.0, &PhyParams::default()),
            Err(TopologyError::NonPositiveDistance(_))
        ));
    }

    #[test]
    fn pathloss_clamps_to_one() {
        assert_eq!(pathloss(1e-3, &PhyParams::default()).unwrap(), 1.0);
    }
}
