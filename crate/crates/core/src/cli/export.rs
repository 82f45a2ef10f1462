//! Archive persistence (CSV and JSON) and plot datasets.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::objectives::ObjectiveVector;
use crate::pareto::ArchiveEntry;
use crate::solution::Solution;
use crate::topology::{NetworkTopology, NodeId};

use super::{CliError, VERSION};

pub const ARCHIVE_FORMAT: &str = "pareto-route/archive/1";

/// Relay map flag threshold on robustness.
pub const NEAR_PERFECT_ROBUSTNESS: f64 = 0.999;

const COLUMNS: [&str; 6] = ["solution_id", "relays", "rates", "f_r", "f_d", "f_e"];

/// Everything needed to rebuild the solutions of an archive export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub format: String,
    pub version: String,
    pub config_hash: String,
    pub node_count: usize,
    pub frame: usize,
    pub source: NodeId,
    pub destination: NodeId,
    pub source_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveFile {
    pub header: ArchiveHeader,
    pub entries: Vec<ArchiveEntry>,
}

impl ArchiveHeader {
    pub fn new(config_hash: &str, topology: &NetworkTopology, source_rates: &[f64]) -> Self {
        Self {
            format: ARCHIVE_FORMAT.into(),
            version: VERSION.into(),
            config_hash: config_hash.into(),
            node_count: topology.len(),
            frame: source_rates.len(),
            source: topology.source,
            destination: topology.destination,
            source_rates: source_rates.to_vec(),
        }
    }

    fn template(&self) -> Solution {
        let mut s = Solution::zeros(self.node_count, self.frame);
        s.set_row(self.source, &self.source_rates);
        s
    }
}

fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        // shortest representation that parses back to the same value
        format!("{v:?}")
    }
}

fn join(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(";")
}

/// Active nodes other than the source.
fn relays_of(s: &Solution, source: NodeId) -> Vec<NodeId> {
    s.active_nodes().into_iter().filter(|&k| k != source).collect()
}

/// Writes `# key=value` header lines, then one row per entry: relays and
/// their rates (relay-major) are `;`-separated, `+inf` delay is `inf`.
pub fn write_archive_csv(
    path: &Path,
    header: &ArchiveHeader,
    entries: &[ArchiveEntry],
) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    let meta = [
        ("format", header.format.clone()),
        ("version", header.version.clone()),
        ("config_hash", header.config_hash.clone()),
        ("node_count", header.node_count.to_string()),
        ("frame", header.frame.to_string()),
        ("source", header.source.to_string()),
        ("destination", header.destination.to_string()),
        ("source_rates", join(header.source_rates.iter().map(|&v| fmt_f64(v)))),
    ];
    for (k, v) in meta {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| CliError::artifact(path, e);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for e in entries {
        let relays = relays_of(&e.solution, header.source);
        let rates = relays
            .iter()
            .flat_map(|&k| e.solution.row(k).iter().map(|&t| fmt_f64(t)).collect::<Vec<_>>());
        w.write_record([
            e.id.to_string(),
            join(relays.iter().map(|k| k.to_string())),
            join(rates),
            fmt_f64(e.objectives.robustness),
            fmt_f64(e.objectives.delay),
            fmt_f64(e.objectives.energy),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(field: &str) -> Result<Vec<T>, String> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|s| s.parse().map_err(|_| format!("bad list element {s:?}")))
        .collect()
}

fn parse_f64(field: &str) -> Result<f64, String> {
    field.parse().map_err(|_| format!("bad number {field:?}"))
}

pub fn read_archive_csv(path: &Path) -> Result<ArchiveFile, CliError> {
    let bad = |reason: String| CliError::artifact(path, reason);
    let mut meta = BTreeMap::new();
    let reader = BufReader::new(File::open(path)?);
    for line in reader.lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix("# ") else { break };
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header line {line:?}")))?;
        meta.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        meta.get(k)
            .cloned()
            .ok_or_else(|| bad(format!("missing header field {k}")))
    };
    let number = |k: &str| -> Result<usize, CliError> {
        get(k)?.parse().map_err(|_| bad(format!("header field {k} is not an integer")))
    };
    let header = ArchiveHeader {
        format: get("format")?,
        version: get("version")?,
        config_hash: get("config_hash")?,
        node_count: number("node_count")?,
        frame: number("frame")?,
        source: number("source")?,
        destination: number("destination")?,
        source_rates: parse_list(&get("source_rates")?).map_err(bad)?,
    };
    if header.format != ARCHIVE_FORMAT {
        return Err(bad(format!("unsupported format {:?}", header.format)));
    }
    if header.source_rates.len() != header.frame
        || header.source >= header.node_count
        || header.destination >= header.node_count
    {
        return Err(bad("inconsistent header".into()));
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let columns = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if columns.iter().ne(COLUMNS) {
        return Err(bad(format!("unexpected columns {columns:?}")));
    }
    let template = header.template();
    let mut entries = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let at = |reason: String| bad(format!("row {}: {reason}", row + 1));
        let id = record[0].parse().map_err(|_| at("bad solution_id".into()))?;
        let relays: Vec<NodeId> = parse_list(&record[1]).map_err(at)?;
        let rates: Vec<f64> = parse_list(&record[2]).map_err(at)?;
        if rates.len() != relays.len() * header.frame
            || relays.iter().any(|&k| k >= header.node_count)
        {
            return Err(at("relays and rates disagree".into()));
        }
        let mut solution = template.clone();
        for (k, chunk) in relays.iter().zip(rates.chunks(header.frame.max(1))) {
            solution.set_row(*k, chunk);
        }
        entries.push(ArchiveEntry {
            id,
            solution,
            objectives: ObjectiveVector {
                robustness: parse_f64(&record[3]).map_err(at)?,
                delay: parse_f64(&record[4]).map_err(at)?,
                energy: parse_f64(&record[5]).map_err(at)?,
            },
        });
    }
    Ok(ArchiveFile { header, entries })
}

#[derive(Serialize, Deserialize)]
struct JsonRelay {
    node: NodeId,
    rates: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    solution_id: u64,
    relays: Vec<JsonRelay>,
    objectives: ObjectiveVector,
}

#[derive(Serialize, Deserialize)]
struct JsonArchive {
    header: ArchiveHeader,
    entries: Vec<JsonEntry>,
}

pub fn write_archive_json(
    path: &Path,
    header: &ArchiveHeader,
    entries: &[ArchiveEntry],
) -> Result<(), CliError> {
    let doc = JsonArchive {
        header: header.clone(),
        entries: entries
            .iter()
            .map(|e| JsonEntry {
                solution_id: e.id,
                relays: relays_of(&e.solution, header.source)
                    .into_iter()
                    .map(|node| JsonRelay {
                        node,
                        rates: e.solution.row(node).to_vec(),
                    })
                    .collect(),
                objectives: e.objectives,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::artifact(path, e))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_archive_json(path: &Path) -> Result<ArchiveFile, CliError> {
    let text = fs::read_to_string(path)?;
    let doc: JsonArchive = serde_json::from_str(&text).map_err(|e| CliError::artifact(path, e))?;
    let header = doc.header;
    let template = header.template();
    let mut entries = Vec::with_capacity(doc.entries.len());
    for e in doc.entries {
        let mut solution = template.clone();
        for r in &e.relays {
            if r.node >= header.node_count || r.rates.len() != header.frame {
                return Err(CliError::artifact(path, format!("entry {} is malformed", e.solution_id)));
            }
            solution.set_row(r.node, &r.rates);
        }
        entries.push(ArchiveEntry {
            id: e.solution_id,
            solution,
            objectives: e.objectives,
        });
    }
    Ok(ArchiveFile { header, entries })
}

/// Writes `robustness_delay.csv`, `robustness_energy.csv` and
/// `delay_energy.csv` into `dir`, one row per entry. Rows with infinite
/// delay carry `delay_infinite = 1`.
pub fn export_projections(entries: &[ArchiveEntry], dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if entries.is_empty() {
        return Err(CliError::artifact(dir, "cannot project an empty archive"));
    }
    type Pick = fn(&ObjectiveVector) -> f64;
    let planes: [(&str, [&str; 2], [Pick; 2]); 3] = [
        ("robustness_delay.csv", ["f_r", "f_d"], [|o| o.robustness, |o| o.delay]),
        ("robustness_energy.csv", ["f_r", "f_e"], [|o| o.robustness, |o| o.energy]),
        ("delay_energy.csv", ["f_d", "f_e"], [|o| o.delay, |o| o.energy]),
    ];
    let mut written = Vec::new();
    for (name, cols, picks) in planes {
        let path = dir.join(name);
        let csv_err = |e: csv::Error| CliError::artifact(&path, e);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(csv_err)?;
        w.write_record(["solution_id", cols[0], cols[1], "delay_infinite"])
            .map_err(csv_err)?;
        for e in entries {
            let o = &e.objectives;
            w.write_record([
                e.id.to_string(),
                fmt_f64(picks[0](o)),
                fmt_f64(picks[1](o)),
                u8::from(o.delay.is_infinite()).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayMapRow {
    pub node: NodeId,
    pub x_m: f64,
    pub y_m: f64,
    /// Archive entries in which the node forwards.
    pub entries: usize,
    /// Some entry with this relay reaches `f_R > 0.999`.
    pub near_perfect: bool,
}

/// One row per distinct relay in the archive, by node id.
pub fn relay_map(entries: &[ArchiveEntry], topology: &NetworkTopology) -> Vec<RelayMapRow> {
    let mut rows: BTreeMap<NodeId, RelayMapRow> = BTreeMap::new();
    for e in entries {
        for k in relays_of(&e.solution, topology.source) {
            let [x_m, y_m] = topology.nodes[k];
            let row = rows.entry(k).or_insert(RelayMapRow {
                node: k,
                x_m,
                y_m,
                entries: 0,
                near_perfect: false,
            });
            row.entries += 1;
            row.near_perfect |= e.objectives.robustness > NEAR_PERFECT_ROBUSTNESS;
        }
    }
    rows.into_values().collect()
}

pub fn write_relay_map(rows: &[RelayMapRow], path: &Path) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::artifact(path, e);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(["node", "x_m", "y_m", "entries", "near_perfect"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.node.to_string(),
            fmt_f64(r.x_m),
            fmt_f64(r.y_m),
            r.entries.to_string(),
            u8::from(r.near_perfect).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
