use std::fs;
use std::path::Path;
use std::process::Command;

use pareto_route::cli::{
    export_projections, read_archive_csv, read_archive_json, relay_map, run_exhaustive,
    run_search, ExperimentConfig,
};
use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_pareto-route");

fn config(dir: &Path, max_relays: usize) -> ExperimentConfig {
    let text = format!(
        r#"{{
            "seed": 3,
            "topology": {{"generate": {{"density_per_m2": 0.004, "node_count": 20,
                                         "sd_separation_m": 60}}}},
            "alphabet": [0.0, 0.25, 0.5, 0.75, 1.0],
            "problem": {{"max_relays": {max_relays}}},
            "output_dir": {:?}
        }}"#,
        dir.display().to_string()
    );
    let cfg: ExperimentConfig = serde_json::from_str(&text).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

#[test]
fn zero_relays_gives_only_the_direct_solution() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_exhaustive(&config(dir.path(), 0)).unwrap();
    assert_eq!(summary.entries.len(), 1);
    assert_eq!(summary.entries[0].id, 0);
    assert_eq!(summary.entries[0].objectives.energy, 0.0);
    assert!(relay_map(&summary.entries, &summary.topology).is_empty());
    for name in ["topology.json", "archive.csv", "archive.json", "manifest.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn rerun_produces_identical_csv_and_roundtrips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg_b = config(b.path(), 1);
    cfg_b.jobs = 3;
    let first = run_exhaustive(&config(a.path(), 1)).unwrap();
    run_exhaustive(&cfg_b).unwrap();
    let csv = a.path().join("archive.csv");
    assert_eq!(sha(&csv), sha(&b.path().join("archive.csv")));
    assert_eq!(sha(&a.path().join("archive.json")), sha(&b.path().join("archive.json")));

    let text = fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.contains(&format!("# config_hash={}", first.manifest.config_hash)));

    let parsed = read_archive_csv(&csv).unwrap();
    assert_eq!(parsed.entries, first.entries);
    let parsed_json = read_archive_json(&a.path().join("archive.json")).unwrap();
    assert_eq!(parsed_json.entries, first.entries);
    assert_eq!(parsed.header, parsed_json.header);
}

#[test]
fn manifest_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let first = run_exhaustive(&config(a.path(), 1)).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let mut cfg: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    let b = tempfile::tempdir().unwrap();
    cfg.output_dir = b.path().to_path_buf();
    let second = run_exhaustive(&cfg).unwrap();
    assert_eq!(second.manifest.config_hash, first.manifest.config_hash);
    for name in ["topology.json", "archive.csv", "archive.json"] {
        assert_eq!(sha(&a.path().join(name)), sha(&b.path().join(name)), "{name}");
    }
}

#[test]
fn projections_have_one_row_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_search(&config(dir.path(), 2)).unwrap();
    let files = export_projections(&summary.entries, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let rows = fs::read_to_string(&f).unwrap().lines().count();
        assert_eq!(rows, summary.entries.len() + 1, "{}", f.display());
    }
    assert!(export_projections(&[], dir.path()).is_err());

    let map = relay_map(&summary.entries, &summary.topology);
    let relays: std::collections::BTreeSet<usize> = summary
        .entries
        .iter()
        .flat_map(|e| e.solution.active_nodes())
        .filter(|&k| k != summary.topology.source)
        .collect();
    assert_eq!(map.iter().map(|r| r.node).collect::<std::collections::BTreeSet<_>>(), relays);
    for row in &map {
        assert!(row.entries >= 1);
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, serde_json::to_string(&config(&dir.path().join("out"), 1)).unwrap()).unwrap();

    let status = Command::new(BIN)
        .args(["pareto-exhaustive", "--config"])
        .arg(&good)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let status = Command::new(BIN)
        .args(["export-plots", "--out"])
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("out/relay_map.csv").exists());

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"topology": {"file": "missing.json"}}"#).unwrap();
    let out = Command::new(BIN)
        .args(["gen-topology", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("topology.file"));

    let mut tight = config(&dir.path().join("tight"), 2);
    tight.problem.enumeration_budget = 10;
    let tight_path = dir.path().join("tight.json");
    fs::write(&tight_path, serde_json::to_string(&tight).unwrap()).unwrap();
    let out = Command::new(BIN)
        .args(["pareto-exhaustive", "--config"])
        .arg(&tight_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget of 10"));
}

#[test]
fn eval_subcommand_scores_a_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir.path().join("out"), 1);
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let solution = dir.path().join("s.json");
    fs::write(
        &solution,
        r#"{"node_count": 20, "frame": 2, "alphabet": [0.0, 0.25, 0.5, 0.75, 1.0],
            "rates": [[0, 0, 1.0]]}"#,
    )
    .unwrap();
    let out = Command::new(BIN)
        .args(["eval", "--config"])
        .arg(&cfg_path)
        .arg("--solution")
        .arg(&solution)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/evaluation.json")).unwrap())
            .unwrap();
    assert_eq!(report["objectives"]["energy"], 0.0);
}
