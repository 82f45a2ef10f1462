mod common;

use pareto_route::phy::PhyParams;
use pareto_route::topology::{
    generate_topology, load_topology, node_count, pathloss, save_topology, PathlossTable,
    TopologyError,
};
use proptest::prelude::*;

#[test]
fn nodes_stay_inside_disk_and_endpoints_inside_core() {
    for seed in 0..100 {
        let topo = generate_topology(0.004, 80.0, 50.0, 90.0, seed).unwrap();
        assert!(topo.nodes.iter().all(|p| p[0].hypot(p[1]) <= 80.0 + 1e-9));
        for k in [topo.source, topo.destination] {
            let p = topo.nodes[k];
            assert!(p[0].hypot(p[1]) <= 50.0);
        }
        assert!((topo.distance(topo.source, topo.destination) - 90.0).abs() < 1e-12);
    }
}

#[test]
fn node_count_tracks_density() {
    let mut rng = common::rng(3);
    for _ in 0..50 {
        let density = common::uniform(&mut rng, 0.001, 0.01);
        let radius = common::uniform(&mut rng, 30.0, 150.0);
        let expected = (density * std::f64::consts::PI * radius * radius).round() as usize;
        assert_eq!(node_count(density, radius), expected);
        if expected >= 2 {
            let topo = generate_topology(density, radius, radius, radius, 1).unwrap();
            assert_eq!(topo.len(), expected);
        }
    }
}

#[test]
fn generation_is_deterministic_and_seed_sensitive() {
    let a = generate_topology(0.004, 63.0, 60.0, 120.0, 9).unwrap();
    let b = generate_topology(0.004, 63.0, 60.0, 120.0, 9).unwrap();
    let c = generate_topology(0.004, 63.0, 60.0, 120.0, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.nodes, c.nodes);
}

#[test]
fn save_load_roundtrip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let topo = common::small_topology(30, 4);
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    save_topology(&topo, &first).unwrap();
    let loaded = load_topology(&first).unwrap();
    assert_eq!(loaded, topo);
    save_topology(&loaded, &second).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn truncated_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    save_topology(&common::small_topology(10, 1), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    let err = load_topology(&path).unwrap_err();
    assert!(matches!(err, TopologyError::Parse { .. }), "{err}");
    assert!(err.to_string().contains("t.json"));
}

#[test]
fn pathloss_table_is_symmetric() {
    let topo = common::small_topology(25, 2);
    let table = PathlossTable::new(&topo, &PhyParams::default()).unwrap();
    for i in 0..topo.len() {
        for j in 0..topo.len() {
            if i != j {
                assert_eq!(table.get(i, j), table.get(j, i));
                assert!(table.get(i, j) > 0.0 && table.get(i, j) <= 1.0);
            }
        }
    }
}

#[test]
fn co_located_nodes_are_rejected() {
    let topo = common::explicit_topology(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 0.0]]);
    assert!(matches!(
        PathlossTable::new(&topo, &PhyParams::default()),
        Err(TopologyError::CoLocated(1, 2))
    ));
}

proptest! {
    #[test]
    fn pathloss_decreases_with_distance(d in 1.0f64..1e4, k in 1.0001f64..10.0) {
        let params = PhyParams::default();
        prop_assert!(pathloss(d * k, &params).unwrap() < pathloss(d, &params).unwrap());
    }

    #[test]
    fn pathloss_follows_the_exponent(d in 1.0f64..1e3) {
        let params = PhyParams::default();
        let ratio = pathloss(d, &params).unwrap() / pathloss(2.0 * d, &params).unwrap();
        prop_assert!((ratio - 8.0).abs() < 1e-9);
    }
}
