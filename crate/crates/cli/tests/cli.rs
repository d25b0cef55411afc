//! End-to-end runs of the `carnot` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn carnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot")).args(args).output().expect("binary runs")
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn decompose(config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = configs().join(config);
    let mut args = vec!["decompose", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    carnot(&args)
}

#[test]
fn identity_map_gives_one_piece() {
    let dir = tempfile::tempdir().unwrap();
    let out = decompose("heisenberg_identity.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let dec = read_json(dir.path(), "decomposition.json");
    assert_eq!(dec["summary"]["pieces"], 1);
    assert_eq!(dec["summary"]["garbage"], 0);
    let cert = read_json(dir.path(), "certification.json");
    assert_eq!(cert["all_pass"], true);
}

#[test]
fn constant_map_sends_everything_to_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let out = decompose("heisenberg_constant.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let dec = read_json(dir.path(), "decomposition.json");
    assert_eq!(dec["summary"]["pieces"], 0);
    assert_eq!(dec["summary"]["garbage"], dec["summary"]["points"]);
    let cert = read_json(dir.path(), "certification.json");
    assert_eq!(cert["garbage_content"], 0.0);
    assert_eq!(cert["header"]["constants"]["c"], 0.0);
}

#[test]
fn plane_fold_gives_certified_pieces() {
    let dir = tempfile::tempdir().unwrap();
    let out = decompose("plane_fold.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let dec = read_json(dir.path(), "decomposition.json");
    let pieces = dec["summary"]["pieces"].as_u64().unwrap();
    assert!(pieces >= 2);
    assert!(pieces as f64 <= dec["summary"]["piece_bound"].as_f64().unwrap());
    let cert = read_json(dir.path(), "certification.json");
    assert_eq!(cert["all_pass"], true);
    let audit = read_json(dir.path(), "audit.json");
    assert_eq!(audit["passed"], true);

    let csv = std::fs::read_to_string(dir.path().join("assignment.csv")).unwrap();
    let rows = csv.lines().count() - 1;
    assert_eq!(rows as u64, dec["summary"]["points"].as_u64().unwrap());
}

#[test]
fn reports_carry_hash_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(decompose("heisenberg_identity.json", dir.path(), &[]).status.code(), Some(0));
    let mut hashes = Vec::new();
    for name in ["decomposition.json", "certification.json", "audit.json", "tree.json"] {
        let h = &read_json(dir.path(), name)["header"];
        for key in ["C_Q", "b", "T", "l", "c"] {
            assert!(h["constants"][key].is_number(), "{name}: {key}");
        }
        assert_eq!(h["config"]["delta"], 0.05, "defaults are echoed");
        hashes.push(h["config_hash"].as_str().unwrap().to_string());
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(hashes[0].len(), 64);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(decompose("heisenberg_identity.json", d.path(), &["--set", "h=0.2"]).status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn negative_delta_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = decompose("heisenberg_identity.json", dir.path(), &["--delta=-0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta"), "{err}");
}

#[test]
fn unknown_preset_lists_the_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = decompose("heisenberg_identity.json", dir.path(), &["--domain", "hyperbolic"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["heisenberg", "engel", "abelian:n", "example6"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_map_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = decompose("heisenberg_identity.json", dir.path(), &["--map", "warp"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("map") && err.contains("fold"), "{err}");
}

#[test]
fn verify_group_reads_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("group.json");
    std::fs::write(&spec, r#"{"step": 2, "layer_dims": [2, 1], "brackets": [[0, 1, [0, 0, "1/2"]]], "field": "rational"}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = carnot(&["verify-group", "--group", spec.to_str().unwrap(), "--samples", "30", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = read_json(&out_dir, "group.json");
    assert_eq!(rep["associativity_failures"], 0);
    assert_eq!(rep["algebra"]["layer_dims"], serde_json::json!([2, 1]));
}

#[test]
fn verify_group_flags_a_broken_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("group.json");
    // [e0, e1] lands in the first layer: not graded
    std::fs::write(&spec, r#"{"step": 2, "layer_dims": [2, 1], "brackets": [[0, 1, [1, 0, 0]]]}"#).unwrap();
    let out = carnot(&["verify-group", "--group", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn discreteness_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = carnot(&["discreteness", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = read_json(dir.path(), "discreteness.json");
    assert_eq!(rep["completion"]["consistent"], true);
    assert_eq!(rep["obstruction"]["fail_at_t6"], 1000);
    assert_eq!(rep["density"]["q"], "70");

    let out = carnot(&["discreteness", "--t", "1/2,1/3,2,sqrt2", "--draws", "10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn net_cover_on_collapse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("heisenberg_collapse.json");
    let out = carnot(&["net-cover", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = read_json(dir.path(), "cover.json");
    assert!(rep["slope"].as_f64().unwrap() <= 3.3);
    assert!(rep["covers"].as_array().unwrap().iter().all(|c| c["covers_all"] == true && !c["collapse_witness"].is_null()));
}

#[test]
fn alpha_stats_on_fold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("heisenberg_fold.json");
    let out = carnot(&["alpha-stats", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = read_json(dir.path(), "alpha_stats.json");
    assert!(rep["carleson"]["total"].as_f64().unwrap().is_finite());
    assert!(dir.path().join("alpha.csv").exists());
}
