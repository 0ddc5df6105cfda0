//! End-to-end tests of the `gridres` binary: exit-code contracts, artifact
//! shapes, and determinism.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn gridres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridres"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn hash_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, base, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn synth_same_seed_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = gridres(&[
            "synth",
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "31",
            "--snapshots",
            "5",
            "--fmin",
            "5",
            "--step",
            "5",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(hash_tree(&a.join("synth")), hash_tree(&b.join("synth")));
}

#[test]
fn fit_writes_models_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let out = gridres(&[
        "synth",
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "3",
        "--snapshots",
        "3",
        "--fmin",
        "5",
        "--step",
        "5",
    ]);
    assert!(out.status.success());
    let out = gridres(&["fit", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..3 {
        assert!(out_dir.join(format!("models/snap_0{i}.json")).is_file());
    }
    let summary = std::fs::read_to_string(out_dir.join("fit_summary.csv")).unwrap();
    assert!(summary.starts_with("snapshot_id,order,rms_rel_error"));
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn fit_partial_failure_keeps_batch_alive() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // one healthy sweep, one too short for the requested order
    let healthy: String = std::iter::once("freq_hz,r_ohm,x_ohm".to_string())
        .chain((1..=40).map(|i| {
            let f = 25.0 * i as f64;
            format!("{f},1.0,{}", 0.001 * f)
        }))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.join("good.csv"), &healthy).unwrap();
    std::fs::write(
        dir.join("short.csv"),
        "freq_hz,r_ohm,x_ohm\n50,1,0\n100,1,0\n150,1,0\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("manifest.json"),
        r#"[{"id":"good","path":"good.csv"},{"id":"short","path":"short.csv"}]"#,
    )
    .unwrap();

    let out_dir = dir.join("run");
    let out = gridres(&[
        "fit",
        "--manifest",
        dir.join("manifest.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--order",
        "4",
        "--tol",
        "1e-6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("fit_summary.csv")).unwrap();
    assert!(summary.contains("good,4,"), "{summary}");
    assert!(summary.contains("short,,,,,,,failed"), "{summary}");
    assert!(out_dir.join("models/good.json").is_file());
    assert!(!out_dir.join("models/short.json").exists());
}

#[test]
fn fit_unreadable_manifest_exits_2_naming_path() {
    let out = gridres(&["fit", "--manifest", "/no/such/manifest.json", "--out", "/tmp/unused-gridres"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/no/such/manifest.json"), "{stderr}");
}

#[test]
fn resonance_from_csv_needs_no_fit_and_draws_every_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let out = gridres(&[
        "synth",
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "8",
        "--snapshots",
        "4",
        "--fmin",
        "5",
        "--step",
        "5",
    ]);
    assert!(out.status.success());
    let out = gridres(&[
        "resonance",
        "--from-csv",
        "--out",
        out_dir.to_str().unwrap(),
        "--fmin",
        "5",
        "--fmax",
        "1000",
        "--step",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("resonances.csv")).unwrap();
    assert!(csv.starts_with("snapshot_id,kind,freq_hz"));
    let svg = std::fs::read_to_string(out_dir.join("impedance_overlay.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4, "one polyline per snapshot");
}

#[test]
fn resonance_missing_models_dir_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gridres(&["resonance", "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn comply_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("viol.csv"), "order,amp_real,amp_imag\n1,100,0\n3,7,0\n").unwrap();
    std::fs::write(dir.join("viol.json"), r#"{"f1_hz":50.0,"unit":"voltage"}"#).unwrap();
    let out = gridres(&[
        "comply",
        dir.join("viol.csv").to_str().unwrap(),
        "--out",
        dir.join("o1").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");

    std::fs::write(dir.join("clean.csv"), "order,amp_real,amp_imag\n1,100,0\n").unwrap();
    std::fs::write(dir.join("clean.json"), r#"{"f1_hz":50.0,"unit":"voltage"}"#).unwrap();
    let out = gridres(&[
        "comply",
        dir.join("clean.csv").to_str().unwrap(),
        "--out",
        dir.join("o2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = gridres(&[
        "comply",
        dir.join("clean.csv").to_str().unwrap(),
        "--limits",
        "/no/such/limits.json",
        "--out",
        dir.join("o3").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn envelope_emits_expected_header() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let out = gridres(&[
        "synth",
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "5",
        "--snapshots",
        "4",
        "--fmin",
        "5",
        "--step",
        "5",
    ]);
    assert!(out.status.success());
    let out = gridres(&["envelope", "--out", out_dir.to_str().unwrap(), "--step", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("envelope.csv")).unwrap();
    assert!(csv.starts_with("freq_hz,zmin_ohm,zmax_ohm,ratio\n"));
}

#[test]
fn report_builds_index_with_all_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let out = gridres(&[
        "report",
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "2",
        "--snapshots",
        "4",
        "--fmin",
        "5",
        "--step",
        "5",
        "--jobs",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("index.json")).unwrap())
            .unwrap();
    let stages = index["stages"].as_object().unwrap();
    for stage in ["synth", "envelope", "fit", "resonance", "drift", "branches", "magnify"] {
        assert!(stages.contains_key(stage), "missing stage {stage}");
        for artifact in stages[stage].as_array().unwrap() {
            let rel = artifact.as_str().unwrap();
            assert!(out_dir.join(rel).is_file(), "missing artifact {rel}");
        }
    }
    assert!(out_dir.join("config.json").is_file());
}
