//! End-to-end runs of the `swarmsim` binary.

use serde_json::Value;
use std::path::Path;
use std::process::Command;
use swarmsim::sim::{read_transcript, SimConfig};

fn swarmsim(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_swarmsim")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "swarmsim {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn worldgen_is_seeded_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for f in [&a, &b] {
        swarmsim(&["worldgen", "--landmarks", "50", "--box", "-5,-5,0,5,5,3", "--seed", "9", "--out", path(f)]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let stdout = swarmsim(&["worldgen", "--landmarks", "50", "--box", "-5,-5,0,5,5,3", "--seed", "9"]);
    assert_eq!(stdout, text);

    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let mut n = 0;
    for r in rows.records() {
        let r = r.unwrap();
        let xyz: Vec<f64> = (1..4).map(|i| r[i].parse().unwrap()).collect();
        assert!(xyz[0].abs() <= 5.0 && xyz[1].abs() <= 5.0 && (0.0..=3.0).contains(&xyz[2]));
        n += 1;
    }
    assert_eq!(n, 50);
}

#[test]
fn eval_reports_ape_and_rpe() {
    let dir = tempfile::tempdir().unwrap();
    let (r, e) = (dir.path().join("ref.tum"), dir.path().join("est.tum"));
    let mut rt = String::new();
    let mut et = String::new();
    for i in 0..200 {
        let t = i as f64 * 0.05;
        let (y, z) = (t.sin(), 1.0 + 0.1 * t);
        rt += &format!("{t:.3} {t} {y} {z} 0 0 0 1\n");
        et += &format!("{t:.3} {t} {} {z} 0 0 0 1\n", y + 0.1);
    }
    std::fs::write(&r, rt).unwrap();
    std::fs::write(&e, et).unwrap();

    let ape: Value = serde_json::from_str(&swarmsim(&["eval", "--mode", "ape", "--ref", path(&r), "--est", path(&e)])).unwrap();
    assert_eq!(ape["n_associated"], 200);
    assert!((ape["translation"]["rmse"].as_f64().unwrap() - 0.1).abs() < 1e-9, "{ape}");

    let out = dir.path().join("report.json");
    let aligned = swarmsim(&["eval", "--mode", "ape", "--align", "se3", "--ref", path(&r), "--est", path(&e), "--out", path(&out)]);
    let aligned: Value = serde_json::from_str(&aligned).unwrap();
    assert!(aligned["translation"]["rmse"].as_f64().unwrap() < 1e-9, "{aligned}");
    assert_eq!(serde_json::from_str::<Value>(&std::fs::read_to_string(out).unwrap()).unwrap(), aligned);

    // A constant offset cancels in relative errors.
    let rpe: Value = serde_json::from_str(&swarmsim(&["eval", "--mode", "rpe", "--delta", "1", "--ref", path(&r), "--est", path(&e)])).unwrap();
    assert!(rpe["translation"]["max"].as_f64().unwrap() < 1e-9, "{rpe}");
}

#[test]
fn eval_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.tum");
    std::fs::write(&f, "0 0 0 0 0 0 0 1\n0 1 0 0 0 0 0 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_swarmsim"))
        .args(["eval", "--mode", "ape", "--ref", path(&f), "--est", path(&f)])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn fast_formation_sequence_settles() {
    let out: Value = serde_json::from_str(&swarmsim(&["formation", "--sim", "fast"])).unwrap();
    assert_eq!(out["sim"], "fast");
    let switches = out["switches"].as_array().unwrap();
    let shapes: Vec<&str> = switches.iter().map(|s| s["shape"].as_str().unwrap()).collect();
    assert_eq!(shapes, ["cube", "pyramid", "triangle"]);
    for s in switches {
        assert!(s["max_error_after_settle"].as_f64().unwrap() < 0.1, "{s}");
    }
}

#[test]
fn run_logs_and_replays_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("swarm.json");
    std::fs::write(&cfg_path, SimConfig::formation_scenario(&["cube", "pyramid"], Some(1.0), 5).to_json()).unwrap();

    let script = dir.path().join("script.jsonl");
    std::fs::write(
        &script,
        concat!(
            r#"{"tick":100,"cmd":{"type":"velocity","id":0,"v":[0.5,0,0]}}"#,
            "\n",
            r#"{"tick":1200,"cmd":{"type":"set_shape","name":"cube"}}"#,
            "\n",
        ),
    )
    .unwrap();

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let report: Value = serde_json::from_str(&swarmsim(&[
        "run", "--config", path(&cfg_path), "--steps", "2000", "--log-dir", path(&a), "--replay", path(&script),
    ]))
    .unwrap();
    assert_eq!(report["ticks"], 2000);
    assert_eq!(report["vehicles"].as_array().unwrap().len(), 9);

    let transcript = read_transcript(&std::fs::read_to_string(a.join("commands.jsonl")).unwrap()).unwrap();
    assert_eq!(transcript.len(), 2);
    assert_eq!(transcript[0].tick, 100);

    // Replaying the recorded transcript reproduces every log byte for byte.
    swarmsim(&[
        "run",
        "--config",
        path(&cfg_path),
        "--steps",
        "2000",
        "--log-dir",
        path(&b),
        "--replay",
        path(&a.join("commands.jsonl")),
    ]);
    for rel in ["commands.jsonl", "formation.csv", "uav0/groundtruth.tum", "uav4/groundtruth.tum", "uav0/accel.csv", "uav7/gps_pos.csv"] {
        let (fa, fb) = (a.join(rel), b.join(rel));
        assert_eq!(std::fs::read(&fa).unwrap(), std::fs::read(&fb).unwrap(), "{rel} differs");
    }
    let truth = std::fs::read_to_string(a.join("uav0/groundtruth.tum")).unwrap();
    let last: Vec<f64> = truth.lines().last().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
    assert!(last[1] > 0.3, "leader did not move: {last:?}");
}

#[test]
fn run_requires_steps_when_headless() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("hover.json");
    std::fs::write(&cfg_path, SimConfig::hover(1.0).to_json()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_swarmsim"))
        .args(["run", "--config", path(&cfg_path)])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
