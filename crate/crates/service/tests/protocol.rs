//! Wire-protocol conformance against a live server. Every received frame
//! is checked against `docs/protocol.schema.json`.

mod common;

use common::{start_paused_formation, tick, Client};
use serde_json::json;
use std::collections::BTreeMap;
use std::time::Duration;

async fn finish(client: Client) {
    let (log, invalid) = client.close().await;
    assert!(!log.is_empty());
    assert!(invalid.is_empty(), "frames violating the schema: {invalid:#?}");
}

#[tokio::test(flavor = "multi_thread")]
async fn step_while_paused_advances_exactly_n_ticks() {
    let server = start_paused_formation().await;
    let mut c = Client::connect(server.local_addr()).await;
    let first = c.next_state().await;
    assert_eq!(tick(&first), 0);
    assert_eq!(first["paused"], true);

    c.send(json!({"type": "step", "n": 5})).await;
    let done = c.until(|v| v["type"] == "state" && tick(v) == 5).await;
    assert_eq!(done["paused"], true);
    // The paused republish keeps the same tick.
    for _ in 0..3 {
        assert_eq!(tick(&c.next_state().await), 5);
    }
    c.send(json!({"type": "step", "n": 7, "proto": 1})).await;
    c.until(|v| v["type"] == "state" && tick(v) == 12).await;
    for _ in 0..2 {
        assert_eq!(tick(&c.next_state().await), 12);
    }
    finish(c).await;
    assert_eq!(server.shutdown().await.unwrap().ticks, 12);
}

#[tokio::test(flavor = "multi_thread")]
async fn pause_freezes_time() {
    let server = start_paused_formation().await;
    let mut c = Client::connect(server.local_addr()).await;
    c.send(json!({"type": "set_rtf", "factor": 1.0})).await;
    c.send(json!({"type": "resume"})).await;
    c.until(|v| v["type"] == "state" && tick(v) >= 200).await;
    c.send(json!({"type": "pause"})).await;
    let paused = c.until(|v| v["type"] == "state" && v["paused"] == true).await;
    for _ in 0..4 {
        let f = c.next_state().await;
        assert_eq!(f["t"], paused["t"]);
        assert_eq!(f["tick"], paused["tick"]);
        assert_eq!(f["uavs"], paused["uavs"]);
    }
    finish(c).await;
    server.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn rejected_commands_leave_state_unchanged() {
    let server = start_paused_formation().await;
    let mut c = Client::connect(server.local_addr()).await;
    let before = c.next_state().await;

    c.send(json!({"type": "velocity", "id": 99, "v": [1, 0, 0]})).await;
    let err = c.next_error().await;
    assert!(err["msg"].as_str().unwrap().contains("99"), "{err}");
    // Followers are driven by the formation, not by clients.
    c.send(json!({"type": "hold", "id": 3, "p": [0, 0, 1]})).await;
    c.next_error().await;
    c.send(json!({"type": "set_shape", "name": "dodecahedron"})).await;
    c.next_error().await;

    c.send(json!({"type": "step", "n": 1})).await;
    let after = c.until(|v| v["type"] == "state" && tick(v) == 1).await;
    // One tick of hover from rest: nobody has moved measurably.
    for (a, b) in before["uavs"].as_array().unwrap().iter().zip(after["uavs"].as_array().unwrap()) {
        for i in 0..3 {
            let d = a["p"][i].as_f64().unwrap() - b["p"][i].as_f64().unwrap();
            assert!(d.abs() < 1e-6, "{a} -> {b}");
        }
    }
    assert_eq!(after["formation"]["shape"], before["formation"]["shape"]);
    finish(c).await;
    let report = server.shutdown().await.unwrap();
    assert_eq!(report.ticks, 1);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_input_yields_error_frames() {
    let server = start_paused_formation().await;
    let mut c = Client::connect(server.local_addr()).await;
    for bad in [
        "not json",
        "[1,2,3]",
        r#"{"type":"warp"}"#,
        r#"{"type":"step"}"#,
        r#"{"type":"pause","proto":2}"#,
        r#"{"type":"velocity","id":0,"v":[1,0]}"#,
        r#"{"type":"set_rtf","factor":-1}"#,
    ] {
        c.send_raw(bad).await;
        let e = c.next_error().await;
        assert_eq!(e["proto"], 1, "{bad}");
    }
    finish(c).await;
    assert_eq!(server.shutdown().await.unwrap().ticks, 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn velocity_setpoint_moves_the_leader() {
    let server = start_paused_formation().await;
    let mut c = Client::connect(server.local_addr()).await;
    c.send(json!({"type": "velocity", "id": 0, "v": [1.0, 0.0, 0.0], "yaw_rate": 0.0})).await;
    c.send(json!({"type": "step", "n": 2000})).await;
    let f = c.until(|v| v["type"] == "state" && tick(v) == 2000).await;
    let leader = &f["uavs"][0];
    assert_eq!(leader["role"], "leader");
    let vx = leader["v"][0].as_f64().unwrap();
    assert!((vx - 1.0).abs() < 0.1, "leader vx {vx}");
    assert!(leader["p"][0].as_f64().unwrap() > 1.0);
    finish(c).await;
    server.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn set_shape_switches_the_formation() {
    let server = start_paused_formation().await;
    let mut c = Client::connect(server.local_addr()).await;
    let first = c.next_state().await;
    assert_eq!(first["formation"]["shape"], "cube");
    assert_eq!(first["formation"]["targets"].as_array().unwrap().len(), 8);

    c.send(json!({"type": "set_shape", "name": "pyramid"})).await;
    c.send(json!({"type": "step", "n": 1})).await;
    let f = c.until(|v| v["type"] == "state" && tick(v) == 1).await;
    assert_eq!(f["formation"]["shape"], "pyramid");
    assert_ne!(f["formation"]["targets"], first["formation"]["targets"]);
    finish(c).await;
    server.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn clients_receive_identical_frames() {
    let server = start_paused_formation().await;
    let mut a = Client::connect(server.local_addr()).await;
    let mut b = Client::connect(server.local_addr()).await;
    a.next_state().await;
    b.next_state().await;

    a.send(json!({"type": "step", "n": 200})).await;
    for c in [&mut a, &mut b] {
        c.until(|v| v["type"] == "state" && tick(v) == 200).await;
    }
    let by_tick = |log: &[String]| -> BTreeMap<u64, String> {
        log.iter()
            .filter_map(|t| {
                let v: serde_json::Value = serde_json::from_str(t).unwrap();
                (v["type"] == "state" && tick(&v) > 0).then(|| (tick(&v), t.clone()))
            })
            .collect()
    };
    let (fa, fb) = (by_tick(&a.log), by_tick(&b.log));
    // 25 Hz telemetry at 1 kHz physics: ticks 40, 80, ... 200.
    assert_eq!(fa.keys().copied().collect::<Vec<_>>(), vec![40, 80, 120, 160, 200]);
    assert_eq!(fa, fb);
    finish(a).await;
    finish(b).await;
    server.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn realtime_factor_paces_the_clock() {
    let server = start_paused_formation().await;
    let mut c = Client::connect(server.local_addr()).await;
    c.send(json!({"type": "set_rtf", "factor": 2.0})).await;
    c.send(json!({"type": "resume"})).await;
    let start = c.until(|v| v["type"] == "state" && v["paused"] == false).await;
    let wall = std::time::Instant::now();
    tokio::time::sleep(Duration::from_millis(500)).await;
    let end = c.next_state().await;
    let elapsed = wall.elapsed().as_secs_f64();
    let sim = end["t"].as_f64().unwrap() - start["t"].as_f64().unwrap();
    // Frames buffered during the sleep are older than `elapsed`, so only
    // the upper bound is tight.
    assert!(sim <= 2.0 * elapsed + 0.1, "sim {sim} s in {elapsed} s wall");

    c.send(json!({"type": "pause"})).await;
    let p = c.until(|v| v["type"] == "state" && v["paused"] == true).await;
    let ticks = tick(&p);
    // Two sim-seconds per wall-second over roughly half a second.
    assert!((500..=2000).contains(&ticks), "{ticks} ticks");
    finish(c).await;
    server.shutdown().await.unwrap();
}
