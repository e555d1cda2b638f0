//! Starts the telemetry endpoint in-process and drives it the way a
//! teleoperation client would: step while paused, steer the leader, change
//! shape, run in real time for a moment, pause.
//!
//! cargo run -p swarmsim-service --example ws_client
//!
//! To talk to a separately started server instead, pass its address:
//! cargo run -p swarmsim-service --example ws_client -- 127.0.0.1:8765

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use std::net::SocketAddr;
use swarmsim::sim::{Session, SimConfig, Simulation};
use swarmsim_service::server::{serve, ServerOptions};
use tokio_tungstenite::tungstenite::Message;

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn send(ws: &mut Ws, v: Value) -> anyhow::Result<()> {
    println!(">> {v}");
    ws.send(Message::Text(v.to_string().into())).await?;
    Ok(())
}

/// Prints frames until one satisfies `done`.
async fn read_until(ws: &mut Ws, done: impl Fn(&Value) -> bool) -> anyhow::Result<Value> {
    while let Some(msg) = ws.next().await {
        let Message::Text(text) = msg? else { continue };
        let v: Value = serde_json::from_str(text.as_str())?;
        match v["type"].as_str() {
            Some("error") => println!("<< error: {}", v["msg"]),
            Some("state") => {
                let leader = &v["uavs"][0];
                println!(
                    "<< tick {:>6} t {:>7.3} paused {:<5} leader p [{:.2}, {:.2}, {:.2}] shape {}",
                    v["tick"],
                    v["t"].as_f64().unwrap_or(0.0),
                    v["paused"],
                    leader["p"][0].as_f64().unwrap_or(0.0),
                    leader["p"][1].as_f64().unwrap_or(0.0),
                    leader["p"][2].as_f64().unwrap_or(0.0),
                    v["formation"]["shape"]
                );
            }
            _ => println!("<< {v}"),
        }
        if done(&v) {
            return Ok(v);
        }
    }
    anyhow::bail!("connection closed")
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let (addr, server) = match std::env::args().nth(1) {
        Some(a) => (a.parse::<SocketAddr>()?, None),
        None => {
            let cfg = SimConfig::formation_scenario(&["cube", "pyramid", "triangle"], None, 0);
            let handle = serve(
                Session::new_paused(Simulation::new(cfg)?),
                ServerOptions {
                    bind: SocketAddr::from(([127, 0, 0, 1], 0)),
                    ui_dir: None,
                    max_ticks: None,
                },
            )
            .await?;
            (handle.local_addr(), Some(handle))
        }
    };
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await?;
    let is_state = |v: &Value| v["type"] == "state";
    let at_tick = |n: u64| move |v: &Value| v["type"] == "state" && v["tick"].as_u64() == Some(n);

    let first = read_until(&mut ws, is_state).await?;
    let t0 = first["tick"].as_u64().unwrap_or(0);

    send(&mut ws, json!({"type": "step", "n": 5})).await?;
    read_until(&mut ws, at_tick(t0 + 5)).await?;

    send(&mut ws, json!({"type": "velocity", "id": 99, "v": [1, 0, 0]})).await?;
    read_until(&mut ws, |v| v["type"] == "error").await?;

    send(&mut ws, json!({"type": "velocity", "id": 0, "v": [1.0, 0.5, 0.0], "yaw_rate": 0.0})).await?;
    send(&mut ws, json!({"type": "set_shape", "name": "triangle"})).await?;
    send(&mut ws, json!({"type": "step", "n": 2000})).await?;
    read_until(&mut ws, at_tick(t0 + 2005)).await?;

    send(&mut ws, json!({"type": "set_rtf", "factor": 1.0})).await?;
    send(&mut ws, json!({"type": "resume"})).await?;
    tokio::time::sleep(std::time::Duration::from_millis(300)).await;
    send(&mut ws, json!({"type": "pause"})).await?;
    read_until(&mut ws, |v| v["type"] == "state" && v["paused"] == true && v["tick"].as_u64() > Some(t0 + 2005)).await?;

    ws.close(None).await?;
    if let Some(handle) = server {
        let report = handle.shutdown().await?;
        println!("simulation stopped after {} ticks", report.ticks);
    }
    Ok(())
}
