#![allow(dead_code)]

use futures_util::{SinkExt, StreamExt};
use serde_json::Value;
use std::net::SocketAddr;
use std::time::Duration;
use swarmsim::sim::{Session, SimConfig, Simulation};
use swarmsim_service::server::{serve, ServerHandle, ServerOptions};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub fn schema() -> jsonschema::Validator {
    let text = include_str!("../../../../docs/protocol.schema.json");
    let schema: Value = serde_json::from_str(text).expect("schema is JSON");
    jsonschema::validator_for(&schema).expect("schema compiles")
}

/// Nine-vehicle formation world, paused at tick 0.
pub async fn start_paused_formation() -> ServerHandle {
    let cfg = SimConfig::formation_scenario(&["cube", "pyramid", "triangle"], None, 42);
    let session = Session::new_paused(Simulation::new(cfg).unwrap());
    serve(
        session,
        ServerOptions {
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            ui_dir: None,
            max_ticks: None,
        },
    )
    .await
    .unwrap()
}

/// Test client that validates every frame it sees.
pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    schema: jsonschema::Validator,
    /// Raw text of every frame received, in order.
    pub log: Vec<String>,
    pub invalid: Vec<String>,
}

impl Client {
    pub async fn connect(addr: SocketAddr) -> Self {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
        Self {
            ws,
            schema: schema(),
            log: Vec::new(),
            invalid: Vec::new(),
        }
    }

    pub async fn send(&mut self, v: Value) {
        assert!(self.schema.is_valid(&v), "outbound command violates schema: {v}");
        self.ws.send(Message::Text(v.to_string().into())).await.unwrap();
    }

    pub async fn send_raw(&mut self, text: &str) {
        self.ws.send(Message::Text(text.to_string().into())).await.unwrap();
    }

    pub async fn next(&mut self) -> Value {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(10), self.ws.next())
                .await
                .expect("frame within 10 s")
                .expect("socket open")
                .expect("valid websocket message");
            if let Message::Text(t) = msg {
                let v: Value = serde_json::from_str(t.as_str()).expect("frame is JSON");
                if !self.schema.is_valid(&v) {
                    self.invalid.push(t.to_string());
                }
                self.log.push(t.to_string());
                return v;
            }
        }
    }

    /// Reads until a frame satisfies `pred`.
    pub async fn until(&mut self, mut pred: impl FnMut(&Value) -> bool) -> Value {
        loop {
            let v = self.next().await;
            if pred(&v) {
                return v;
            }
        }
    }

    pub async fn next_state(&mut self) -> Value {
        self.until(|v| v["type"] == "state").await
    }

    pub async fn next_error(&mut self) -> Value {
        self.until(|v| v["type"] == "error").await
    }

    pub async fn close(mut self) -> (Vec<String>, Vec<String>) {
        let _ = self.ws.close(None).await;
        (self.log, self.invalid)
    }
}

pub fn tick(v: &Value) -> u64 {
    v["tick"].as_u64().expect("tick")
}
