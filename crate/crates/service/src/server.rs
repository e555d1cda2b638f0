//! WebSocket telemetry and command endpoint.
//!
//! The simulation runs on its own OS thread and is the only owner of
//! simulation state. Clients reach it through an ordered command channel;
//! it publishes serialized state frames on a broadcast channel that every
//! connection subscribes to.

use anyhow::Context;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, TryRecvError};
use std::sync::Arc;
use std::time::{Duration, Instant};
use swarmsim::clock::Pacer;
use swarmsim::sim::{parse_command, Command, CommandError, OutboundFrame, RunReport, Session, SimError};
use tokio::sync::{broadcast, oneshot};

pub struct ServerOptions {
    pub bind: SocketAddr,
    /// Static files served at `/` (the browser client).
    pub ui_dir: Option<PathBuf>,
    /// Stop after this many ticks.
    pub max_ticks: Option<u64>,
}

struct Inbound {
    cmd: Command,
    reply: oneshot::Sender<Result<(), CommandError>>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<Inbound>,
    frames: broadcast::Sender<Arc<str>>,
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    sim: std::thread::JoinHandle<Result<RunReport, SimError>>,
    http: tokio::task::JoinHandle<()>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// True once the simulation thread has exited.
    pub fn is_finished(&self) -> bool {
        self.sim.is_finished()
    }

    /// Stops the simulation and returns its report.
    pub async fn shutdown(self) -> anyhow::Result<RunReport> {
        self.stop.store(true, Ordering::SeqCst);
        self.wait().await
    }

    /// Waits for the simulation to end on its own (tick limit reached).
    pub async fn wait(self) -> anyhow::Result<RunReport> {
        let sim = self.sim;
        let report = tokio::task::spawn_blocking(move || sim.join())
            .await?
            .map_err(|_| anyhow::anyhow!("simulation thread panicked"))??;
        self.http.abort();
        Ok(report)
    }
}

/// Binds the endpoint and starts the simulation thread.
pub async fn serve(session: Session, opts: ServerOptions) -> anyhow::Result<ServerHandle> {
    let listener = tokio::net::TcpListener::bind(opts.bind)
        .await
        .with_context(|| format!("cannot bind {}", opts.bind))?;
    let addr = listener.local_addr()?;
    let (cmd_tx, cmd_rx) = mpsc::channel();
    let (frame_tx, _) = broadcast::channel(256);
    let stop = Arc::new(AtomicBool::new(false));

    let sim = {
        let frames = frame_tx.clone();
        let stop = stop.clone();
        std::thread::Builder::new()
            .name("sim".into())
            .spawn(move || sim_loop(session, cmd_rx, frames, stop, opts.max_ticks))?
    };

    let state = AppState {
        commands: cmd_tx,
        frames: frame_tx,
    };
    let mut router = Router::new().route("/ws", get(ws_upgrade));
    if let Some(dir) = opts.ui_dir {
        router = router.fallback_service(tower_http::services::ServeDir::new(dir));
    }
    let router = router.with_state(state);
    let http = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router).await {
            log::error!("http server: {e}");
        }
    });
    log::info!("listening on ws://{addr}/ws");
    Ok(ServerHandle { addr, stop, sim, http })
}

fn publish(frames: &broadcast::Sender<Arc<str>>, session: &Session) {
    // No subscribers is not an error.
    let _ = frames.send(OutboundFrame::state(session.snapshot()).to_json().into());
}

fn handle(session: &mut Session, inbound: Inbound, pacer: &mut Pacer) {
    let before = (session.paused(), session.realtime_factor());
    let result = session.handle(inbound.cmd);
    if (session.paused(), session.realtime_factor()) != before {
        pacer.reset(session.sim.t());
    }
    let _ = inbound.reply.send(result);
}

fn sim_loop(
    mut session: Session,
    commands: mpsc::Receiver<Inbound>,
    frames: broadcast::Sender<Arc<str>>,
    stop: Arc<AtomicBool>,
    max_ticks: Option<u64>,
) -> Result<RunReport, SimError> {
    let dec = session.sim.decimations().telemetry;
    let period = Duration::from_secs_f64(dec as f64 * session.sim.clock().dt());
    let mut pacer = Pacer::new(session.sim.t());
    let mut last_frame = Instant::now();
    publish(&frames, &session);

    while !stop.load(Ordering::SeqCst) {
        if max_ticks.is_some_and(|n| session.sim.clock().step_index() >= n) {
            break;
        }
        loop {
            match commands.try_recv() {
                Ok(inbound) => handle(&mut session, inbound, &mut pacer),
                Err(TryRecvError::Empty) => break,
                // The sender lives in the HTTP state; gone means shutdown.
                Err(TryRecvError::Disconnected) => return session.sim.finish(),
            }
        }
        if session.wants_tick() {
            let stepping = session.paused();
            session.advance()?;
            let k = session.sim.clock().step_index();
            let batch_done = stepping && !session.wants_tick();
            if k % dec == 0 || batch_done {
                publish(&frames, &session);
                last_frame = Instant::now();
            }
            pacer.pace(session.sim.t(), session.realtime_factor());
        } else {
            let wait = period.saturating_sub(last_frame.elapsed());
            match commands.recv_timeout(wait) {
                Ok(inbound) => handle(&mut session, inbound, &mut pacer),
                Err(RecvTimeoutError::Timeout) => {
                    // Paused: keep clients fed with the unchanged state.
                    publish(&frames, &session);
                    last_frame = Instant::now();
                }
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }
    }
    session.sim.finish()
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = state.frames.subscribe();
    let (direct_tx, mut direct_rx) = tokio::sync::mpsc::unbounded_channel::<String>();

    let writer = tokio::spawn(async move {
        loop {
            let text: String = tokio::select! {
                f = frames.recv() => match f {
                    Ok(text) => text.to_string(),
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        log::warn!("client lagging, {n} frames dropped");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                d = direct_rx.recv() => match d {
                    Some(text) => text,
                    None => break,
                },
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    let error = |msg: String| OutboundFrame::error(msg).to_json();
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Binary(_) => {
                let _ = direct_tx.send(error("binary frames are not supported".into()));
                continue;
            }
            Message::Close(_) => break,
            _ => continue,
        };
        let cmd = match parse_command(text.as_str()) {
            Ok(cmd) => cmd,
            Err(e) => {
                let _ = direct_tx.send(error(e.to_string()));
                continue;
            }
        };
        let (reply, result) = oneshot::channel();
        if state.commands.send(Inbound { cmd, reply }).is_err() {
            let _ = direct_tx.send(error("simulation has stopped".into()));
            break;
        }
        match result.await {
            Ok(Ok(())) => {}
            Ok(Err(e)) => {
                let _ = direct_tx.send(error(e.to_string()));
            }
            Err(_) => {
                let _ = direct_tx.send(error("simulation has stopped".into()));
                break;
            }
        }
    }
    drop(direct_tx);
    writer.abort();
}
