//! Command-line front end.

use crate::server::{serve, ServerOptions};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::time::Instant;
use swarmsim::camera::{generate_landmarks, write_landmarks};
use swarmsim::clock::{Pacer, RealtimeFactor};
use swarmsim::formation::{run_fast_sequence, AssignmentPolicy, FastFormationSim, FollowerLaw, FormationShape};
use swarmsim::sim::{read_transcript, Session, SimConfig, Simulation};
use swarmsim::traj_eval::{evaluate, load_tum, Alignment, EvalMode};
use swarmsim::Vec3;

#[derive(Debug, Parser)]
#[command(name = "swarmsim", version, about = "Deterministic lockstep multirotor swarm simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a simulation from a JSON config, headless or behind a WebSocket.
    Run(RunArgs),
    /// Compare two TUM trajectories (APE or RPE).
    Eval(EvalArgs),
    /// Leader-follower shape sequence in the fast or full simulator.
    Formation(FormationArgs),
    /// Generate a random landmark map.
    Worldgen(WorldgenArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Physics steps to run; required unless serving.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Serve telemetry and accept commands on this port.
    #[arg(long)]
    pub serve: Option<u16>,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the log directory.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
    /// Override the realtime factor (number or "unbounded").
    #[arg(long)]
    pub rtf: Option<RealtimeFactor>,
    /// Replay a recorded commands.jsonl transcript.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Serve the browser client from this directory.
    #[arg(long)]
    pub serve_ui: Option<PathBuf>,
    /// Start the served simulation paused.
    #[arg(long)]
    pub paused: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Ape,
    Rpe,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlignArg {
    None,
    Se3,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long = "est")]
    pub estimate: PathBuf,
    /// RPE interval in metres of reference path.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "none")]
    pub align: AlignArg,
    /// Association window (s).
    #[arg(long, default_value_t = 0.01)]
    pub max_dt: f64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimKind {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Identity,
    MinDistance,
}

#[derive(Debug, Args)]
pub struct FormationArgs {
    #[arg(long, value_delimiter = ',', default_value = "cube,pyramid,triangle")]
    pub shape_seq: Vec<String>,
    #[arg(long, value_enum, default_value = "fast")]
    pub sim: SimKind,
    /// Seconds per shape.
    #[arg(long, default_value_t = 30.0)]
    pub dwell: f64,
    /// Error after this many seconds counts towards the report (default
    /// 10 for fast, 20 for full).
    #[arg(long)]
    pub settle: Option<f64>,
    #[arg(long, value_enum, default_value = "identity")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Full simulator only: write the log bundle here.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorldgenArgs {
    #[arg(long)]
    pub landmarks: usize,
    /// xmin,ymin,zmin,xmax,ymax,zmax
    #[arg(long = "box", allow_hyphen_values = true, value_delimiter = ',', default_value = "-20,-20,0,20,20,10")]
    pub bounds: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub async fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Cmd::Run(a) => run_sim(a).await,
        Cmd::Eval(a) => eval(a),
        Cmd::Formation(a) => formation(a),
        Cmd::Worldgen(a) => worldgen(a),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(out, "{text}") {
        // A closed pipe (`| head`) is not an error worth reporting.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

async fn run_sim(a: RunArgs) -> anyhow::Result<()> {
    let mut cfg = SimConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.log_dir {
        cfg.log_dir = Some(d);
    }
    if let Some(r) = a.rtf {
        cfg.realtime_factor = r;
    }
    let port = a.serve.or(cfg.serve);
    let transcript = match &a.replay {
        Some(p) => Some(read_transcript(&std::fs::read_to_string(p)?).map_err(anyhow::Error::msg)?),
        None => None,
    };
    let sim = Simulation::new(cfg)?;

    if let Some(port) = port {
        if transcript.is_some() {
            bail!("--replay runs headless; drop --serve");
        }
        let session = if a.paused {
            Session::new_paused(sim)
        } else {
            Session::new(sim)
        };
        let handle = serve(
            session,
            ServerOptions {
                bind: SocketAddr::from((Ipv4Addr::LOCALHOST, port)),
                ui_dir: a.serve_ui,
                max_ticks: a.steps,
            },
        )
        .await?;
        eprintln!("listening on ws://{}/ws", handle.local_addr());
        let report = tokio::select! {
            r = wait_finished(&handle) => r.map(|_| ()),
            _ = tokio::signal::ctrl_c() => Ok(()),
        };
        report?;
        return print_json(&handle.shutdown().await?);
    }

    let Some(steps) = a.steps else {
        bail!("--steps is required without --serve");
    };
    let rtf = sim.config().realtime_factor;
    let report = tokio::task::spawn_blocking(move || -> anyhow::Result<_> {
        let mut sim = sim;
        match transcript {
            Some(entries) => sim.run_with_transcript(&entries, steps)?,
            None => {
                let pacer = Pacer::new(sim.t());
                for _ in 0..steps {
                    sim.tick()?;
                    pacer.pace(sim.t(), rtf);
                }
            }
        }
        Ok(sim.finish()?)
    })
    .await??;
    print_json(&report)
}

async fn wait_finished(handle: &crate::server::ServerHandle) -> anyhow::Result<()> {
    while !handle.is_finished() {
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let reference = load_tum(&a.reference).with_context(|| format!("reading {}", a.reference.display()))?;
    let estimate = load_tum(&a.estimate).with_context(|| format!("reading {}", a.estimate.display()))?;
    let mode = match a.mode {
        ModeArg::Ape => EvalMode::Ape,
        ModeArg::Rpe => EvalMode::Rpe,
    };
    let align = match a.align {
        AlignArg::None => Alignment::None,
        AlignArg::Se3 => Alignment::Se3,
    };
    let report = evaluate(&reference, &estimate, mode, align, a.delta, a.max_dt)?;
    if let Some(out) = &a.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    print_json(&report)
}

#[derive(serde::Serialize)]
struct FormationOutput {
    sim: &'static str,
    sim_time: f64,
    wall_time: f64,
    switches: Vec<swarmsim::formation::SwitchReport>,
}

fn formation(a: FormationArgs) -> anyhow::Result<()> {
    let names: Vec<&str> = a.shape_seq.iter().map(String::as_str).collect();
    if names.is_empty() {
        bail!("--shape-seq is empty");
    }
    let policy = match a.policy {
        PolicyArg::Identity => AssignmentPolicy::Identity,
        PolicyArg::MinDistance => AssignmentPolicy::MinDistance,
    };
    let started = Instant::now();
    let (sim_name, sim_time, switches) = match a.sim {
        SimKind::Fast => {
            let shapes = names
                .iter()
                .map(|n| FormationShape::builtin(n).or_else(|_| FormationShape::load(std::path::Path::new(n))))
                .collect::<Result<Vec<_>, _>>()?;
            let mut sim =
                FastFormationSim::with_grid_start(0.004, Vec3::new(0.0, 0.0, 5.0), shapes[0].clone(), FollowerLaw::default())?;
            sim.policy = policy;
            let reports = run_fast_sequence(&mut sim, &shapes, a.dwell, a.settle.unwrap_or(10.0), 0.1, |_, _| {})?;
            ("fast", sim.t(), reports)
        }
        SimKind::Full => {
            let mut cfg = SimConfig::formation_scenario(&names, Some(a.dwell), a.seed);
            cfg.log_dir = a.log_dir;
            if let Some(f) = &mut cfg.formation {
                f.policy = policy;
                f.settle_window = a.settle.unwrap_or(20.0);
            }
            let steps = (a.dwell * names.len() as f64 / cfg.dt_physics).round() as u64;
            let mut sim = Simulation::new(cfg)?;
            sim.run(steps)?;
            let t = sim.t();
            let report = sim.finish()?;
            ("full", t, report.formation.unwrap_or_default())
        }
    };
    print_json(&FormationOutput {
        sim: sim_name,
        sim_time,
        wall_time: started.elapsed().as_secs_f64(),
        switches,
    })
}

fn worldgen(a: WorldgenArgs) -> anyhow::Result<()> {
    let b = &a.bounds;
    if b.len() != 6 {
        bail!("--box takes six values: xmin,ymin,zmin,xmax,ymax,zmax");
    }
    let (min, max) = (Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]));
    if (0..3).any(|i| !(min[i] < max[i])) {
        bail!("--box needs min < max on every axis");
    }
    let landmarks = generate_landmarks(a.landmarks, &min, &max, a.seed);
    match &a.out {
        Some(path) => write_landmarks(std::io::BufWriter::new(std::fs::File::create(path)?), &landmarks)?,
        None => write_landmarks(std::io::stdout().lock(), &landmarks)?,
    }
    Ok(())
}
