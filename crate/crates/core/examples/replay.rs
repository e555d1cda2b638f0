//! Drives an interactive session with pause, step and setpoint commands,
//! then replays the recorded transcript headlessly and compares the logs
//! byte for byte.
//!
//! cargo run --release -p swarmsim --example replay

use std::path::Path;
use swarmsim::sim::{read_transcript, Command, Session, SimConfig, Simulation};
use swarmsim::Vec3;

/// Every log file under `root` except the config, keyed by relative path.
fn read_all(root: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            if path.is_dir() {
                stack.push(path);
            } else if rel != "config.json" {
                out.push((rel, std::fs::read(&path)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let (live, replay) = (tmp.path().join("live"), tmp.path().join("replay"));
    let config = |dir: &Path| {
        let mut cfg = SimConfig::formation_scenario(&["cube", "pyramid", "triangle"], None, 9);
        cfg.log_dir = Some(dir.to_path_buf());
        cfg
    };

    let mut session = Session::new_paused(Simulation::new(config(&live))?);
    let commands = [
        Command::Step { n: 2000 },
        Command::Velocity {
            id: 0,
            v: Vec3::new(1.0, 0.0, 0.2),
            yaw_rate: 0.0,
            frame: Default::default(),
        },
        Command::Step { n: 3000 },
        Command::SetShape { name: "pyramid".into() },
        Command::Step { n: 5000 },
        Command::Hold {
            id: 0,
            p: Vec3::new(3.0, 0.0, 5.0),
            yaw: 0.5,
        },
        Command::Step { n: 10_000 },
    ];
    for cmd in commands {
        session.handle(cmd)?;
        while session.advance()? {}
    }
    let ticks = session.sim.clock().step_index();
    session.sim.finish()?;

    let transcript = read_transcript(&std::fs::read_to_string(live.join("commands.jsonl"))?)?;
    println!("recorded {} state-changing commands over {ticks} ticks:", transcript.len());
    for e in &transcript {
        println!("  tick {:>6}: {}", e.tick, serde_json::to_string(&e.cmd)?);
    }

    let mut sim = Simulation::new(config(&replay))?;
    sim.run_with_transcript(&transcript, ticks)?;
    sim.finish()?;

    let (a, b) = (read_all(&live)?, read_all(&replay)?);
    let bytes: usize = a.iter().map(|(_, d)| d.len()).sum();
    println!("{} log files, {bytes} bytes: {}", a.len(), if a == b { "identical" } else { "DIFFERENT" });
    Ok(())
}
