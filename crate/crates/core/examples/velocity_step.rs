//! A +1 m/s lateral velocity step from hover. Writes the tracking log and
//! reports overshoot and settling time.
//!
//! cargo run -p swarmsim --example velocity_step [-- OUT_DIR]

use std::path::PathBuf;
use swarmsim::sim::{Command, SimConfig, Simulation, VelocityFrame};
use swarmsim::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("velocity_step_logs"));
    let mut cfg = SimConfig::hover(3.0);
    cfg.log_dir = Some(dir.clone());
    let mut sim = Simulation::new(cfg)?;

    sim.run(1000)?;
    let t0 = sim.t();
    sim.apply(Command::Velocity {
        id: 0,
        v: Vec3::new(0.0, 1.0, 0.0),
        yaw_rate: 0.0,
        frame: VelocityFrame::World,
    })?;

    let (mut peak, mut settled_at) = (0.0f64, 0.0);
    for _ in 0..5000 {
        sim.tick()?;
        let vy = sim.vehicles()[0].state.v.y;
        peak = peak.max(vy);
        if (vy - 1.0).abs() > 0.1 {
            settled_at = sim.t() - t0;
        }
    }
    sim.finish()?;
    println!("peak {peak:.4} m/s, overshoot {:.1}%", (peak - 1.0).max(0.0) * 100.0);
    println!("inside the +/-10% band from {settled_at:.3} s after the step");
    println!("tracking log: {}", dir.join("uav0/velocity.csv").display());
    Ok(())
}
