//! Throughput of the point-mass simulator with one leader and 99 followers
//! on a 3-D lattice, while the leader flies a square.
//!
//! cargo run --release -p swarmsim --example formation_benchmark

use std::time::Instant;
use swarmsim::formation::{FastFormationSim, FollowerLaw, FormationShape, LeaderScript, PointMassState};
use swarmsim::Vec3;

fn lattice(n: usize, spacing: f64) -> FormationShape {
    let side = (n as f64 + 1.0).cbrt().ceil() as usize;
    let offsets = (1..=n)
        .map(|i| {
            let (x, y, z) = (i % side, (i / side) % side, i / (side * side));
            Vec3::new(x as f64, y as f64, -(z as f64) - 1.0) * spacing
        })
        .collect();
    FormationShape::new("lattice", offsets)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shape = lattice(99, 1.5);
    let followers = (0..99)
        .map(|i| PointMassState::at(Vec3::new((i % 10) as f64 * 2.0, (i / 10) as f64 * 2.0, 0.0)))
        .collect();
    let mut sim = FastFormationSim::new(
        0.004,
        PointMassState::at(Vec3::new(0.0, 0.0, 12.0)),
        followers,
        shape,
        FollowerLaw::default(),
        0,
    )?;
    let corners = [(10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.0)];
    sim.script = LeaderScript::Waypoints(
        (0..12)
            .map(|k| {
                let (x, y) = corners[k % 4];
                (k as f64 * 10.0, Vec3::new(x, y, 12.0))
            })
            .collect(),
    );

    let sim_seconds = 120.0;
    let started = Instant::now();
    while sim.t() < sim_seconds {
        sim.step();
    }
    let wall = started.elapsed().as_secs_f64();
    println!("100 agents, {sim_seconds} s simulated in {wall:.3} s: {:.0}x realtime", sim_seconds / wall);
    println!("max follower error at the end: {:.4} m", sim.max_error());
    Ok(())
}
