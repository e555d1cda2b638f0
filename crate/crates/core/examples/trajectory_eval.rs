//! Flies a square, turns the ground truth into a drifting, noisy estimate
//! and scores it with APE and RPE.
//!
//! cargo run --release -p swarmsim --example trajectory_eval

use swarmsim::geometry::{Pose, UnitQuat};
use swarmsim::rng::RngStream;
use swarmsim::sim::{Command, SimConfig, Simulation};
use swarmsim::traj_eval::{evaluate, load_tum, save_tum, Alignment, EvalMode, EvalReport, Trajectory};
use swarmsim::Vec3;

fn show(label: &str, r: &EvalReport) {
    println!(
        "{label:<22} trans rmse {:.4} m  mean {:.4} m  max {:.4} m | rot rmse {:.3} deg  ({} pairs)",
        r.translation.rmse, r.translation.mean, r.translation.max, r.rotation.rmse, r.translation.n_pairs
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile_dir()?;
    let mut cfg = SimConfig::hover(2.0);
    cfg.log_dir = Some(dir.clone());
    let mut sim = Simulation::new(cfg)?;
    for (x, y) in [(4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (0.0, 0.0)] {
        sim.apply(Command::Hold {
            id: 0,
            p: Vec3::new(x, y, 2.0),
            yaw: 0.0,
        })?;
        sim.run(8_000)?;
    }
    sim.finish()?;
    let truth = load_tum(&dir.join("uav0/groundtruth.tum"))?;

    // Scale drift of 2%, a slow yaw drift and 1 cm position jitter.
    let mut rng = RngStream::new(3, 0);
    let estimate = Trajectory::new(
        truth
            .samples()
            .iter()
            .map(|p| {
                let jitter = Vec3::new(rng.normal(0.0, 0.01), rng.normal(0.0, 0.01), rng.normal(0.0, 0.01));
                let yaw = UnitQuat::from_euler_angles(0.0, 0.0, 0.002 * p.t);
                Pose::new(p.t, yaw * (p.p * 1.02) + jitter, yaw * p.q)
            })
            .collect(),
    )?;
    let est_path = dir.join("estimate.tum");
    save_tum(&est_path, &estimate)?;
    let estimate = load_tum(&est_path)?;

    println!("reference path {:.2} m over {} poses", truth.path_length(), truth.len());
    show("APE, no alignment", &evaluate(&truth, &estimate, EvalMode::Ape, Alignment::None, 0.5, 0.01)?);
    show("APE, SE(3) aligned", &evaluate(&truth, &estimate, EvalMode::Ape, Alignment::Se3, 0.5, 0.01)?);
    show("RPE per 0.5 m", &evaluate(&truth, &estimate, EvalMode::Rpe, Alignment::None, 0.5, 0.01)?);
    show("RPE per 2 m", &evaluate(&truth, &estimate, EvalMode::Rpe, Alignment::None, 2.0, 0.01)?);
    println!("files in {}", dir.display());
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = tempfile::Builder::new().prefix("swarmsim-eval").tempdir()?;
    Ok(dir.keep())
}
