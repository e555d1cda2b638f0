//! One quadrotor in position hold for a minute of simulated time.
//!
//! cargo run -p swarmsim --example hover

use swarmsim::sim::{SimConfig, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut sim = Simulation::new(SimConfig::hover(2.0))?;
    let z0 = sim.vehicles()[0].state.p.z;
    let started = std::time::Instant::now();
    let mut worst: f64 = 0.0;
    for second in 1..=60 {
        sim.run(1000)?;
        let v = &sim.vehicles()[0];
        worst = worst.max((v.state.p.z - z0).abs());
        if second % 10 == 0 {
            let speeds: Vec<String> = v.rotor_speeds().iter().map(|w| format!("{w:.2}")).collect();
            println!("t = {:>4.1} s  z = {:.6} m  rotors [{}] rad/s", sim.t(), v.state.p.z, speeds.join(", "));
        }
    }
    println!("max |dz| = {worst:.3e} m, {:.2} s wall for 60 s simulated", started.elapsed().as_secs_f64());
    Ok(())
}
