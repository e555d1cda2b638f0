//! Cube, pyramid and triangle in the point-mass simulator, with a per-second
//! error trace.
//!
//! cargo run -p swarmsim --example formation_fast

use swarmsim::formation::{run_fast_sequence, AssignmentPolicy, FastFormationSim, FollowerLaw, FormationShape};
use swarmsim::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shapes: Vec<FormationShape> = ["cube", "pyramid", "triangle"]
        .iter()
        .map(|n| FormationShape::builtin(n))
        .collect::<Result<_, _>>()?;
    let mut sim = FastFormationSim::with_grid_start(0.004, Vec3::new(0.0, 0.0, 5.0), shapes[0].clone(), FollowerLaw::default())?;
    sim.policy = AssignmentPolicy::MinDistance;

    let mut next_print = 0.0;
    let reports = run_fast_sequence(&mut sim, &shapes, 15.0, 10.0, 0.1, |t, err| {
        if t >= next_print {
            println!("t = {t:5.1} s  max error {err:.4} m");
            next_print += 1.0;
        }
    })?;
    for r in reports {
        println!(
            "{:>9}: switched at {:4.1} s, settled after {:.2} s, worst error after 10 s {:.2e} m",
            r.shape, r.switched_at, r.settle_time, r.max_error_after_settle
        );
    }
    Ok(())
}
