//! Derives rotor coefficients from blade geometry, finds the hover speed of
//! the default quad and prints the per-rotor wrench as airspeed grows.
//!
//! cargo run -p swarmsim --example rotor_coefficients

use swarmsim::rotor::{derive_coeffs, rotor_wrench, BladeGeometry};
use swarmsim::vehicle::VehicleParams;
use swarmsim::Vec3;

fn main() {
    let blade = BladeGeometry::default();
    let derived = derive_coeffs(&blade).expect("default blade is valid");
    let c = derived.coeffs;
    println!("blade: d = {} m, {} blades, rho = {} kg/m^3", blade.d, blade.n_blades, blade.rho);
    println!("C_T = {:.5e}  C_D = {:.5e}  C_R = {:.5e}  C_M = {:.5e}", c.c_t, c.c_d, c.c_r, c.c_m);
    for w in &derived.warnings {
        println!("warning: {:?} was {} and is clamped to {}", w.coeff, w.raw, w.clamped_to);
    }

    let quad = VehicleParams::default_quad();
    let hover = quad.hover_omega();
    println!("\nmass {} kg, hover speed {hover:.2} rad/s ({:.0} rpm)", quad.mass(), hover * 60.0 / std::f64::consts::TAU);

    println!("\nfront-right rotor at hover speed, body velocity along +x:");
    println!("{:>6} {:>9} {:>9} {:>10} {:>10}", "v m/s", "T N", "H N", "Mroll Nm", "Mdrag Nm");
    let rotor = &quad.rotors[0];
    for v in [0.0, 1.0, 2.0, 5.0, 10.0] {
        let w = rotor_wrench(hover, rotor, &Vec3::new(v, 0.0, 0.0)).unwrap();
        println!(
            "{v:>6.1} {:>9.4} {:>9.4} {:>10.5} {:>10.5}",
            w.thrust.z,
            w.h_force.norm(),
            w.rolling_moment.norm(),
            w.drag_moment.z
        );
    }
}
