//! Closed-form and statistical oracles for the physical models.

use swarmsim::camera::{project, stereo_observe, CameraIntrinsics, Landmark, Projection};
use swarmsim::formation::{FastFormationSim, FollowerLaw, FormationShape};
use swarmsim::geometry::{Pose, UnitQuat, Vec3};
use swarmsim::rigid_body::{step, MassProperties, RigidBodyState};
use swarmsim::rng::RngStream;
use swarmsim::sensors::{sample, AxisNoiseSpec, BiasState};
use swarmsim::sim::{Command, SimConfig, Simulation};

#[test]
fn gauss_markov_bias_reaches_its_stationary_variance() {
    let (dt, tau, sigma) = (0.01, 0.5, 0.05);
    let spec = AxisNoiseSpec {
        random_walk: sigma,
        bias_corr_time: Some(tau),
        ..AxisNoiseSpec::NOISELESS
    };
    let phi = (-dt / tau).exp();
    let want = sigma * sigma * dt / (1.0 - phi * phi);
    // Samples 3 tau apart are nearly uncorrelated (e^-3 = 0.05).
    let spacing = (3.0 * tau / dt) as usize;
    let mut sum_sq = 0.0;
    let mut n = 0;
    for chain in 0..400 {
        let mut rng = RngStream::new(10, chain);
        let mut b = BiasState(0.0);
        for k in 0..12 * spacing {
            b = sample(0.0, b, &spec, dt, &mut rng).1;
            if k >= 2 * spacing && k % spacing == 0 {
                sum_sq += b.0 * b.0;
                n += 1;
            }
        }
    }
    let var = sum_sq / n as f64;
    assert!(((var - want) / want).abs() < 0.08, "{var} vs {want} from {n} samples");
}

#[test]
fn measurement_mean_tracks_truth_plus_turn_on_bias() {
    let spec = AxisNoiseSpec {
        noise_density: 0.02,
        ..AxisNoiseSpec::NOISELESS
    };
    let mut rng = RngStream::new(5, 0);
    let n = 50_000;
    let mean = (0..n).map(|_| sample(3.0, BiasState(0.25), &spec, 0.004, &mut rng).0).sum::<f64>() / n as f64;
    // Standard error is 0.02/sqrt(0.004)/sqrt(n) = 1.4e-3.
    assert!((mean - 3.25).abs() < 6e-3, "{mean}");
}

#[test]
fn distortion_matches_hand_computation() {
    let intr = CameraIntrinsics {
        k1: -0.2,
        k2: 0.05,
        k3: 0.01,
        p1: 0.001,
        p2: -0.002,
        ..CameraIntrinsics::default()
    };
    let (x, y) = (0.3, -0.2);
    let r2: f64 = 0.13;
    let radial = 1.0 - 0.2 * r2 + 0.05 * r2 * r2 + 0.01 * r2 * r2 * r2;
    let xd = x * radial + 2.0 * 0.001 * x * y - 0.002 * (r2 + 2.0 * x * x);
    let yd = y * radial + 0.001 * (r2 + 2.0 * y * y) + 2.0 * -0.002 * x * y;
    let (gx, gy) = intr.distort(x, y);
    assert!((gx - xd).abs() < 1e-15 && (gy - yd).abs() < 1e-15);

    let Projection::Visible { u, v } = project(&Vec3::new(x * 4.0, y * 4.0, 4.0), &intr) else {
        panic!("point should be visible");
    };
    assert!((u - (400.0 * xd + 376.0)).abs() < 1e-9);
    assert!((v - (400.0 * yd + 240.0)).abs() < 1e-9);
}

#[test]
fn pixel_noise_has_configured_moments() {
    let intr = CameraIntrinsics {
        noise_mean: 0.3,
        noise_stddev: 1.5,
        ..CameraIntrinsics::default()
    };
    let clean = CameraIntrinsics {
        noise_mean: 0.0,
        noise_stddev: 0.0,
        ..intr
    };
    let lm = [Landmark {
        id: 1,
        p: Vec3::new(0.4, -0.3, 5.0),
    }];
    let pose = Pose::identity(0.0);
    let mut rng = RngStream::new(8, 0);
    let truth = stereo_observe(&lm, &pose, &clean, &mut rng)[0];
    let mut errs = Vec::new();
    for _ in 0..20_000 {
        let o = stereo_observe(&lm, &pose, &intr, &mut rng)[0];
        errs.extend([o.ul - truth.ul, o.vl - truth.vl, o.ur - truth.ur, o.vr - truth.vr]);
    }
    let n = errs.len() as f64;
    let mean = errs.iter().sum::<f64>() / n;
    let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 0.3).abs() < 0.03, "{mean}");
    assert!((sd - 1.5).abs() / 1.5 < 0.02, "{sd}");
}

#[test]
fn torque_free_tumbling_keeps_energy_and_momentum() {
    let mp = MassProperties::diagonal(1.0, 0.02, 0.03, 0.05).unwrap();
    let mut s = RigidBodyState::at_rest(Vec3::zeros(), UnitQuat::identity());
    // Close to the stable major axis with some wobble.
    s.omega = Vec3::new(0.3, 0.2, 4.0);
    let energy = |s: &RigidBodyState| 0.5 * s.omega.dot(&(mp.inertia() * s.omega));
    let momentum = |s: &RigidBodyState| s.q * (mp.inertia() * s.omega);
    let (e0, l0) = (energy(&s), momentum(&s));
    for _ in 0..10_000 {
        s = step(&s, &Vec3::zeros(), &Vec3::zeros(), &mp, 0.001);
    }
    assert!(((energy(&s) - e0) / e0).abs() < 1e-3, "energy {} vs {e0}", energy(&s));
    assert!((momentum(&s) - l0).norm() / l0.norm() < 1e-2, "momentum {:?} vs {l0:?}", momentum(&s));
    assert!((s.q.as_ref().norm() - 1.0).abs() < 1e-12);
}

#[test]
fn position_hold_reaches_a_displaced_target() {
    let mut sim = Simulation::new(SimConfig::hover(2.0)).unwrap();
    let target = Vec3::new(1.5, -1.0, 2.5);
    sim.apply(Command::Hold { id: 0, p: target, yaw: 0.6 }).unwrap();
    sim.run(8_000).unwrap();
    let s = &sim.vehicles()[0].state;
    assert!((s.p - target).norm() < 0.05, "{:?}", s.p);
    assert!(s.v.norm() < 0.05);
    assert!((swarmsim::geometry::yaw_of(&s.q) - 0.6).abs() < 0.05);
}

#[test]
fn takeoff_and_landing_from_the_ground() {
    let mut cfg = SimConfig::hover(0.0);
    cfg.vehicles[0].airborne = false;
    let mut sim = Simulation::new(cfg).unwrap();
    sim.run(500).unwrap();
    assert_eq!(sim.vehicles()[0].state.p.z, 0.0);

    sim.apply(Command::Takeoff { id: 0, altitude: 1.5 }).unwrap();
    sim.run(8_000).unwrap();
    let z = sim.vehicles()[0].state.p.z;
    assert!((z - 1.5).abs() < 0.05, "{z}");

    sim.apply(Command::Land { id: 0 }).unwrap();
    sim.run(10_000).unwrap();
    let v = &sim.vehicles()[0];
    assert_eq!(v.state.p.z, 0.0);
    assert!(!v.controller().armed);
}

#[test]
fn formation_error_decays_after_the_initial_peak() {
    let mut sim = FastFormationSim::with_grid_start(0.004, Vec3::new(0.0, 0.0, 5.0), FormationShape::cube(), FollowerLaw::default())
        .unwrap();
    let errors: Vec<f64> = (0..5_000)
        .map(|_| {
            sim.step();
            sim.max_error()
        })
        .collect();
    let peak = errors.iter().enumerate().fold(0, |best, (i, e)| if *e > errors[best] { i } else { best });
    for w in errors[peak..].windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "error rose from {} to {}", w[0], w[1]);
    }
    assert!(*errors.last().unwrap() < 0.1);
}
