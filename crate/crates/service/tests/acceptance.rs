//! Acceptance checks, one PASS/FAIL line per criterion. Runs as a plain
//! binary (no libtest harness) and exits non-zero if any criterion fails.

mod common;

use serde_json::json;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;
use swarmsim::camera::{project, stereo_observe, CameraIntrinsics, Cull, Landmark, Projection};
use swarmsim::formation::{run_fast_sequence, FastFormationSim, FollowerLaw, FormationShape, PointMassState};
use swarmsim::geometry::{Pose, UnitQuat, Vec3};
use swarmsim::rigid_body::{step, MassProperties, RigidBodyState, STANDARD_GRAVITY};
use swarmsim::rng::RngStream;
use swarmsim::rotor::{derive_coeffs, total_rotor_wrench, BladeGeometry};
use swarmsim::sensors::{sample, AxisNoiseSpec, BiasState, SensorSuiteSpec};
use swarmsim::sim::{CameraConfig, Command, Session, SimConfig, Simulation, WorldConfig};
use swarmsim::traj_eval::{evaluate, Alignment, EvalMode, Trajectory};
use swarmsim::vehicle::VehicleParams;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

// ---------------------------------------------------------------- 1

fn hash_tree(dir: &Path) -> BTreeMap<String, String> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                // config.json names its own log directory.
                if rel == "config.json" {
                    continue;
                }
                let digest = Sha256::digest(std::fs::read(&path).unwrap());
                out.insert(rel, format!("{digest:x}"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Nine vehicles with noisy sensors and a stereo camera on the leader, so
/// every RNG stream is exercised.
fn determinism_scenario(seed: u64, log_dir: Option<&Path>) -> SimConfig {
    let mut cfg = SimConfig::formation_scenario(&["cube", "pyramid", "triangle"], Some(20.0), seed);
    for v in &mut cfg.vehicles {
        v.sensors = Some(SensorSuiteSpec::default());
    }
    let mut cam = CameraConfig::default();
    cam.intrinsics.noise_stddev = 0.5;
    cfg.vehicles[0].camera = Some(cam);
    cfg.world = WorldConfig::Generate {
        count: 300,
        min: Vec3::new(-20.0, -20.0, 0.0),
        max: Vec3::new(20.0, 20.0, 10.0),
        seed,
    };
    cfg.log_dir = log_dir.map(Path::to_path_buf);
    cfg
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ticks = 60_000;
    let mut hashes = Vec::new();
    let mut slowest: f64 = 0.0;
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let started = Instant::now();
        let mut sim = Simulation::new(determinism_scenario(11, Some(&dir))).map_err(|e| e.to_string())?;
        sim.run(ticks).map_err(|e| e.to_string())?;
        sim.finish().map_err(|e| e.to_string())?;
        slowest = slowest.max(started.elapsed().as_secs_f64());
        hashes.push(hash_tree(&dir));
    }
    check(hashes[0].len() > 40, || format!("only {} log files", hashes[0].len()))?;
    check(hashes[0] == hashes[1], || {
        let differing: Vec<_> = hashes[0].iter().filter(|(k, v)| hashes[1].get(*k) != Some(v)).map(|(k, _)| k).collect();
        format!("log bundles differ: {differing:?}")
    })?;
    check(slowest < 60.0, || format!("60 sim-seconds took {slowest:.1} s"))?;

    // Single-stepping through a paused session against one bulk run.
    let n = 2_500;
    let mut bulk = Simulation::new(determinism_scenario(3, None)).map_err(|e| e.to_string())?;
    bulk.run(n).map_err(|e| e.to_string())?;
    let mut stepped = Session::new_paused(Simulation::new(determinism_scenario(3, None)).map_err(|e| e.to_string())?);
    for _ in 0..n {
        stepped.handle(Command::Step { n: 1 }).map_err(|e| e.to_string())?;
        while stepped.advance().map_err(|e| e.to_string())? {}
    }
    let bits = |sim: &Simulation| -> Vec<u64> {
        sim.vehicles()
            .iter()
            .flat_map(|v| {
                let s = &v.state;
                let q = s.q.as_ref().coords;
                [s.p, s.v, s.omega]
                    .into_iter()
                    .flat_map(|x| [x.x, x.y, x.z])
                    .chain(q.iter().copied())
                    .chain(v.rotor_speeds().iter().copied())
                    .collect::<Vec<_>>()
            })
            .map(f64::to_bits)
            .collect()
    };
    check(bits(&bulk) == bits(&stepped.sim), || "step(1) x n diverged from run(n)".into())?;
    Ok(format!(
        "{} files identical, 60 sim-s in {slowest:.2} s wall, {n} x step(1) == run({n})",
        hashes[0].len()
    ))
}

// ---------------------------------------------------------------- 2

fn dynamics() -> Outcome {
    let mp = MassProperties::diagonal(1.5, 0.03, 0.03, 0.05).map_err(|e| e.to_string())?;
    let dt = 0.001;
    let n = 5_000u64;
    let mut s = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, 100.0), UnitQuat::identity());
    let weight = Vec3::new(0.0, 0.0, -mp.mass() * STANDARD_GRAVITY);
    for _ in 0..n {
        s = step(&s, &weight, &Vec3::zeros(), &mp, dt);
    }
    let want = STANDARD_GRAVITY * dt * dt * (n * (n + 1)) as f64 / 2.0;
    let fall = 100.0 - s.p.z;
    check(rel_err(fall, want) < 1e-12, || format!("free fall {fall} vs {want}"))?;

    let spin = Vec3::new(0.0, 0.0, 7.3);
    let mut s = RigidBodyState::at_rest(Vec3::zeros(), UnitQuat::identity());
    s.omega = spin;
    for _ in 0..10_000 {
        s = step(&s, &Vec3::zeros(), &Vec3::zeros(), &mp, dt);
    }
    check(s.omega == spin, || format!("spin drifted to {:?}", s.omega))?;

    let mut sim = Simulation::new(SimConfig::hover(2.0)).map_err(|e| e.to_string())?;
    let z0 = sim.vehicles()[0].state.p.z;
    let mut worst: f64 = 0.0;
    for _ in 0..60_000 {
        sim.tick().map_err(|e| e.to_string())?;
        worst = worst.max((sim.vehicles()[0].state.p.z - z0).abs());
    }
    check(worst < 0.01, || format!("hover drifted {worst} m"))?;
    Ok(format!("free fall rel err {:.1e}, spin exact, hover |dz| max {worst:.2e} m over 60 s", rel_err(fall, want)))
}

// ---------------------------------------------------------------- 3

fn rotor_model() -> Outcome {
    let blade = BladeGeometry::default();
    let c_t = derive_coeffs(&blade).map_err(|e| e.to_string())?.coeffs.c_t;
    let c_t_oracle = blade.ct0 * blade.rho * blade.d.powi(4) / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    check(rel_err(c_t, c_t_oracle) < 1e-12, || format!("C_T {c_t} vs {c_t_oracle}"))?;
    check(rel_err(c_t, 1.2916e-5) < 1e-4, || format!("C_T {c_t}"))?;

    let params = VehicleParams::default_quad();
    let w = params.hover_omega();
    let w_oracle = (1.5 * STANDARD_GRAVITY / (4.0 * c_t)).sqrt();
    check((w - w_oracle).abs() < 1e-9, || format!("hover omega {w} vs {w_oracle}"))?;
    check((w - 533.7).abs() < 0.05, || format!("hover omega {w}"))?;

    let (f, m) = total_rotor_wrench(&[w; 4], &params.rotors, &Vec3::zeros()).map_err(|e| e.to_string())?;
    let net = f.z - params.weight();
    check(net.abs() < 1e-9, || format!("net vertical force {net}"))?;
    check(m == Vec3::zeros(), || format!("equal-speed moment {m:?}"))?;
    Ok(format!("C_T {c_t:.5e}, hover omega {w:.2} rad/s, net Fz {net:.1e} N, moment exactly zero"))
}

// ---------------------------------------------------------------- 4

fn sensor_statistics() -> Outcome {
    let dt = 0.004;
    let white = AxisNoiseSpec {
        noise_density: 0.01,
        ..AxisNoiseSpec::NOISELESS
    };
    let mut rng = RngStream::new(1, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| sample(0.0, BiasState(0.0), &white, dt, &mut rng).0).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
    check(rel_err(sd, 0.1581) < 0.02, || format!("white noise stddev {sd}"))?;

    // 200 independent walks. Each is cut into 50 consecutive windows of N
    // steps; for a pure random walk the window increments are independent,
    // which gives 10^4 variance samples per lag.
    let walk = AxisNoiseSpec {
        random_walk: 0.02,
        ..AxisNoiseSpec::NOISELESS
    };
    let (trials, windows) = (200u64, 50usize);
    let lags = [10usize, 100, 400];
    let mut worst: f64 = 0.0;
    for &lag in &lags {
        let mut sum_sq = 0.0;
        for trial in 0..trials {
            let mut rng = RngStream::new(2, trial);
            let mut b = BiasState(0.0);
            for _ in 0..windows {
                let start = b.0;
                for _ in 0..lag {
                    b = sample(0.0, b, &walk, dt, &mut rng).1;
                }
                sum_sq += (b.0 - start).powi(2);
            }
        }
        let var = sum_sq / (trials as usize * windows) as f64;
        let want = walk.random_walk.powi(2) * dt * lag as f64;
        worst = worst.max(rel_err(var, want));
        check(rel_err(var, want) < 0.05, || format!("bias variance at N={lag}: {var:.4e} vs {want:.4e}"))?;
    }

    let mut rng = RngStream::new(3, 0);
    for truth in [-9.81, 0.0, 1e-300, 123.456] {
        let (m, b) = sample(truth, BiasState(0.0), &AxisNoiseSpec::NOISELESS, dt, &mut rng);
        check(m == truth && b.0 == 0.0, || format!("noiseless spec changed {truth} to {m}"))?;
    }
    Ok(format!("white sd {sd:.4} (want 0.1581), bias variance worst rel err {:.1}% over N={lags:?}", worst * 100.0))
}

// ---------------------------------------------------------------- 5

fn camera() -> Outcome {
    let intr = CameraIntrinsics {
        noise_stddev: 0.0,
        noise_mean: 0.0,
        ..CameraIntrinsics::default()
    };
    let mut rng = RngStream::new(0, 0);
    let mut worst: f64 = 0.0;
    for z in [0.5, 1.0, 3.7, 10.0, 25.0] {
        // Optical axis of the left eye; camera pose is the identity.
        let lm = [Landmark {
            id: 0,
            p: Vec3::new(0.0, 0.0, z),
        }];
        let obs = stereo_observe(&lm, &Pose::identity(0.0), &intr, &mut rng);
        let o = obs.first().ok_or_else(|| format!("on-axis point at {z} m not seen"))?;
        let disparity = o.ul - o.ur;
        let want = intr.fx * intr.baseline / z;
        worst = worst.max((disparity - want).abs());
        check((disparity - want).abs() < 1e-9, || format!("disparity {disparity} vs {want} at {z} m"))?;
    }

    let mut gen = RngStream::new(4, 0);
    let lms: Vec<Landmark> = (0..500)
        .map(|id| Landmark {
            id,
            p: Vec3::new(gen.uniform(-3.0, 3.0), gen.uniform(-2.0, 2.0), gen.uniform(1.0, 15.0)),
        })
        .collect();
    let obs = stereo_observe(&lms, &Pose::identity(0.0), &intr, &mut rng);
    check(obs.len() > 100, || format!("only {} observations", obs.len()))?;
    check(obs.iter().all(|o| o.vl == o.vr), || "rectified rows differ".into())?;

    let visible = |z: f64| matches!(project(&Vec3::new(0.0, 0.0, z), &intr), Projection::Visible { .. });
    let clipped = |z: f64| project(&Vec3::new(0.0, 0.0, z), &intr) == Projection::NotVisible(Cull::ClipPlane);
    check(visible(intr.near) && visible(intr.far), || "clip planes are inclusive".into())?;
    check(clipped(intr.near.next_down()) && clipped(intr.far.next_up()), || "culling just outside the clip planes".into())?;
    Ok(format!("disparity max err {worst:.1e} px, {} rectified pairs with vL == vR, clip planes exact", obs.len()))
}

// ---------------------------------------------------------------- 6

fn metrics() -> Outcome {
    let e = |x: swarmsim::traj_eval::EvalError| x.to_string();
    // A curved path so that alignment is well posed.
    let poses: Vec<Pose> = (0..600)
        .map(|i| {
            let t = i as f64 * 0.02;
            let p = Vec3::new(2.0 * t.cos(), 2.0 * t.sin(), 1.0 + 0.1 * t);
            Pose::new(t, p, UnitQuat::from_euler_angles(0.1 * t.sin(), 0.05 * t, t))
        })
        .collect();
    let reference = Trajectory::new(poses.clone()).map_err(e)?;

    for mode in [EvalMode::Ape, EvalMode::Rpe] {
        let r = evaluate(&reference, &reference, mode, Alignment::None, 0.5, 0.01).map_err(e)?;
        // q^-1 q leaves rounding residue in the rotation part.
        check(r.translation.max == 0.0 && r.rotation.max < 1e-9, || {
            format!("{mode:?} ref vs ref: {} m, {} deg", r.translation.max, r.rotation.max)
        })?;
    }

    let offset = Vec3::new(0.3, -0.4, 1.2);
    let shifted = Trajectory::new(poses.iter().map(|p| Pose::new(p.t, p.p + offset, p.q)).collect()).map_err(e)?;
    let ape = evaluate(&reference, &shifted, EvalMode::Ape, Alignment::None, 0.5, 0.01).map_err(e)?;
    let norm = offset.norm();
    check((ape.translation.min - norm).abs() < 1e-12 && (ape.translation.max - norm).abs() < 1e-12, || {
        format!("offset APE {:?} vs {norm}", ape.translation)
    })?;
    let rpe = evaluate(&reference, &shifted, EvalMode::Rpe, Alignment::None, 0.5, 0.01).map_err(e)?;
    check(rpe.translation.max < 1e-12, || format!("offset RPE {}", rpe.translation.max))?;

    let rot = UnitQuat::from_euler_angles(0.4, -0.2, 1.1);
    let moved = reference.transformed(&rot, &Vec3::new(5.0, -3.0, 2.0));
    let aligned = evaluate(&reference, &moved, EvalMode::Ape, Alignment::Se3, 0.5, 0.01).map_err(e)?;
    check(aligned.translation.rmse < 1e-9, || format!("aligned APE {}", aligned.translation.rmse))?;

    // 1 cm of drift per 10 cm of straight path.
    let line: Vec<Pose> = (0..=1000).map(|i| Pose::new(i as f64 * 0.01, Vec3::new(i as f64 * 0.01, 0.0, 0.0), UnitQuat::identity())).collect();
    let drifted: Vec<Pose> = line.iter().map(|p| Pose::new(p.t, p.p * 1.1, p.q)).collect();
    let rpe = evaluate(
        &Trajectory::new(line).map_err(e)?,
        &Trajectory::new(drifted).map_err(e)?,
        EvalMode::Rpe,
        Alignment::None,
        0.5,
        0.001,
    )
    .map_err(e)?;
    let mean = rpe.translation.mean;
    check(rel_err(mean, 0.05) < 0.01, || format!("drift RPE mean {mean}"))?;
    Ok(format!(
        "zero on identity, offset APE {norm:.6} exact, aligned APE {:.1e}, drift RPE@0.5 m mean {mean:.5}",
        aligned.translation.rmse
    ))
}

// ---------------------------------------------------------------- 7

fn formation() -> Outcome {
    let names = ["cube", "pyramid", "triangle"];
    let shapes: Vec<FormationShape> = names.iter().map(|n| FormationShape::builtin(n).unwrap()).collect();
    let mut fast = FastFormationSim::with_grid_start(0.004, Vec3::new(0.0, 0.0, 5.0), shapes[0].clone(), FollowerLaw::default())
        .map_err(|e| e.to_string())?;
    let fast_reports = run_fast_sequence(&mut fast, &shapes, 30.0, 10.0, 0.1, |_, _| {}).map_err(|e| e.to_string())?;
    for r in &fast_reports {
        check(r.max_error_after_settle < 0.1 && r.settle_time <= 10.0, || format!("fast {r:?}"))?;
    }

    let cfg = SimConfig::formation_scenario(&names, Some(30.0), 0);
    let mut full = Simulation::new(cfg).map_err(|e| e.to_string())?;
    full.run(90_000).map_err(|e| e.to_string())?;
    let full_reports = full.finish().map_err(|e| e.to_string())?.formation.unwrap_or_default();
    check(full_reports.len() == 3, || format!("{} switches in full sim", full_reports.len()))?;
    for r in &full_reports {
        check(r.max_error_after_settle < 0.1 && r.settle_time <= 20.0, || format!("full {r:?}"))?;
    }

    // 1 leader and 99 followers on a 1.5 m lattice, hovering.
    let side = 5;
    let offsets: Vec<Vec3> = (0..100)
        .skip(1)
        .map(|i| Vec3::new((i % side) as f64, ((i / side) % side) as f64, -((i / (side * side)) as f64) - 1.0) * 1.5)
        .collect();
    let lattice = FormationShape::new("lattice", offsets);
    let followers = (0..99)
        .map(|i| PointMassState::at(Vec3::new((i % 10) as f64 * 2.0, (i / 10) as f64 * 2.0, 0.0)))
        .collect();
    let mut big = FastFormationSim::new(0.004, PointMassState::at(Vec3::new(0.0, 0.0, 10.0)), followers, lattice, FollowerLaw::default(), 0)
        .map_err(|e| e.to_string())?;
    let started = Instant::now();
    for _ in 0..7_500 {
        big.step();
    }
    let speedup = big.t() / started.elapsed().as_secs_f64();

    let settle = |rs: &[swarmsim::formation::SwitchReport]| {
        rs.iter().map(|r| format!("{:.1}", r.settle_time)).collect::<Vec<_>>().join("/")
    };
    Ok(format!(
        "settle fast {} s, full {} s; 100-agent fast sim {speedup:.0}x realtime (informational)",
        settle(&fast_reports),
        settle(&full_reports)
    ))
}

// ---------------------------------------------------------------- 8

fn velocity_tracking() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = SimConfig::hover(3.0);
    cfg.log_dir = Some(tmp.path().to_path_buf());
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    sim.run(1000).map_err(|e| e.to_string())?;
    let t0 = sim.t();
    sim.apply(Command::Velocity {
        id: 0,
        v: Vec3::new(0.0, 1.0, 0.0),
        yaw_rate: 0.0,
        frame: Default::default(),
    })
    .map_err(|e| e.to_string())?;
    let (mut peak, mut last_out): (f64, f64) = (0.0, 0.0);
    for _ in 0..6_000 {
        sim.tick().map_err(|e| e.to_string())?;
        let vy = sim.vehicles()[0].state.v.y;
        peak = peak.max(vy);
        if (vy - 1.0).abs() > 0.1 {
            last_out = sim.t() - t0;
        }
    }
    sim.finish().map_err(|e| e.to_string())?;
    let overshoot = (peak - 1.0).max(0.0);
    check(last_out <= 3.0, || format!("settled at {last_out:.3} s"))?;
    check(overshoot <= 0.3, || format!("overshoot {:.1}%", overshoot * 100.0))?;
    let rows = std::fs::read_to_string(tmp.path().join("uav0/velocity.csv")).map_err(|e| e.to_string())?;
    check(rows.starts_with("t,vref_x") && rows.lines().count() > 300, || "tracking CSV missing rows".into())?;
    Ok(format!(
        "settled in {last_out:.3} s, overshoot {:.1}%, {} CSV rows",
        overshoot * 100.0,
        rows.lines().count() - 1
    ))
}

// ---------------------------------------------------------------- 9

async fn protocol_session() -> Outcome {
    let server = common::start_paused_formation().await;
    let mut c = common::Client::connect(server.local_addr()).await;
    let tick = common::tick;
    let first = c.next_state().await;
    check(tick(&first) == 0 && first["paused"] == true, || format!("initial frame {first}"))?;

    c.send(json!({"type": "step", "n": 5})).await;
    let f = c.until(|v| v["type"] == "state" && tick(v) >= 5).await;
    check(tick(&f) == 5, || format!("step 5 reached tick {}", tick(&f)))?;
    for _ in 0..3 {
        let g = c.next_state().await;
        check(g["t"] == f["t"] && g["uavs"] == f["uavs"], || "state moved while paused".into())?;
    }

    c.send(json!({"type": "velocity", "id": 42, "v": [1, 0, 0]})).await;
    let err = c.next_error().await;
    let after = c.next_state().await;
    check(tick(&after) == 5 && after["uavs"] == f["uavs"], || "unknown id changed state".into())?;

    c.send(json!({"type": "velocity", "id": 0, "v": [0, 1, 0]})).await;
    c.send(json!({"type": "set_shape", "name": "triangle"})).await;
    c.send(json!({"type": "step", "n": 1500})).await;
    let end = c.until(|v| v["type"] == "state" && tick(v) == 1505).await;
    let vy = end["uavs"][0]["v"][1].as_f64().unwrap_or(0.0);
    check((vy - 1.0).abs() < 0.1, || format!("leader vy {vy} after setpoint"))?;
    check(end["formation"]["shape"] == "triangle", || "shape command ignored".into())?;

    c.send(json!({"type": "resume"})).await;
    c.until(|v| v["type"] == "state" && v["paused"] == false).await;
    c.send(json!({"type": "pause"})).await;
    c.until(|v| v["type"] == "state" && v["paused"] == true).await;

    let (log, invalid) = c.close().await;
    server.shutdown().await.map_err(|e| e.to_string())?;
    check(invalid.is_empty(), || format!("{} frames violate the schema: {:?}", invalid.len(), invalid.first()))?;
    Ok(format!("{} frames schema-valid; unknown id -> {}", log.len(), err["msg"]))
}

fn protocol() -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async { tokio::time::timeout(std::time::Duration::from_secs(60), protocol_session()).await })
        .map_err(|_| "timed out".to_string())?
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("determinism and lockstep", determinism),
        ("dynamics oracles", dynamics),
        ("rotor model", rotor_model),
        ("sensor statistics", sensor_statistics),
        ("camera", camera),
        ("trajectory metrics", metrics),
        ("formation", formation),
        ("velocity tracking", velocity_tracking),
        ("wire protocol", protocol),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
