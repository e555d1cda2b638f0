//! The lockstep loop: every vehicle, sensor, camera and the formation
//! coordinator advance on integer decimations of one physics clock.

use super::command::{Command, CommandError, FormationView, StateFrame, UavState, VelocityFrame};
use super::config::{CameraConfig, ConfigError, Decimations, Role, SimConfig, Waypoint, WorldConfig};
use super::logs::{LogBundle, SensorLog, TranscriptEntry};
use crate::camera::{generate_landmarks, load_landmarks, stereo_observe, CameraMount, Landmark};
use crate::clock::SimClock;
use crate::control::{outer_step, rate_step, CascadeGains, ControllerState, Mixer, Setpoint};
use crate::formation::{
    follower_velocity_setpoint, leader_broadcast, max_formation_error, reconfigure, AssignmentPolicy, DelayLine,
    FollowerLaw, FormationShape, LeaderMsg, SwitchReport,
};
use crate::geometry::{yaw_of, yaw_quat, Pose, Vec3};
use crate::rigid_body::{ground_clamp, net_wrench, step, RigidBodyState};
use crate::rng::{RngStream, SensorSlot};
use crate::rotor::{motor_lag_step, total_rotor_wrench};
use crate::sensors::{imu_truth, mag_baro_gps_truth, magnetic_field, SensorDecimations, SensorRig};
use crate::vehicle::VehicleParams;
use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("log output: {0}")]
    Io(#[from] std::io::Error),
}

struct Camera {
    config: CameraConfig,
    mount: CameraMount,
    rng: RngStream,
}

/// One simulated multirotor with its controller and sensors.
pub struct Vehicle {
    pub id: u32,
    pub role: Role,
    pub params: VehicleParams,
    pub gains: CascadeGains,
    mixer: Mixer,
    pub state: RigidBodyState,
    /// Actual rotor speeds (rad/s).
    omega: Vec<f64>,
    ctrl: ControllerState,
    setpoint: Option<Setpoint>,
    sensors: Option<SensorRig>,
    camera: Option<Camera>,
    /// World acceleration over the last step.
    accel: Vec3,
}

impl Vehicle {
    pub fn setpoint(&self) -> Option<&Setpoint> {
        self.setpoint.as_ref()
    }

    pub fn rotor_speeds(&self) -> &[f64] {
        &self.omega
    }

    pub fn controller(&self) -> &ControllerState {
        &self.ctrl
    }

    pub fn pose(&self, t: f64) -> Pose {
        Pose::new(t, self.state.p, self.state.q)
    }
}

struct Formation {
    shapes: Vec<FormationShape>,
    dwell_ticks: Option<u64>,
    seq_index: usize,
    shape: FormationShape,
    offsets: Vec<Vec3>,
    law: FollowerLaw,
    policy: AssignmentPolicy,
    link: DelayLine<LeaderMsg>,
    leader: usize,
    followers: Vec<usize>,
    prev_leader_v: Option<Vec3>,
    waypoints: Vec<Waypoint>,
    next_waypoint: usize,
    settle_window: f64,
    threshold: f64,
    reports: Vec<SwitchReport>,
    last_error: f64,
}

impl Formation {
    fn switch_to(&mut self, target: FormationShape, t: f64) -> Result<(), CommandError> {
        if target.len() != self.offsets.len() {
            return Err(CommandError::ShapeSize {
                name: target.name.clone(),
                got: target.len(),
                expected: self.offsets.len(),
            });
        }
        let current = FormationShape::new(self.shape.name.clone(), self.offsets.clone());
        let assignment =
            reconfigure(&current, &target, self.policy).map_err(|e| CommandError::InvalidArgument(e.to_string()))?;
        for (i, off) in assignment {
            self.offsets[i] = off;
        }
        self.reports.push(SwitchReport {
            shape: target.name.clone(),
            switched_at: t,
            max_error_after_settle: 0.0,
            settle_time: 0.0,
        });
        self.shape = target;
        Ok(())
    }

    fn track_error(&mut self, t: f64, err: f64) {
        self.last_error = err;
        if let Some(r) = self.reports.last_mut() {
            let since = t - r.switched_at;
            if err >= self.threshold {
                r.settle_time = since;
            }
            if since >= self.settle_window {
                r.max_error_after_settle = r.max_error_after_settle.max(err);
            }
        }
    }
}

/// Summary printed at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub ticks: u64,
    pub sim_time: f64,
    pub vehicles: Vec<VehicleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formation: Option<Vec<SwitchReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleSummary {
    pub id: u32,
    pub role: Role,
    pub position: [f64; 3],
    pub armed: bool,
}

pub struct Simulation {
    cfg: SimConfig,
    dec: Decimations,
    clock: SimClock,
    vehicles: Vec<Vehicle>,
    landmarks: Vec<Landmark>,
    field: Vec3,
    formation: Option<Formation>,
    logs: Option<LogBundle>,
    transcript: Vec<TranscriptEntry>,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        let dec = cfg.validate()?;
        let dt = cfg.dt_physics;
        let landmarks = match &cfg.world {
            WorldConfig::Empty => Vec::new(),
            WorldConfig::File { path } => load_landmarks(path).map_err(ConfigError::World)?,
            WorldConfig::Generate { count, min, max, seed } => generate_landmarks(*count, min, max, *seed),
        };
        let sensor_dec = SensorDecimations {
            imu: dec.imu,
            mag: dec.mag,
            baro: dec.baro,
            gps: dec.gps,
        };
        let mut vehicles = Vec::with_capacity(cfg.vehicles.len());
        for vc in &cfg.vehicles {
            let params = vc
                .airframe
                .build(cfg.gravity)
                .map_err(|source| ConfigError::Airframe { id: vc.id, source })?;
            let mixer = Mixer::new(&params.rotors).map_err(|e| ConfigError::Invalid(format!("vehicle {}: {e}", vc.id)))?;
            let q = yaw_quat(vc.yaw);
            let (ctrl, setpoint, omega) = if vc.airborne {
                let hover = params.hover_omega();
                (
                    ControllerState::armed(),
                    Some(Setpoint::PositionHold { p: vc.position, yaw: vc.yaw }),
                    vec![hover; params.rotors.len()],
                )
            } else {
                (ControllerState::default(), None, vec![0.0; params.rotors.len()])
            };
            vehicles.push(Vehicle {
                id: vc.id,
                role: vc.role,
                gains: vc.gains,
                mixer,
                state: RigidBodyState::at_rest(vc.position, q),
                omega,
                ctrl,
                setpoint,
                sensors: vc.sensors.as_ref().map(|s| SensorRig::new(s, cfg.seed, vc.id, sensor_dec, dt)),
                camera: vc.camera.map(|c| Camera {
                    config: c,
                    mount: c.mount(),
                    rng: RngStream::for_sensor(cfg.seed, vc.id, SensorSlot::Camera),
                }),
                accel: Vec3::zeros(),
                params,
            });
        }
        let formation = match &cfg.formation {
            None => None,
            Some(fc) => {
                let shapes = fc.resolve_shapes()?;
                let leader = vehicles.iter().position(|v| v.role == Role::Leader).expect("validated");
                let followers: Vec<usize> = (0..vehicles.len()).filter(|&i| vehicles[i].role == Role::Follower).collect();
                for s in &shapes {
                    if s.len() != followers.len() {
                        return Err(ConfigError::Invalid(format!(
                            "shape {} has {} offsets for {} followers",
                            s.name,
                            s.len(),
                            followers.len()
                        ))
                        .into());
                    }
                }
                let dwell_ticks = match fc.dwell {
                    Some(d) => {
                        let ticks = (d / dt).round();
                        if ((ticks * dt) - d).abs() > 1e-9 * d.max(1.0) {
                            return Err(ConfigError::Invalid("formation dwell must be a whole number of physics steps".into()).into());
                        }
                        Some(ticks as u64)
                    }
                    None => None,
                };
                let mut f = Formation {
                    shape: shapes[0].clone(),
                    offsets: shapes[0].offsets.clone(),
                    shapes,
                    dwell_ticks,
                    seq_index: 0,
                    law: fc.law,
                    policy: fc.policy,
                    link: DelayLine::new(fc.link_delay_ticks),
                    leader,
                    followers,
                    prev_leader_v: None,
                    waypoints: fc.leader_waypoints.clone(),
                    next_waypoint: 0,
                    settle_window: fc.settle_window,
                    threshold: fc.error_threshold,
                    reports: Vec::new(),
                    last_error: 0.0,
                };
                f.reports.push(SwitchReport {
                    shape: f.shape.name.clone(),
                    switched_at: 0.0,
                    max_error_after_settle: 0.0,
                    settle_time: 0.0,
                });
                Some(f)
            }
        };
        let logs = match &cfg.log_dir {
            Some(dir) => {
                let roster: Vec<(u32, bool, bool)> = cfg
                    .vehicles
                    .iter()
                    .map(|v| (v.id, v.sensors.is_some(), v.camera.is_some()))
                    .collect();
                let any_camera = roster.iter().any(|r| r.2);
                Some(LogBundle::create(
                    dir,
                    &cfg.to_json(),
                    &roster,
                    formation.is_some(),
                    any_camera.then_some(landmarks.as_slice()),
                )?)
            }
            None => None,
        };
        let m = &cfg.magnetic_field;
        Ok(Self {
            field: magnetic_field(m.declination, m.inclination),
            clock: SimClock::new(dt, cfg.realtime_factor),
            dec,
            vehicles,
            landmarks,
            formation,
            logs,
            transcript: Vec::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn decimations(&self) -> &Decimations {
        &self.dec
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn t(&self) -> f64 {
        self.clock.t()
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: u32) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Current formation shape and the largest follower error at the last
    /// formation update.
    pub fn formation_status(&self) -> Option<(&str, f64)> {
        self.formation.as_ref().map(|f| (f.shape.name.as_str(), f.last_error))
    }

    pub fn switch_reports(&self) -> Option<&[SwitchReport]> {
        self.formation.as_ref().map(|f| f.reports.as_slice())
    }

    fn index_of(&self, id: u32) -> Result<usize, CommandError> {
        self.vehicles
            .iter()
            .position(|v| v.id == id)
            .ok_or(CommandError::UnknownVehicle(id))
    }

    fn is_follower(&self, idx: usize) -> bool {
        self.formation.as_ref().is_some_and(|f| f.followers.contains(&idx))
    }

    /// Applies a state-changing command before the next tick and appends it
    /// to the transcript. Pacing commands are rejected here; they belong to
    /// [`super::Session`].
    pub fn apply(&mut self, cmd: Command) -> Result<(), CommandError> {
        let t = self.clock.t();
        match &cmd {
            Command::Velocity { id, v, yaw_rate, frame } => {
                let idx = self.index_of(*id)?;
                if self.is_follower(idx) {
                    return Err(CommandError::FollowerControlled(*id));
                }
                let veh = &mut self.vehicles[idx];
                let v_world = match frame {
                    VelocityFrame::World => *v,
                    VelocityFrame::Body => yaw_quat(yaw_of(&veh.state.q)) * v,
                };
                veh.setpoint = Some(Setpoint::VelocityYaw {
                    v: v_world,
                    yaw_rate: *yaw_rate,
                });
            }
            Command::Hold { id, p, yaw } => {
                let idx = self.index_of(*id)?;
                if self.is_follower(idx) {
                    return Err(CommandError::FollowerControlled(*id));
                }
                self.vehicles[idx].setpoint = Some(Setpoint::PositionHold { p: *p, yaw: *yaw });
            }
            Command::Takeoff { id, altitude } => {
                let idx = self.index_of(*id)?;
                self.vehicles[idx].setpoint = Some(Setpoint::TakeOff { altitude: *altitude });
            }
            Command::Land { id } => {
                let idx = self.index_of(*id)?;
                self.vehicles[idx].setpoint = Some(Setpoint::Land);
            }
            Command::SetShape { name } => {
                let f = self.formation.as_mut().ok_or(CommandError::NoFormation)?;
                let shape = f
                    .shapes
                    .iter()
                    .find(|s| &s.name == name)
                    .cloned()
                    .or_else(|| FormationShape::builtin(name).ok())
                    .ok_or_else(|| CommandError::UnknownShape(name.clone()))?;
                f.switch_to(shape, t)?;
            }
            Command::Pause | Command::Resume | Command::Step { .. } | Command::SetRtf { .. } => {
                return Err(CommandError::InvalidArgument("pacing commands are handled by the session".into()));
            }
        }
        let entry = TranscriptEntry {
            tick: self.clock.step_index(),
            cmd,
        };
        if let Some(logs) = &mut self.logs {
            logs.command(&entry).map_err(|e| CommandError::InvalidArgument(format!("transcript write: {e}")))?;
        }
        self.transcript.push(entry);
        Ok(())
    }

    fn update_formation(&mut self, k: u64, t: f64) {
        let Some(f) = self.formation.as_mut() else {
            return;
        };
        if let Some(dt_ticks) = f.dwell_ticks {
            if k > 0 && k % dt_ticks == 0 && f.seq_index + 1 < f.shapes.len() {
                f.seq_index += 1;
                let next = f.shapes[f.seq_index].clone();
                f.switch_to(next, t).expect("shapes validated against roster");
            }
        }
        while f.next_waypoint < f.waypoints.len() && f.waypoints[f.next_waypoint].t <= t {
            let wp = f.waypoints[f.next_waypoint];
            let leader = &mut self.vehicles[f.leader];
            leader.setpoint = Some(Setpoint::PositionHold {
                p: wp.p,
                yaw: yaw_of(&leader.state.q),
            });
            f.next_waypoint += 1;
        }
        if k % self.dec.control != 0 {
            return;
        }
        let dt_ctrl = self.dec.control as f64 * self.clock.dt();
        let leader = &self.vehicles[f.leader].state;
        let a = match f.prev_leader_v {
            Some(pv) => (leader.v - pv) / dt_ctrl,
            None => Vec3::zeros(),
        };
        f.prev_leader_v = Some(leader.v);
        let msg = f.link.push(leader_broadcast(t, leader, &a));
        let leader_p = leader.p;
        let mut positions = Vec::with_capacity(f.followers.len());
        for (slot, &idx) in f.followers.iter().enumerate() {
            let veh = &mut self.vehicles[idx];
            positions.push(veh.state.p);
            if veh.ctrl.armed {
                let v_ref = follower_velocity_setpoint(&veh.state.p, &msg, &f.offsets[slot], &f.law);
                veh.setpoint = Some(Setpoint::VelocityYaw { v: v_ref, yaw_rate: 0.0 });
            }
        }
        let err = max_formation_error(&leader_p, &positions, &f.offsets);
        f.track_error(t, err);
    }

    /// Advances one physics step.
    pub fn tick(&mut self) -> Result<(), SimError> {
        let k = self.clock.step_index();
        let t = self.clock.t();
        let dt = self.clock.dt();
        self.update_formation(k, t);
        let control_due = k % self.dec.control == 0;
        let dt_ctrl = self.dec.control as f64 * dt;
        for veh in &mut self.vehicles {
            if control_due {
                if let Some(sp) = veh.setpoint {
                    if let Some(next) = outer_step(&veh.state, &sp, &veh.gains, &veh.params, &mut veh.ctrl, dt_ctrl) {
                        veh.setpoint = Some(next);
                    }
                }
            }
            let cmd = rate_step(&veh.state, &veh.gains, &veh.params, &veh.mixer, &mut veh.ctrl, dt);
            for (w, c) in veh.omega.iter_mut().zip(&cmd.omega_cmd) {
                *w = motor_lag_step(*w, *c, veh.params.motor_tau, dt);
            }
            let v_body = veh.state.body_velocity();
            let (f_rotor, m_rotor) =
                total_rotor_wrench(&veh.omega, &veh.params.rotors, &v_body).expect("rotor count fixed at build");
            let mp = &veh.params.mass_props;
            let (f_world, m_body) = net_wrench(&veh.state, &f_rotor, &m_rotor, mp, &veh.params.drag, veh.params.gravity);
            let mut next = step(&veh.state, &f_world, &m_body, mp, dt);
            veh.accel = f_world / mp.mass();
            if ground_clamp(&mut next) {
                veh.accel = Vec3::zeros();
                if matches!(veh.setpoint, Some(Setpoint::Land)) {
                    veh.ctrl.disarm();
                    veh.setpoint = None;
                    veh.omega.iter_mut().for_each(|w| *w = 0.0);
                }
            }
            veh.state = next;
        }
        self.clock.advance();
        self.sample_and_log()?;
        Ok(())
    }

    fn sample_and_log(&mut self) -> Result<(), SimError> {
        let k = self.clock.step_index();
        let t = self.clock.t();
        let dec = self.dec;
        let log_due = k % dec.log == 0;
        for (vi, veh) in self.vehicles.iter_mut().enumerate() {
            let mut vlog = self.logs.as_mut().map(|l| &mut l.vehicles[vi]);
            if let Some(rig) = &mut veh.sensors {
                let s = &veh.state;
                if k % dec.imu == 0 {
                    let (f_spec, w) = imu_truth(s, &veh.accel, veh.params.gravity);
                    let mf = rig.accel.measure3(&f_spec);
                    let mw = rig.gyro.measure3(&w);
                    if let Some(l) = vlog.as_deref_mut() {
                        l.sensor3(SensorLog::Accel, t, &f_spec, &mf)?;
                        l.sensor3(SensorLog::Gyro, t, &w, &mw)?;
                    }
                }
                let aux = mag_baro_gps_truth(s, &self.field, &Vec3::zeros());
                if k % dec.mag == 0 {
                    let m = rig.mag.measure3(&aux.mag_body);
                    if let Some(l) = vlog.as_deref_mut() {
                        l.sensor3(SensorLog::Mag, t, &aux.mag_body, &m)?;
                    }
                }
                if k % dec.baro == 0 {
                    let b = rig.baro.measure(&[aux.altitude])[0];
                    if let Some(l) = vlog.as_deref_mut() {
                        l.baro(t, aux.altitude, b)?;
                    }
                }
                if k % dec.gps == 0 {
                    let gp = rig.gps_pos.measure3(&aux.gps_pos);
                    let gv = rig.gps_vel.measure3(&aux.gps_vel);
                    if let Some(l) = vlog.as_deref_mut() {
                        l.sensor3(SensorLog::GpsPos, t, &aux.gps_pos, &gp)?;
                        l.sensor3(SensorLog::GpsVel, t, &aux.gps_vel, &gv)?;
                    }
                }
            }
            let body_pose = veh.pose(t);
            if let Some(cam) = &mut veh.camera {
                if k % dec.camera == 0 {
                    let pose = cam.mount.camera_pose(&body_pose);
                    let obs = stereo_observe(&self.landmarks, &pose, &cam.config.intrinsics, &mut cam.rng);
                    if let Some(l) = vlog.as_deref_mut() {
                        l.camera(t, 0, &obs)?;
                    }
                }
            }
            if log_due {
                if let Some(l) = vlog {
                    l.truth(&body_pose)?;
                    l.velocity(t, &veh.ctrl.v_cmd, &veh.state.v)?;
                }
            }
        }
        if log_due {
            if let (Some(logs), Some(f)) = (&mut self.logs, &self.formation) {
                logs.formation(t, &f.shape.name, f.last_error)?;
            }
        }
        Ok(())
    }

    /// Runs `n` ticks with no commands.
    pub fn run(&mut self, n: u64) -> Result<(), SimError> {
        for _ in 0..n {
            self.tick()?;
        }
        Ok(())
    }

    /// Runs `n` ticks, applying each transcript entry at the start of its
    /// recorded tick. Entries for ticks already passed are applied at once.
    pub fn run_with_transcript(&mut self, entries: &[TranscriptEntry], n: u64) -> Result<(), SimError> {
        let mut next = 0;
        let end = self.clock.step_index() + n;
        while self.clock.step_index() < end {
            while next < entries.len() && entries[next].tick <= self.clock.step_index() {
                let cmd = entries[next].cmd.clone();
                if cmd.affects_state() {
                    self.apply(cmd)
                        .map_err(|e| ConfigError::Invalid(format!("transcript entry {}: {e}", next + 1)))?;
                }
                next += 1;
            }
            self.tick()?;
        }
        Ok(())
    }

    /// Telemetry snapshot of the current state.
    pub fn snapshot(&self, paused: bool) -> StateFrame {
        StateFrame {
            t: self.clock.t(),
            tick: self.clock.step_index(),
            paused,
            uavs: self
                .vehicles
                .iter()
                .map(|v| UavState::new(v.id, &v.state.p, &v.state.v, &v.state.q, v.role.as_str()))
                .collect(),
            formation: self.formation.as_ref().map(|f| FormationView {
                shape: f.shape.name.clone(),
                targets: f
                    .followers
                    .iter()
                    .zip(&f.offsets)
                    .map(|(&i, o)| (self.vehicles[i].id, [o.x, o.y, o.z]))
                    .collect(),
            }),
        }
    }

    pub fn flush(&mut self) -> Result<(), SimError> {
        if let Some(l) = &mut self.logs {
            l.flush()?;
        }
        Ok(())
    }

    /// Flushes logs and summarizes the run.
    pub fn finish(mut self) -> Result<RunReport, SimError> {
        self.flush()?;
        Ok(RunReport {
            ticks: self.clock.step_index(),
            sim_time: self.clock.t(),
            vehicles: self
                .vehicles
                .iter()
                .map(|v| VehicleSummary {
                    id: v.id,
                    role: v.role,
                    position: [v.state.p.x, v.state.p.y, v.state.p.z],
                    armed: v.ctrl.armed,
                })
                .collect(),
            formation: self.formation.as_ref().map(|f| f.reports.clone()),
            log_dir: self.logs.as_ref().map(|l| l.dir().to_path_buf()),
        })
    }
}

impl Drop for Simulation {
    fn drop(&mut self) {
        if let Some(l) = &mut self.logs {
            let _ = l.flush();
        }
    }
}
