//! Run configuration, loaded from a single JSON document.

use crate::camera::{CameraError, CameraIntrinsics, CameraMount};
use crate::clock::{decimation, RealtimeFactor};
use crate::control::CascadeGains;
use crate::formation::{AssignmentPolicy, FollowerLaw, FormationError, FormationShape, DEFAULT_D_SAFE};
use crate::geometry::{UnitQuat, Vec3};
use crate::rigid_body::STANDARD_GRAVITY;
use crate::sensors::{SensorError, SensorSuiteSpec};
use crate::vehicle::{AirframeError, AirframeSpec};
use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{name} rate {rate_hz} Hz does not divide the physics rate")]
    RateNotDivisor { name: &'static str, rate_hz: f64 },
    #[error("physics step must be positive and finite")]
    InvalidStep,
    #[error("duplicate vehicle id {0}")]
    DuplicateId(u32),
    #[error("no vehicles configured")]
    NoVehicles,
    #[error("vehicle {id}: {source}")]
    Airframe { id: u32, source: AirframeError },
    #[error("vehicle {id}: {source}")]
    Sensors { id: u32, source: SensorError },
    #[error("vehicle {id}: {source}")]
    Camera { id: u32, source: CameraError },
    #[error("vehicle {id}: invalid controller gains")]
    Gains { id: u32 },
    #[error("formation: {0}")]
    Formation(#[from] FormationError),
    #[error("formation needs exactly one leader, found {0}")]
    LeaderCount(usize),
    #[error("invalid realtime factor")]
    RealtimeFactor,
    #[error("world: {0}")]
    World(CameraError),
    #[error("{0}")]
    Invalid(String),
    #[error("config parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Subsystem rates (Hz); each must divide the physics rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rates {
    /// Outer control loops and formation updates.
    pub control: f64,
    pub imu: f64,
    pub mag: f64,
    pub baro: f64,
    pub gps: f64,
    pub camera: f64,
    pub telemetry: f64,
    /// Ground-truth and tracking logs.
    pub log: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            control: 250.0,
            imu: 250.0,
            mag: 50.0,
            baro: 50.0,
            gps: 10.0,
            camera: 20.0,
            telemetry: 25.0,
            log: 50.0,
        }
    }
}

/// Physics steps per event for every subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimations {
    pub control: u64,
    pub imu: u64,
    pub mag: u64,
    pub baro: u64,
    pub gps: u64,
    pub camera: u64,
    pub telemetry: u64,
    pub log: u64,
}

impl Rates {
    pub fn decimations(&self, dt: f64) -> Result<Decimations, ConfigError> {
        let d = |name: &'static str, rate_hz: f64| decimation(dt, rate_hz).ok_or(ConfigError::RateNotDivisor { name, rate_hz });
        Ok(Decimations {
            control: d("control", self.control)?,
            imu: d("imu", self.imu)?,
            mag: d("mag", self.mag)?,
            baro: d("baro", self.baro)?,
            gps: d("gps", self.gps)?,
            camera: d("camera", self.camera)?,
            telemetry: d("telemetry", self.telemetry)?,
            log: d("log", self.log)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Leader,
    Follower,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Leader => "leader",
            Role::Follower => "follower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facing {
    #[default]
    Forward,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    #[serde(default)]
    pub intrinsics: CameraIntrinsics,
    /// Left optical centre in the body frame (m).
    #[serde(default = "default_camera_offset")]
    pub offset: Vec3,
    #[serde(default)]
    pub facing: Facing,
}

fn default_camera_offset() -> Vec3 {
    CameraMount::default().offset
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            offset: default_camera_offset(),
            facing: Facing::Forward,
        }
    }
}

impl CameraConfig {
    pub fn mount(&self) -> CameraMount {
        match self.facing {
            Facing::Forward => CameraMount::forward(self.offset),
            Facing::Down => {
                // Optical z along body -z, optical x along body -y.
                let cols = Matrix3::from_columns(&[-Vec3::y(), -Vec3::x(), -Vec3::z()]);
                CameraMount {
                    offset: self.offset,
                    rotation: UnitQuat::from_rotation_matrix(&Rotation3::from_matrix_unchecked(cols)),
                }
            }
        }
    }
}

fn default_sensors() -> Option<SensorSuiteSpec> {
    Some(SensorSuiteSpec::default())
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleConfig {
    pub id: u32,
    #[serde(default)]
    pub role: Role,
    /// Initial position (m, world).
    pub position: Vec3,
    #[serde(default)]
    pub yaw: f64,
    /// Start armed and hovering in position hold; otherwise disarmed on the
    /// ground until a take-off command.
    #[serde(default = "yes")]
    pub airborne: bool,
    #[serde(default)]
    pub airframe: AirframeSpec,
    #[serde(default)]
    pub gains: CascadeGains,
    /// `null` disables the sensor suite.
    #[serde(default = "default_sensors")]
    pub sensors: Option<SensorSuiteSpec>,
    #[serde(default)]
    pub camera: Option<CameraConfig>,
}

impl VehicleConfig {
    pub fn hovering(id: u32, position: Vec3) -> Self {
        Self {
            id,
            role: Role::Leader,
            position,
            yaw: 0.0,
            airborne: true,
            airframe: AirframeSpec::default(),
            gains: CascadeGains::default(),
            sensors: default_sensors(),
            camera: None,
        }
    }
}

/// Source of the landmark map observed by cameras.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WorldConfig {
    Empty,
    File { path: PathBuf },
    Generate { count: usize, min: Vec3, max: Vec3, seed: u64 },
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig::Empty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticFieldConfig {
    /// Declination east of north (rad).
    pub declination: f64,
    /// Inclination below horizontal (rad).
    pub inclination: f64,
}

impl Default for MagneticFieldConfig {
    fn default() -> Self {
        Self {
            declination: 0.0,
            inclination: 60f64.to_radians(),
        }
    }
}

/// Timed leader position target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub p: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationConfig {
    /// Built-in shape names or paths to shape CSV files.
    pub shapes: Vec<String>,
    /// Seconds per shape before switching to the next; `None` keeps the
    /// first shape until a `set_shape` command.
    #[serde(default)]
    pub dwell: Option<f64>,
    #[serde(default)]
    pub law: FollowerLaw,
    #[serde(default = "default_d_safe")]
    pub d_safe: f64,
    /// Leader-to-follower latency in control ticks.
    #[serde(default)]
    pub link_delay_ticks: usize,
    #[serde(default)]
    pub policy: AssignmentPolicy,
    #[serde(default)]
    pub leader_waypoints: Vec<Waypoint>,
    /// Time after a switch from which the error is expected to stay small
    /// (s); reported per switch.
    #[serde(default = "default_settle_window")]
    pub settle_window: f64,
    /// Error bound used for settle-time reporting (m).
    #[serde(default = "default_error_threshold")]
    pub error_threshold: f64,
}

fn default_settle_window() -> f64 {
    20.0
}

fn default_error_threshold() -> f64 {
    0.1
}

fn default_d_safe() -> f64 {
    DEFAULT_D_SAFE
}

impl FormationConfig {
    /// Loads every shape and checks its separation against `d_safe`.
    pub fn resolve_shapes(&self) -> Result<Vec<FormationShape>, ConfigError> {
        self.shapes
            .iter()
            .map(|s| {
                let shape = match FormationShape::builtin(s) {
                    Ok(shape) => shape,
                    Err(_) => FormationShape::load(Path::new(s))?,
                };
                shape.check_separation(self.d_safe)?;
                Ok(shape)
            })
            .collect()
    }
}

fn default_dt() -> f64 {
    0.001
}

fn default_rtf() -> RealtimeFactor {
    RealtimeFactor::Bounded(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_dt")]
    pub dt_physics: f64,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rtf")]
    pub realtime_factor: RealtimeFactor,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub vehicles: Vec<VehicleConfig>,
    #[serde(default)]
    pub world: WorldConfig,
    #[serde(default)]
    pub magnetic_field: MagneticFieldConfig,
    #[serde(default)]
    pub formation: Option<FormationConfig>,
    #[serde(default)]
    pub log_dir: Option<PathBuf>,
    #[serde(default)]
    pub serve: Option<u16>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let WorldConfig::File { path: p } = &mut cfg.world {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(f) = &mut cfg.formation {
            for s in &mut f.shapes {
                if FormationShape::builtin(s).is_err() && Path::new(s).is_relative() {
                    *s = base.join(&*s).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that can be checked without touching the file
    /// system and returns the subsystem decimations.
    pub fn validate(&self) -> Result<Decimations, ConfigError> {
        if !(self.dt_physics.is_finite() && self.dt_physics > 0.0) {
            return Err(ConfigError::InvalidStep);
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(ConfigError::Invalid("gravity must be non-negative".into()));
        }
        if !self.realtime_factor.is_valid() {
            return Err(ConfigError::RealtimeFactor);
        }
        let dec = self.rates.decimations(self.dt_physics)?;
        if self.vehicles.is_empty() {
            return Err(ConfigError::NoVehicles);
        }
        let mut ids = BTreeSet::new();
        for v in &self.vehicles {
            if !ids.insert(v.id) {
                return Err(ConfigError::DuplicateId(v.id));
            }
            v.airframe
                .build(self.gravity)
                .map_err(|source| ConfigError::Airframe { id: v.id, source })?;
            if !v.gains.is_valid() {
                return Err(ConfigError::Gains { id: v.id });
            }
            if let Some(s) = &v.sensors {
                s.validate().map_err(|source| ConfigError::Sensors { id: v.id, source })?;
            }
            if let Some(c) = &v.camera {
                c.intrinsics
                    .validate()
                    .map_err(|source| ConfigError::Camera { id: v.id, source })?;
            }
        }
        if let Some(f) = &self.formation {
            if f.shapes.is_empty() {
                return Err(ConfigError::Invalid("formation needs at least one shape".into()));
            }
            if !f.law.is_valid() {
                return Err(ConfigError::Invalid("formation law gains must be positive".into()));
            }
            if let Some(d) = f.dwell {
                if !(d > 0.0) {
                    return Err(ConfigError::Invalid("formation dwell must be positive".into()));
                }
            }
            let leaders = self.vehicles.iter().filter(|v| v.role == Role::Leader).count();
            if leaders != 1 {
                return Err(ConfigError::LeaderCount(leaders));
            }
        }
        Ok(dec)
    }

    /// One noiseless vehicle hovering at `altitude` with unbounded pacing.
    pub fn hover(altitude: f64) -> Self {
        let mut v = VehicleConfig::hovering(0, Vec3::new(0.0, 0.0, altitude));
        v.sensors = Some(SensorSuiteSpec::noiseless());
        Self {
            dt_physics: default_dt(),
            rates: Rates::default(),
            seed: 0,
            realtime_factor: RealtimeFactor::Unbounded,
            gravity: STANDARD_GRAVITY,
            vehicles: vec![v],
            world: WorldConfig::Empty,
            magnetic_field: MagneticFieldConfig::default(),
            formation: None,
            log_dir: None,
            serve: None,
        }
    }

    /// One leader hovering at 5 m and eight followers hovering on a grid
    /// 3 m below it, cycling through `shapes` every `dwell` seconds.
    pub fn formation_scenario(shapes: &[&str], dwell: Option<f64>, seed: u64) -> Self {
        let leader_p = Vec3::new(0.0, 0.0, 5.0);
        let mut vehicles = vec![VehicleConfig::hovering(0, leader_p)];
        for (i, p) in crate::formation::grid_positions(&leader_p, 8, 2.0).into_iter().enumerate() {
            let mut v = VehicleConfig::hovering(i as u32 + 1, p);
            v.role = Role::Follower;
            vehicles.push(v);
        }
        Self {
            seed,
            realtime_factor: RealtimeFactor::Unbounded,
            vehicles,
            formation: Some(FormationConfig {
                shapes: shapes.iter().map(|s| s.to_string()).collect(),
                dwell,
                law: FollowerLaw::default(),
                d_safe: DEFAULT_D_SAFE,
                link_delay_ticks: 0,
                policy: AssignmentPolicy::Identity,
                leader_waypoints: Vec::new(),
                settle_window: default_settle_window(),
                error_threshold: default_error_threshold(),
            }),
            ..Self::hover(5.0)
        }
    }
}
