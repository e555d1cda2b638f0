//! Bias-plus-noise measurement models for the IMU, magnetometer, barometer
//! and GPS.
//!
//! Every axis follows `measured = truth + b + n`, where `n` is white noise and
//! `b` a bias driven by its own noise. The bias is a first-order Gauss-Markov
//! process with correlation time `tau`; with `tau = inf` it is the pure random
//! walk `b_dot = n_b`.
//!
//! Discretization over a step `dt` (the draw order is fixed: white noise
//! first, then the bias increment):
//!
//! ```text
//! n  = noise_density / sqrt(dt) * w1
//! b' = exp(-dt / tau) * b + random_walk * sqrt(dt) * w2
//! measured = truth + b' + n
//! ```

use crate::geometry::{rotate_inv, Vec3};
use crate::rigid_body::RigidBodyState;
use crate::rng::{RngStream, SensorSlot};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error("noise parameters must be non-negative and finite")]
    NegativeParameter,
    #[error("bias correlation time must be positive (omit it for a pure random walk)")]
    NonPositiveCorrelationTime,
}

/// Noise parameters of one sensor axis, in the sensor's own units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisNoiseSpec {
    /// White-noise density (unit/sqrt(Hz)).
    #[serde(default)]
    pub noise_density: f64,
    /// Bias driving-noise density (unit/s/sqrt(Hz)).
    #[serde(default)]
    pub random_walk: f64,
    /// Bias correlation time (s). `None` means infinite (pure random walk).
    #[serde(default)]
    pub bias_corr_time: Option<f64>,
    /// Standard deviation of the bias at power-on.
    #[serde(default)]
    pub turn_on_bias_sigma: f64,
}

impl AxisNoiseSpec {
    pub const NOISELESS: AxisNoiseSpec = AxisNoiseSpec {
        noise_density: 0.0,
        random_walk: 0.0,
        bias_corr_time: None,
        turn_on_bias_sigma: 0.0,
    };

    pub fn validate(&self) -> Result<(), SensorError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.noise_density) && ok(self.random_walk) && ok(self.turn_on_bias_sigma)) {
            return Err(SensorError::NegativeParameter);
        }
        match self.bias_corr_time {
            Some(tau) if !(tau > 0.0) => Err(SensorError::NonPositiveCorrelationTime),
            _ => Ok(()),
        }
    }

    /// Bias decay factor over one step.
    fn decay(&self, dt: f64) -> f64 {
        match self.bias_corr_time {
            Some(tau) if tau.is_finite() => (-dt / tau).exp(),
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BiasState(pub f64);

pub fn init_bias(spec: &AxisNoiseSpec, rng: &mut RngStream) -> BiasState {
    BiasState(spec.turn_on_bias_sigma * rng.standard_normal())
}

/// Draws one measurement and the updated bias.
pub fn sample(truth: f64, bias: BiasState, spec: &AxisNoiseSpec, dt: f64, rng: &mut RngStream) -> (f64, BiasState) {
    debug_assert!(dt > 0.0);
    let w1 = rng.standard_normal();
    let w2 = rng.standard_normal();
    let n = spec.noise_density / dt.sqrt() * w1;
    let b = spec.decay(dt) * bias.0 + spec.random_walk * dt.sqrt() * w2;
    (truth + b + n, BiasState(b))
}

/// Specific force and angular rate in the body frame.
///
/// An accelerometer at rest reads `+g` along the world up direction.
pub fn imu_truth(s: &RigidBodyState, a_world: &Vec3, gravity: f64) -> (Vec3, Vec3) {
    let specific = a_world - Vec3::new(0.0, 0.0, -gravity);
    (rotate_inv(&s.q, &specific), s.omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxTruth {
    pub mag_body: Vec3,
    pub altitude: f64,
    pub gps_pos: Vec3,
    pub gps_vel: Vec3,
}

/// Ground truth for the magnetometer, barometer and GPS.
pub fn mag_baro_gps_truth(s: &RigidBodyState, field_world: &Vec3, p0: &Vec3) -> AuxTruth {
    AuxTruth {
        mag_body: rotate_inv(&s.q, field_world),
        altitude: s.p.z - p0.z,
        gps_pos: s.p,
        gps_vel: s.v,
    }
}

/// Unit magnetic field in ENU for a declination (east of north, rad) and
/// inclination (below horizontal, rad).
pub fn magnetic_field(declination: f64, inclination: f64) -> Vec3 {
    let h = inclination.cos();
    Vec3::new(h * declination.sin(), h * declination.cos(), -inclination.sin())
}

/// A multi-axis sensor: per-axis noise, per-axis bias and one random stream.
#[derive(Debug, Clone)]
pub struct SensorChannel {
    specs: Vec<AxisNoiseSpec>,
    biases: Vec<BiasState>,
    rng: RngStream,
    decimation: u64,
    dt: f64,
}

impl SensorChannel {
    /// Draws the turn-on biases immediately from `rng`.
    pub fn new(specs: Vec<AxisNoiseSpec>, mut rng: RngStream, decimation: u64, dt_physics: f64) -> Self {
        let biases = specs.iter().map(|s| init_bias(s, &mut rng)).collect();
        Self {
            specs,
            biases,
            rng,
            decimation,
            dt: dt_physics * decimation as f64,
        }
    }

    pub fn decimation(&self) -> u64 {
        self.decimation
    }

    /// Sample period (s).
    pub fn period(&self) -> f64 {
        self.dt
    }

    pub fn biases(&self) -> &[BiasState] {
        &self.biases
    }

    pub fn measure(&mut self, truth: &[f64]) -> Vec<f64> {
        debug_assert_eq!(truth.len(), self.specs.len());
        truth
            .iter()
            .zip(self.specs.iter())
            .zip(self.biases.iter_mut())
            .map(|((&x, spec), bias)| {
                let (m, b) = sample(x, *bias, spec, self.dt, &mut self.rng);
                *bias = b;
                m
            })
            .collect()
    }

    pub fn measure3(&mut self, truth: &Vec3) -> Vec3 {
        let m = self.measure(truth.as_slice());
        Vec3::new(m[0], m[1], m[2])
    }
}

/// Noise parameters and rates of a vehicle's full sensor suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSuiteSpec {
    pub accel: AxisNoiseSpec,
    pub gyro: AxisNoiseSpec,
    pub mag: AxisNoiseSpec,
    pub baro: AxisNoiseSpec,
    pub gps_pos: AxisNoiseSpec,
    pub gps_vel: AxisNoiseSpec,
}

impl SensorSuiteSpec {
    pub fn noiseless() -> Self {
        Self {
            accel: AxisNoiseSpec::NOISELESS,
            gyro: AxisNoiseSpec::NOISELESS,
            mag: AxisNoiseSpec::NOISELESS,
            baro: AxisNoiseSpec::NOISELESS,
            gps_pos: AxisNoiseSpec::NOISELESS,
            gps_vel: AxisNoiseSpec::NOISELESS,
        }
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        for s in [&self.accel, &self.gyro, &self.mag, &self.baro, &self.gps_pos, &self.gps_vel] {
            s.validate()?;
        }
        Ok(())
    }
}

impl Default for SensorSuiteSpec {
    /// Consumer-grade MEMS values; chosen for this simulator, not taken from
    /// any particular datasheet.
    fn default() -> Self {
        Self {
            accel: AxisNoiseSpec {
                noise_density: 2.0e-3,
                random_walk: 3.0e-3,
                bias_corr_time: Some(300.0),
                turn_on_bias_sigma: 0.02,
            },
            gyro: AxisNoiseSpec {
                noise_density: 1.8e-4,
                random_walk: 2.0e-5,
                bias_corr_time: Some(1000.0),
                turn_on_bias_sigma: 8.7e-3,
            },
            mag: AxisNoiseSpec {
                noise_density: 4.0e-4,
                random_walk: 6.4e-6,
                bias_corr_time: Some(600.0),
                turn_on_bias_sigma: 0.0,
            },
            baro: AxisNoiseSpec {
                noise_density: 0.1,
                random_walk: 0.01,
                bias_corr_time: None,
                turn_on_bias_sigma: 0.0,
            },
            gps_pos: AxisNoiseSpec {
                noise_density: 0.3,
                random_walk: 0.01,
                bias_corr_time: Some(60.0),
                turn_on_bias_sigma: 0.5,
            },
            gps_vel: AxisNoiseSpec {
                noise_density: 0.05,
                random_walk: 0.0,
                bias_corr_time: None,
                turn_on_bias_sigma: 0.0,
            },
        }
    }
}

/// Decimations (physics steps per sample) of each sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorDecimations {
    pub imu: u64,
    pub mag: u64,
    pub baro: u64,
    pub gps: u64,
}

/// The live sensor channels of one vehicle.
#[derive(Debug, Clone)]
pub struct SensorRig {
    pub accel: SensorChannel,
    pub gyro: SensorChannel,
    pub mag: SensorChannel,
    pub baro: SensorChannel,
    pub gps_pos: SensorChannel,
    pub gps_vel: SensorChannel,
}

impl SensorRig {
    pub fn new(spec: &SensorSuiteSpec, master_seed: u64, vehicle_id: u32, dec: SensorDecimations, dt: f64) -> Self {
        let ch = |axis: &AxisNoiseSpec, n: usize, slot: SensorSlot, d: u64| {
            SensorChannel::new(vec![*axis; n], RngStream::for_sensor(master_seed, vehicle_id, slot), d, dt)
        };
        Self {
            accel: ch(&spec.accel, 3, SensorSlot::Accel, dec.imu),
            gyro: ch(&spec.gyro, 3, SensorSlot::Gyro, dec.imu),
            mag: ch(&spec.mag, 3, SensorSlot::Mag, dec.mag),
            baro: ch(&spec.baro, 1, SensorSlot::Baro, dec.baro),
            gps_pos: ch(&spec.gps_pos, 3, SensorSlot::GpsPos, dec.gps),
            gps_vel: ch(&spec.gps_vel, 3, SensorSlot::GpsVel, dec.gps),
        }
    }
}
