//! Cascaded multirotor flight controller and motor mixer.
//!
//! The cascade runs position (P) -> velocity (PID) -> thrust vector and
//! attitude -> attitude error (P on the quaternion error) -> body rate (PID)
//! -> collective thrust and body moments -> motor speeds. The outer loops run
//! at the controller rate; the rate loop runs every physics step.

use crate::geometry::{wrap_angle, yaw_of, UnitQuat, Vec3};
use crate::rigid_body::RigidBodyState;
use crate::rotor::RotorDef;
use crate::vehicle::VehicleParams;
use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("rotor layout spans rank {rank} of the 4 controllable wrench axes")]
    RankDeficientLayout { rank: usize },
}

/// Flight-mode command for one vehicle. Velocities are world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Setpoint {
    PositionHold { p: Vec3, yaw: f64 },
    VelocityYaw { v: Vec3, yaw_rate: f64 },
    TakeOff { altitude: f64 },
    Land,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: Vec3,
    pub ki: Vec3,
    pub kd: Vec3,
    /// Per-axis clamp on the integrator state.
    pub i_limit: f64,
    /// Per-axis clamp on the loop output.
    pub output_limit: f64,
}

impl PidGains {
    pub fn p(kp: Vec3, output_limit: f64) -> Self {
        Self {
            kp,
            ki: Vec3::zeros(),
            kd: Vec3::zeros(),
            i_limit: 1.0,
            output_limit,
        }
    }

    pub fn is_valid(&self) -> bool {
        let nonneg = |v: &Vec3| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        nonneg(&self.kp) && nonneg(&self.ki) && nonneg(&self.kd) && self.i_limit > 0.0 && self.output_limit > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeGains {
    /// Output limit is the maximum commanded speed (m/s).
    pub position: PidGains,
    /// Output limit is the maximum commanded acceleration per axis (m/s^2).
    pub velocity: PidGains,
    /// Output limit is the maximum commanded body rate (rad/s).
    pub attitude: PidGains,
    /// Output limit is the maximum commanded angular acceleration (rad/s^2).
    pub rate: PidGains,
    /// Maximum tilt of the thrust vector from vertical (rad).
    pub max_tilt: f64,
    /// Take-off climb speed (m/s).
    pub climb_speed: f64,
    /// Landing descent speed (m/s).
    pub descent_speed: f64,
}

impl Default for CascadeGains {
    /// Gains tuned for the default 1.5 kg quad-X.
    fn default() -> Self {
        Self {
            position: PidGains::p(Vec3::new(1.0, 1.0, 1.5), 3.0),
            velocity: PidGains {
                kp: Vec3::new(3.0, 3.0, 4.0),
                ki: Vec3::new(0.3, 0.3, 1.0),
                kd: Vec3::new(0.05, 0.05, 0.0),
                i_limit: 2.0,
                output_limit: 6.0,
            },
            attitude: PidGains::p(Vec3::new(10.0, 10.0, 2.0), 6.0),
            rate: PidGains {
                kp: Vec3::new(30.0, 30.0, 3.0),
                ki: Vec3::new(5.0, 5.0, 0.5),
                kd: Vec3::new(0.2, 0.2, 0.0),
                i_limit: 5.0,
                output_limit: 200.0,
            },
            max_tilt: 35f64.to_radians(),
            climb_speed: 0.5,
            descent_speed: 0.5,
        }
    }
}

impl CascadeGains {
    pub fn is_valid(&self) -> bool {
        [self.position, self.velocity, self.attitude, self.rate]
            .iter()
            .all(PidGains::is_valid)
            && self.max_tilt > 0.0
            && self.max_tilt < std::f64::consts::FRAC_PI_2
            && self.climb_speed > 0.0
            && self.descent_speed > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotorCommand {
    pub omega_cmd: Vec<f64>,
}

/// Output of the outer loops, consumed by the rate loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttitudeTarget {
    /// Collective thrust (N).
    pub thrust: f64,
    /// Body rate setpoint (rad/s).
    pub rate_sp: Vec3,
}

/// All controller memory; the loops are otherwise pure.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControllerState {
    pub armed: bool,
    pub vel_integral: Vec3,
    pub rate_integral: Vec3,
    prev_v: Option<Vec3>,
    prev_omega: Option<Vec3>,
    /// Yaw target maintained while flying on velocity setpoints.
    yaw_sp: Option<f64>,
    /// Horizontal position held during take-off and landing.
    hold_xy: Option<(f64, f64)>,
    pub target: AttitudeTarget,
    /// Whether the last mixer output saturated.
    pub saturated: bool,
    /// Velocity command of the last outer-loop update (world frame).
    pub v_cmd: Vec3,
}

impl ControllerState {
    pub fn armed() -> Self {
        Self {
            armed: true,
            ..Default::default()
        }
    }

    /// Stops the motors and clears loop memory.
    pub fn disarm(&mut self) {
        *self = Self::default();
    }
}

fn clamp_vec(v: Vec3, limit: f64) -> Vec3 {
    v.map(|x| x.clamp(-limit, limit))
}

/// Position and velocity loops plus attitude generation.
///
/// Returns the setpoint to switch to when the current one has completed
/// (take-off reaching its altitude).
pub fn outer_step(
    s: &RigidBodyState,
    sp: &Setpoint,
    gains: &CascadeGains,
    vehicle: &VehicleParams,
    cs: &mut ControllerState,
    dt: f64,
) -> Option<Setpoint> {
    if !cs.armed {
        if let Setpoint::TakeOff { .. } = sp {
            cs.armed = true;
        } else {
            return None;
        }
    }
    let kp_pos = gains.position.kp;
    let yaw_now = yaw_of(&s.q);
    let mut next = None;
    let mut yaw_rate_ff = 0.0;
    let (v_cmd, yaw_target) = match *sp {
        Setpoint::PositionHold { p, yaw } => {
            cs.hold_xy = None;
            cs.yaw_sp = None;
            let v = (p - s.p).component_mul(&kp_pos);
            (limit_norm(v, gains.position.output_limit), yaw)
        }
        Setpoint::VelocityYaw { v, yaw_rate } => {
            cs.hold_xy = None;
            let yaw = wrap_angle(cs.yaw_sp.unwrap_or(yaw_now) + yaw_rate * dt);
            cs.yaw_sp = Some(yaw);
            yaw_rate_ff = yaw_rate;
            (v, yaw)
        }
        Setpoint::TakeOff { altitude } => {
            let (hx, hy) = *cs.hold_xy.get_or_insert((s.p.x, s.p.y));
            let yaw = *cs.yaw_sp.get_or_insert(yaw_now);
            if s.p.z >= altitude - 0.02 {
                next = Some(Setpoint::PositionHold {
                    p: Vec3::new(hx, hy, altitude),
                    yaw,
                });
            }
            let vz = (kp_pos.z * (altitude - s.p.z)).clamp(-gains.climb_speed, gains.climb_speed);
            (Vec3::new(kp_pos.x * (hx - s.p.x), kp_pos.y * (hy - s.p.y), vz), yaw)
        }
        Setpoint::Land => {
            let (hx, hy) = *cs.hold_xy.get_or_insert((s.p.x, s.p.y));
            let yaw = *cs.yaw_sp.get_or_insert(yaw_now);
            (
                Vec3::new(kp_pos.x * (hx - s.p.x), kp_pos.y * (hy - s.p.y), -gains.descent_speed),
                yaw,
            )
        }
    };
    cs.v_cmd = v_cmd;
    cs.target = velocity_to_attitude(s, &v_cmd, yaw_target, yaw_rate_ff, gains, vehicle, cs, dt);
    next
}

fn limit_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

#[allow(clippy::too_many_arguments)]
fn velocity_to_attitude(
    s: &RigidBodyState,
    v_cmd: &Vec3,
    yaw: f64,
    yaw_rate_ff: f64,
    gains: &CascadeGains,
    vehicle: &VehicleParams,
    cs: &mut ControllerState,
    dt: f64,
) -> AttitudeTarget {
    let g = &gains.velocity;
    let err = v_cmd - s.v;
    let d_meas = match cs.prev_v {
        Some(pv) => -(s.v - pv) / dt,
        None => Vec3::zeros(),
    };
    cs.prev_v = Some(s.v);
    let candidate = clamp_vec(cs.vel_integral + err * dt, g.i_limit);
    let a_raw = g.kp.component_mul(&err) + g.ki.component_mul(&candidate) + g.kd.component_mul(&d_meas);
    let a_cmd = clamp_vec(a_raw, g.output_limit);
    let mut saturated = a_cmd != a_raw;

    let m = vehicle.mass();
    let mut f = (a_cmd + Vec3::new(0.0, 0.0, vehicle.gravity)) * m;
    let f_min = 0.1 * vehicle.weight();
    if f.z < f_min {
        f.z = f_min;
        saturated = true;
    }
    let h = (f.x * f.x + f.y * f.y).sqrt();
    let h_max = f.z * gains.max_tilt.tan();
    if h > h_max {
        let k = h_max / h;
        f.x *= k;
        f.y *= k;
        saturated = true;
    }
    if !saturated {
        cs.vel_integral = candidate;
    }

    let z_des = f.normalize();
    let x_c = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let y_des = z_des.cross(&x_c).normalize();
    let x_des = y_des.cross(&z_des);
    let r_des = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x_des, y_des, z_des]));
    let q_des = UnitQuat::from_rotation_matrix(&r_des);

    let body_z = s.q * Vec3::z();
    let t_max: f64 = vehicle.rotors.iter().map(|r| r.coeffs.c_t * r.omega_max * r.omega_max).sum();
    let thrust = f.dot(&body_z).clamp(0.0, t_max);

    let mut q_err = s.q.inverse() * q_des;
    if q_err.w < 0.0 {
        q_err = UnitQuat::new_unchecked(-q_err.into_inner());
    }
    let e = q_err.imag() * 2.0;
    let rate_sp = gains.attitude.kp.component_mul(&e) + Vec3::new(0.0, 0.0, yaw_rate_ff);
    AttitudeTarget {
        thrust,
        rate_sp: clamp_vec(rate_sp, gains.attitude.output_limit),
    }
}

/// Body-rate PID and mixing; runs every physics step.
pub fn rate_step(
    s: &RigidBodyState,
    gains: &CascadeGains,
    vehicle: &VehicleParams,
    mixer: &Mixer,
    cs: &mut ControllerState,
    dt: f64,
) -> MotorCommand {
    if !cs.armed {
        return MotorCommand {
            omega_cmd: vec![0.0; vehicle.rotors.len()],
        };
    }
    let g = &gains.rate;
    let err = cs.target.rate_sp - s.omega;
    let d_meas = match cs.prev_omega {
        Some(pw) => -(s.omega - pw) / dt,
        None => Vec3::zeros(),
    };
    cs.prev_omega = Some(s.omega);
    if !cs.saturated {
        cs.rate_integral = clamp_vec(cs.rate_integral + err * dt, g.i_limit);
    }
    let alpha = clamp_vec(
        g.kp.component_mul(&err) + g.ki.component_mul(&cs.rate_integral) + g.kd.component_mul(&d_meas),
        g.output_limit,
    );
    let j = vehicle.mass_props.inertia();
    let moments = j * alpha + s.omega.cross(&(j * s.omega));
    let (cmd, saturated) = mixer.mix(cs.target.thrust, &moments);
    cs.saturated = saturated;
    cmd
}

/// Full cascade in one call, with outer and rate loops sharing `dt`.
pub fn control_step(
    s: &RigidBodyState,
    sp: &Setpoint,
    gains: &CascadeGains,
    vehicle: &VehicleParams,
    mixer: &Mixer,
    cs: &mut ControllerState,
    dt: f64,
) -> (MotorCommand, Option<Setpoint>) {
    let next = outer_step(s, sp, gains, vehicle, cs, dt);
    (rate_step(s, gains, vehicle, mixer, cs, dt), next)
}

/// Linear allocation from (thrust, roll, pitch, yaw moments) to squared
/// rotor speeds, using the hover-linearized rotor model (thrust and blade
/// drag moment only).
#[derive(Debug, Clone, PartialEq)]
pub struct Mixer {
    /// Maps the wrench `[T, Mx, My, Mz]` to squared rotor speeds.
    allocation_pinv: DMatrix<f64>,
    omega_max: Vec<f64>,
}

impl Mixer {
    pub fn new(layout: &[RotorDef]) -> Result<Self, ControlError> {
        let n = layout.len();
        let effect = DMatrix::from_fn(4, n, |row, col| {
            let r = &layout[col];
            let ct = r.coeffs.c_t;
            match row {
                0 => ct,
                1 => r.r.y * ct,
                2 => -r.r.x * ct,
                _ => -r.spin.zeta() * r.coeffs.c_m * ct,
            }
        });
        let svd = effect.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let tol = smax * 1e-9;
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        if n < 4 || rank < 4 {
            return Err(ControlError::RankDeficientLayout { rank });
        }
        let allocation_pinv = svd.pseudo_inverse(tol).expect("svd computed with u and v");
        Ok(Self {
            allocation_pinv,
            omega_max: layout.iter().map(|r| r.omega_max).collect(),
        })
    }

    /// Squared speeds before saturation.
    pub fn allocate(&self, thrust: f64, moments: &Vec3) -> DVector<f64> {
        let w = Vector4::new(thrust, moments.x, moments.y, moments.z);
        &self.allocation_pinv * DVector::from_column_slice(w.as_slice())
    }

    /// Returns the motor command and whether any rotor saturated.
    ///
    /// When the full wrench is infeasible the yaw moment is scaled back
    /// first; remaining violations are clipped per rotor.
    pub fn mix(&self, thrust: f64, moments: &Vec3) -> (MotorCommand, bool) {
        let mut sq = self.allocate(thrust, moments);
        let feasible = |sq: &DVector<f64>| {
            sq.iter().zip(&self.omega_max).all(|(&w2, &wmax)| (0.0..=wmax * wmax).contains(&w2))
        };
        let mut saturated = false;
        if !feasible(&sq) {
            saturated = true;
            let base = self.allocate(thrust, &Vec3::new(moments.x, moments.y, 0.0));
            let yaw = self.allocate(0.0, &Vec3::new(0.0, 0.0, moments.z));
            let mut scale: f64 = 1.0;
            for ((&b, &y), &wmax) in base.iter().zip(yaw.iter()).zip(&self.omega_max) {
                if y > 0.0 && b + y > wmax * wmax {
                    scale = scale.min(((wmax * wmax - b) / y).max(0.0));
                } else if y < 0.0 && b + y < 0.0 {
                    scale = scale.min((-b / y).max(0.0));
                }
            }
            sq = base + yaw * scale;
        }
        let omega_cmd = sq
            .iter()
            .zip(&self.omega_max)
            .map(|(&w2, &wmax)| w2.max(0.0).sqrt().min(wmax))
            .collect();
        (MotorCommand { omega_cmd }, saturated)
    }
}

/// One-shot allocation for a layout.
pub fn mix(thrust: f64, moments: &Vec3, layout: &[RotorDef]) -> Result<MotorCommand, ControlError> {
    Ok(Mixer::new(layout)?.mix(thrust, moments).0)
}
