//! 6-DoF rigid-body state and fixed-step integration of the Newton-Euler
//! equations, with an optional quadratic fuselage drag.

use crate::geometry::{quat_integrate, rotate, UnitQuat, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, PartialEq)]
pub enum BodyError {
    #[error("mass must be positive and finite, got {0}")]
    InvalidMass(f64),
    #[error("inertia matrix must be symmetric")]
    AsymmetricInertia,
    #[error("inertia matrix is not positive definite")]
    SingularInertia,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    /// Position, world frame (m).
    pub p: Vec3,
    /// Velocity, world frame (m/s).
    pub v: Vec3,
    /// Body-to-world attitude.
    pub q: UnitQuat,
    /// Angular velocity, body frame (rad/s).
    pub omega: Vec3,
}

impl RigidBodyState {
    pub fn at_rest(p: Vec3, q: UnitQuat) -> Self {
        Self {
            p,
            v: Vec3::zeros(),
            q,
            omega: Vec3::zeros(),
        }
    }

    /// Velocity expressed in the body frame.
    pub fn body_velocity(&self) -> Vec3 {
        self.q.inverse_transform_vector(&self.v)
    }
}

/// Mass and body-frame inertia; the inverse is cached at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassProperties {
    mass: f64,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
}

impl MassProperties {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self, BodyError> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(BodyError::InvalidMass(mass));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * inertia.abs().max() {
            return Err(BodyError::AsymmetricInertia);
        }
        let chol = inertia.cholesky().ok_or(BodyError::SingularInertia)?;
        Ok(Self {
            mass,
            inertia,
            inertia_inv: chol.inverse(),
        })
    }

    pub fn diagonal(mass: f64, ixx: f64, iyy: f64, izz: f64) -> Result<Self, BodyError> {
        Self::new(mass, Matrix3::from_diagonal(&Vec3::new(ixx, iyy, izz)))
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Matrix3<f64> {
        &self.inertia_inv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragModel {
    pub enabled: bool,
    pub cd_body: f64,
    /// Reference area (m^2).
    pub area: f64,
    /// Air density (kg/m^3).
    #[serde(default = "default_air_density")]
    pub air_density: f64,
}

fn default_air_density() -> f64 {
    1.225
}

impl Default for DragModel {
    fn default() -> Self {
        Self {
            enabled: false,
            cd_body: 1.0,
            area: 0.05,
            air_density: default_air_density(),
        }
    }
}

impl DragModel {
    /// Drag force in the world frame for world velocity `v` (still air).
    pub fn force(&self, v: &Vec3) -> Vec3 {
        if !self.enabled {
            return Vec3::zeros();
        }
        v * (-0.5 * self.air_density * self.cd_body * self.area * v.norm())
    }
}

/// Net force (world frame) and moment (body frame) on the CoG.
///
/// Gravity exerts no moment about the CoG, so the rotor moment passes
/// through unchanged.
pub fn net_wrench(
    s: &RigidBodyState,
    f_rotor_body: &Vec3,
    m_rotor_body: &Vec3,
    mp: &MassProperties,
    drag: &DragModel,
    gravity: f64,
) -> (Vec3, Vec3) {
    let f_world = rotate(&s.q, f_rotor_body) + Vec3::new(0.0, 0.0, -mp.mass * gravity) + drag.force(&s.v);
    (f_world, *m_rotor_body)
}

/// Angular acceleration from Euler's equation `J w_dot + w x (J w) = M`.
pub fn angular_acceleration(omega: &Vec3, m_body: &Vec3, mp: &MassProperties) -> Vec3 {
    let h = mp.inertia * omega;
    mp.inertia_inv * (m_body - omega.cross(&h))
}

/// One semi-implicit Euler step: velocities first, then positions and
/// attitude from the updated velocities.
pub fn step(s: &RigidBodyState, f_world: &Vec3, m_body: &Vec3, mp: &MassProperties, dt: f64) -> RigidBodyState {
    debug_assert!(dt > 0.0);
    let a = f_world / mp.mass;
    let v = s.v + a * dt;
    let p = s.p + v * dt;
    let omega = s.omega + angular_acceleration(&s.omega, m_body, mp) * dt;
    let q = quat_integrate(&s.q, &omega, dt);
    RigidBodyState { p, v, q, omega }
}

/// Clamps a body that has sunk below the ground plane. Returns true if the
/// body is resting on the ground after the call.
pub fn ground_clamp(s: &mut RigidBodyState) -> bool {
    if s.p.z < 0.0 && s.v.z < 0.0 {
        s.p.z = 0.0;
        s.v = Vec3::zeros();
        s.omega = Vec3::zeros();
        true
    } else {
        s.p.z <= 0.0 && s.v.z <= 0.0
    }
}
