//! Frames, rotations and poses shared by every other module.
//!
//! The world frame is ENU (x east, y north, z up) and each vehicle's body
//! frame is FLU (x forward, y left, z up). Gravity therefore points along
//! `-z` in the world frame and rotor thrust acts along `+z` in the body frame.
//!
//! Attitudes are unit quaternions, scalar first, mapping body vectors into the
//! world frame.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Three-vector used for positions, velocities, forces and moments.
pub type Vec3 = Vector3<f64>;

/// Unit quaternion (body to world).
pub type UnitQuat = UnitQuaternion<f64>;

/// Builds a unit quaternion from scalar-first components, normalizing.
pub fn quat_wxyz(w: f64, x: f64, y: f64, z: f64) -> UnitQuat {
    UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
}

/// Scalar-first components `[w, x, y, z]`.
pub fn quat_to_wxyz(q: &UnitQuat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Rotation about world `+z` by `yaw` radians.
pub fn yaw_quat(yaw: f64) -> UnitQuat {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
}

/// Heading of the body x-axis projected on the world xy-plane.
pub fn yaw_of(q: &UnitQuat) -> f64 {
    let fwd = q * Vec3::x();
    fwd.y.atan2(fwd.x)
}

/// Expresses a body-frame vector in the parent frame.
#[inline]
pub fn rotate(q: &UnitQuat, v: &Vec3) -> Vec3 {
    q * v
}

/// Expresses a parent-frame vector in the body frame.
#[inline]
pub fn rotate_inv(q: &UnitQuat, v: &Vec3) -> Vec3 {
    q.inverse_transform_vector(v)
}

/// Advances an attitude by a constant body angular velocity over `dt`.
///
/// Uses the exponential map, so the update is exact for constant rates. The
/// result is renormalized.
pub fn quat_integrate(q: &UnitQuat, omega_body: &Vec3, dt: f64) -> UnitQuat {
    let delta = UnitQuaternion::from_scaled_axis(omega_body * dt);
    let mut out = q * delta;
    out.renormalize();
    out
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Timestamped rigid pose, the sample type of every trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// Sim time in seconds.
    pub t: f64,
    /// Position in the world frame (m).
    pub p: Vec3,
    /// Body-to-world attitude.
    pub q: UnitQuat,
}

impl Pose {
    pub fn new(t: f64, p: Vec3, q: UnitQuat) -> Self {
        Self { t, p, q }
    }

    pub fn identity(t: f64) -> Self {
        Self::new(t, Vec3::zeros(), UnitQuat::identity())
    }

    /// Rigid transform `self^-1 * other`, expressed as (translation, rotation).
    pub fn relative_to(&self, other: &Pose) -> (Vec3, UnitQuat) {
        let q_inv = self.q.inverse();
        (q_inv * (other.p - self.p), q_inv * other.q)
    }
}
