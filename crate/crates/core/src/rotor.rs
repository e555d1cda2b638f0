//! Per-rotor aerodynamic wrench and coefficient derivation from blade geometry.
//!
//! Each rotor produces a thrust `T = w^2 C_T z_b`, an in-plane H-force
//! `H = -w C_D v_perp`, a rolling moment `M_R = -zeta w C_R v_perp` and a
//! blade drag moment `M_D = -zeta C_M T`, where `v_perp` is the body velocity
//! projected onto the rotor plane and `zeta` the spin direction.

use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Floor applied to a coefficient that the geometry drives to zero or below.
pub const DEFAULT_COEFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AeroError {
    #[error("invalid blade geometry: {0}")]
    InvalidGeometry(String),
    #[error("rotor speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("expected {expected} rotor speeds, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Blade geometry and static coefficients of one rotor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BladeGeometry {
    /// Air density (kg/m^3).
    pub rho: f64,
    /// Static thrust coefficient.
    pub ct0: f64,
    /// Static drag coefficient.
    pub cd0: f64,
    /// Static moment coefficient.
    pub cm0: f64,
    /// Blade-root pitch (rad).
    pub theta0: f64,
    /// Blade twist (rad).
    pub theta1: f64,
    /// Lift-curve slope of the blade airfoil (1/rad).
    pub k_lift: f64,
    /// Rotor diameter (m).
    pub d: f64,
    pub n_blades: u32,
    /// Mean chord (m).
    pub c_chord: f64,
}

impl Default for BladeGeometry {
    /// A 10 inch two-blade propeller, sized for a 1.5 kg quadrotor.
    fn default() -> Self {
        Self {
            rho: 1.225,
            ct0: 0.1,
            cd0: 0.1,
            cm0: 0.0063,
            theta0: 0.25,
            theta1: -0.08,
            k_lift: 5.7,
            d: 0.254,
            n_blades: 2,
            c_chord: 0.02,
        }
    }
}

impl BladeGeometry {
    pub fn validate(&self) -> Result<(), AeroError> {
        let finite = [
            self.rho,
            self.ct0,
            self.cd0,
            self.cm0,
            self.theta0,
            self.theta1,
            self.k_lift,
            self.d,
            self.c_chord,
        ]
        .iter()
        .all(|x| x.is_finite());
        let bad = |m: &str| Err(AeroError::InvalidGeometry(m.to_string()));
        if !finite {
            return bad("non-finite parameter");
        }
        if self.rho <= 0.0 {
            return bad("rho must be positive");
        }
        if self.d <= 0.0 {
            return bad("diameter must be positive");
        }
        if self.c_chord <= 0.0 {
            return bad("chord must be positive");
        }
        if self.n_blades < 2 {
            return bad("at least two blades required");
        }
        if self.ct0 <= 0.0 {
            return bad("Ct0 must be positive");
        }
        if self.cd0 < 0.0 || self.cm0 < 0.0 || self.k_lift < 0.0 {
            return bad("Cd0, Cm0 and lift slope must be non-negative");
        }
        Ok(())
    }
}

/// Lumped rotor coefficients. All four are strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorCoeffs {
    /// Thrust coefficient (N s^2).
    pub c_t: f64,
    /// H-force coefficient (N s).
    pub c_d: f64,
    /// Rolling-moment coefficient (N m s).
    pub c_r: f64,
    /// Drag-moment to thrust ratio (m).
    pub c_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffName {
    CT,
    CD,
    CR,
    CM,
}

/// A coefficient that came out non-positive and was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateCoefficient {
    pub coeff: CoeffName,
    pub raw: f64,
    pub clamped_to: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedCoeffs {
    pub coeffs: RotorCoeffs,
    pub warnings: Vec<DegenerateCoefficient>,
}

/// Derives the lumped coefficients with [`DEFAULT_COEFF_FLOOR`].
pub fn derive_coeffs(g: &BladeGeometry) -> Result<DerivedCoeffs, AeroError> {
    derive_coeffs_with_floor(g, DEFAULT_COEFF_FLOOR)
}

/// Derives `C_T, C_D, C_R, C_M` from blade geometry.
///
/// A coefficient that evaluates to zero or below (an untwisted flat blade
/// gives `C_R = 0`) is clamped to `floor` and reported as a warning.
pub fn derive_coeffs_with_floor(g: &BladeGeometry, floor: f64) -> Result<DerivedCoeffs, AeroError> {
    g.validate()?;
    let n = g.n_blades as f64;
    let raw = [
        (CoeffName::CT, g.ct0 * g.rho * g.d.powi(4) / (2.0 * PI).powi(2)),
        (CoeffName::CD, g.rho * n * g.c_chord * g.cd0 * g.d * g.d / 16.0),
        (
            CoeffName::CR,
            (g.theta0 / 48.0 + g.theta1 / 64.0) * g.rho * n * g.k_lift * g.c_chord * g.d.powi(3),
        ),
        (CoeffName::CM, g.cm0 / g.ct0 * g.d),
    ];
    let mut warnings = Vec::new();
    let mut vals = [0.0; 4];
    for (slot, (name, value)) in vals.iter_mut().zip(raw) {
        *slot = if value > 0.0 {
            value
        } else {
            log::warn!("degenerate rotor coefficient {name:?} = {value}, clamped to {floor}");
            warnings.push(DegenerateCoefficient {
                coeff: name,
                raw: value,
                clamped_to: floor,
            });
            floor
        };
    }
    Ok(DerivedCoeffs {
        coeffs: RotorCoeffs {
            c_t: vals[0],
            c_d: vals[1],
            c_r: vals[2],
            c_m: vals[3],
        },
        warnings,
    })
}

/// Rotor spin direction seen from above (`+z_b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Ccw,
    Cw,
}

impl Spin {
    /// `+1` for counter-clockwise, `-1` for clockwise.
    pub fn zeta(self) -> f64 {
        match self {
            Spin::Ccw => 1.0,
            Spin::Cw => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorDef {
    /// Hub offset from the CoG in the body frame (m).
    pub r: Vec3,
    pub spin: Spin,
    pub coeffs: RotorCoeffs,
    /// Maximum rotor speed (rad/s).
    pub omega_max: f64,
}

/// Force and moment contributions of one rotor, body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorWrench {
    pub thrust: Vec3,
    pub h_force: Vec3,
    pub rolling_moment: Vec3,
    pub drag_moment: Vec3,
}

/// Body velocity projected onto the rotor plane (rotors are normal to `z_b`).
#[inline]
pub fn in_plane_velocity(v_body: &Vec3) -> Vec3 {
    Vec3::new(v_body.x, v_body.y, 0.0)
}

pub fn rotor_wrench(omega: f64, rotor: &RotorDef, v_body: &Vec3) -> Result<RotorWrench, AeroError> {
    if omega < 0.0 || omega.is_nan() {
        return Err(AeroError::NegativeSpeed(omega));
    }
    let c = &rotor.coeffs;
    let zeta = rotor.spin.zeta();
    let v_perp = in_plane_velocity(v_body);
    let thrust = Vec3::new(0.0, 0.0, omega * omega * c.c_t);
    Ok(RotorWrench {
        thrust,
        h_force: v_perp * (-omega * c.c_d),
        rolling_moment: v_perp * (-zeta * omega * c.c_r),
        drag_moment: thrust * (-zeta * c.c_m),
    })
}

/// Sums the rotor wrenches about the CoG, body frame.
pub fn total_rotor_wrench(
    omegas: &[f64],
    rotors: &[RotorDef],
    v_body: &Vec3,
) -> Result<(Vec3, Vec3), AeroError> {
    if omegas.len() != rotors.len() || rotors.is_empty() {
        return Err(AeroError::LengthMismatch {
            expected: rotors.len(),
            got: omegas.len(),
        });
    }
    let mut force = Vec3::zeros();
    let mut moment = Vec3::zeros();
    for (&omega, rotor) in omegas.iter().zip(rotors) {
        let w = rotor_wrench(omega, rotor, v_body)?;
        let f = w.thrust + w.h_force;
        force += f;
        moment += w.rolling_moment + w.drag_moment + rotor.r.cross(&f);
    }
    Ok((force, moment))
}

/// First-order motor response `tau * dw/dt = w_cmd - w`, discretized exactly
/// for a command held over `dt`.
pub fn motor_lag_step(omega: f64, omega_cmd: f64, tau: f64, dt: f64) -> f64 {
    if tau <= 0.0 {
        return omega_cmd;
    }
    let alpha = 1.0 - (-dt / tau).exp();
    omega + (omega_cmd - omega) * alpha
}

/// Standard quad-X layout: front-right and rear-left spin CCW.
///
/// Rotor order is front-right, rear-left, front-left, rear-right.
pub fn quad_x_layout(arm_length: f64, coeffs: RotorCoeffs, omega_max: f64) -> Vec<RotorDef> {
    let a = arm_length / std::f64::consts::SQRT_2;
    [
        (Vec3::new(a, -a, 0.0), Spin::Ccw),
        (Vec3::new(-a, a, 0.0), Spin::Ccw),
        (Vec3::new(a, a, 0.0), Spin::Cw),
        (Vec3::new(-a, -a, 0.0), Spin::Cw),
    ]
    .into_iter()
    .map(|(r, spin)| RotorDef {
        r,
        spin,
        coeffs,
        omega_max,
    })
    .collect()
}
