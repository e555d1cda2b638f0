//! Airframe description: mass properties, rotor layout and motor response.

use crate::geometry::Vec3;
use crate::rigid_body::{BodyError, DragModel, MassProperties, STANDARD_GRAVITY};
use crate::rotor::{derive_coeffs, quad_x_layout, AeroError, BladeGeometry, RotorDef, Spin};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AirframeError {
    #[error(transparent)]
    Aero(#[from] AeroError),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error("invalid airframe: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorPlacement {
    pub r: Vec3,
    pub spin: Spin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RotorLayout {
    QuadX { arm_length: f64 },
    Custom { rotors: Vec<RotorPlacement> },
}

/// Serializable airframe description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirframeSpec {
    pub mass: f64,
    /// Body-frame inertia, row-major (kg m^2).
    pub inertia: [[f64; 3]; 3],
    pub layout: RotorLayout,
    pub blade: BladeGeometry,
    /// Maximum rotor speed (rad/s).
    pub omega_max: f64,
    /// Motor time constant (s).
    pub motor_tau: f64,
    #[serde(default)]
    pub drag: DragModel,
}

impl Default for AirframeSpec {
    /// 1.5 kg quad-X with 25 cm arms and 10 inch propellers.
    fn default() -> Self {
        Self {
            mass: 1.5,
            inertia: [[0.029125, 0.0, 0.0], [0.0, 0.029125, 0.0], [0.0, 0.0, 0.055225]],
            layout: RotorLayout::QuadX { arm_length: 0.25 },
            blade: BladeGeometry::default(),
            omega_max: 1100.0,
            motor_tau: 0.02,
            drag: DragModel::default(),
        }
    }
}

impl AirframeSpec {
    pub fn build(&self, gravity: f64) -> Result<VehicleParams, AirframeError> {
        let derived = derive_coeffs(&self.blade)?;
        if !(self.omega_max.is_finite() && self.omega_max > 0.0) {
            return Err(AirframeError::Invalid("omega_max must be positive"));
        }
        if !(self.motor_tau.is_finite() && self.motor_tau >= 0.0) {
            return Err(AirframeError::Invalid("motor_tau must be non-negative"));
        }
        if !(self.drag.cd_body >= 0.0 && self.drag.area >= 0.0) {
            return Err(AirframeError::Invalid("drag coefficients must be non-negative"));
        }
        let rotors = match &self.layout {
            RotorLayout::QuadX { arm_length } => {
                if !(*arm_length > 0.0) {
                    return Err(AirframeError::Invalid("arm_length must be positive"));
                }
                quad_x_layout(*arm_length, derived.coeffs, self.omega_max)
            }
            RotorLayout::Custom { rotors } => rotors
                .iter()
                .map(|p| RotorDef {
                    r: p.r,
                    spin: p.spin,
                    coeffs: derived.coeffs,
                    omega_max: self.omega_max,
                })
                .collect(),
        };
        if rotors.is_empty() {
            return Err(AirframeError::Invalid("at least one rotor required"));
        }
        let j = Matrix3::from_fn(|r, c| self.inertia[r][c]);
        Ok(VehicleParams {
            mass_props: MassProperties::new(self.mass, j)?,
            rotors,
            motor_tau: self.motor_tau,
            drag: self.drag,
            gravity,
        })
    }
}

/// Validated physical parameters of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass_props: MassProperties,
    pub rotors: Vec<RotorDef>,
    pub motor_tau: f64,
    pub drag: DragModel,
    pub gravity: f64,
}

impl VehicleParams {
    pub fn default_quad() -> Self {
        AirframeSpec::default()
            .build(STANDARD_GRAVITY)
            .expect("default airframe is valid")
    }

    pub fn mass(&self) -> f64 {
        self.mass_props.mass()
    }

    /// Weight (N).
    pub fn weight(&self) -> f64 {
        self.mass() * self.gravity
    }

    /// Equal rotor speed at which the summed thrust carries the weight.
    pub fn hover_omega(&self) -> f64 {
        let ct_sum: f64 = self.rotors.iter().map(|r| r.coeffs.c_t).sum();
        (self.weight() / ct_sum).sqrt()
    }
}
