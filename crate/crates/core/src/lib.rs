//! Deterministic lockstep simulator for multirotor swarms.
//!
//! Physics runs at a fixed step; rotors, sensors, the stereo camera and the
//! flight controller are evaluated on integer decimations of that step, so a
//! run is reproducible bit for bit from its configuration, seed and command
//! transcript.

pub mod camera;
pub mod clock;
pub mod control;
pub mod formation;
pub mod geometry;
pub mod rigid_body;
pub mod rng;
pub mod rotor;
pub mod sensors;
pub mod sim;
pub mod traj_eval;
pub mod vehicle;

pub use geometry::{Pose, UnitQuat, Vec3};
