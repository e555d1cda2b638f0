//! Commands accepted by a running simulation and the JSON wire protocol
//! that carries them alongside telemetry.

use crate::clock::RealtimeFactor;
use crate::geometry::{quat_to_wxyz, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Protocol version carried in every outbound frame.
pub const PROTO_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityFrame {
    /// ENU world axes.
    #[default]
    World,
    /// Heading-aligned axes: x forward, y left, z up.
    Body,
}

/// Inbound command payload. Serialized with a `"type"` tag, e.g.
/// `{"type":"velocity","id":0,"v":[0,1,0],"yaw_rate":0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Velocity {
        id: u32,
        v: Vec3,
        #[serde(default)]
        yaw_rate: f64,
        #[serde(default)]
        frame: VelocityFrame,
    },
    /// Position hold at `p` with heading `yaw`.
    Hold {
        id: u32,
        p: Vec3,
        #[serde(default)]
        yaw: f64,
    },
    SetShape {
        name: String,
    },
    Pause,
    Resume,
    Step {
        n: u64,
    },
    SetRtf {
        factor: RealtimeFactor,
    },
    Takeoff {
        id: u32,
        #[serde(default = "default_takeoff_altitude")]
        altitude: f64,
    },
    Land {
        id: u32,
    },
}

fn default_takeoff_altitude() -> f64 {
    2.0
}

impl Command {
    /// Whether the command changes simulated state (as opposed to pacing).
    pub fn affects_state(&self) -> bool {
        !matches!(self, Command::Pause | Command::Resume | Command::Step { .. } | Command::SetRtf { .. })
    }

    /// Vehicle the command addresses, if any.
    pub fn target_id(&self) -> Option<u32> {
        match self {
            Command::Velocity { id, .. } | Command::Hold { id, .. } | Command::Takeoff { id, .. } | Command::Land { id } => {
                Some(*id)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CommandError {
    #[error("malformed command: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    ProtocolVersion(u64),
    #[error("unknown vehicle id {0}")]
    UnknownVehicle(u32),
    #[error("vehicle {0} is a formation follower")]
    FollowerControlled(u32),
    #[error("no formation configured")]
    NoFormation,
    #[error("unknown shape {0:?}")]
    UnknownShape(String),
    #[error("shape {name:?} has {got} offsets, formation has {expected} followers")]
    ShapeSize { name: String, got: usize, expected: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Parses one inbound text frame. An optional `"proto"` field must equal
/// the supported version.
pub fn parse_command(text: &str) -> Result<Command, CommandError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| CommandError::Malformed(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CommandError::Malformed("expected a JSON object".into()))?;
    if let Some(p) = obj.remove("proto") {
        match p.as_u64() {
            Some(v) if v == PROTO_VERSION as u64 => {}
            Some(v) => return Err(CommandError::ProtocolVersion(v)),
            None => return Err(CommandError::Malformed("proto must be an integer".into())),
        }
    }
    let cmd: Command = serde_json::from_value(value).map_err(|e| CommandError::Malformed(e.to_string()))?;
    match &cmd {
        Command::Velocity { v, yaw_rate, .. } if !(v.iter().all(|x| x.is_finite()) && yaw_rate.is_finite()) => {
            Err(CommandError::InvalidArgument("velocity must be finite".into()))
        }
        Command::Hold { p, yaw, .. } if !(p.iter().all(|x| x.is_finite()) && yaw.is_finite()) => {
            Err(CommandError::InvalidArgument("hold target must be finite".into()))
        }
        Command::SetRtf { factor } if !factor.is_valid() => {
            Err(CommandError::InvalidArgument("realtime factor must be positive".into()))
        }
        Command::Takeoff { altitude, .. } if !(altitude.is_finite() && *altitude > 0.0) => {
            Err(CommandError::InvalidArgument("take-off altitude must be positive".into()))
        }
        _ => Ok(cmd),
    }
}

/// One vehicle in a state frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub id: u32,
    pub p: [f64; 3],
    pub v: [f64; 3],
    /// Attitude, scalar first.
    pub q: [f64; 4],
    pub role: String,
}

impl UavState {
    pub fn new(id: u32, p: &Vec3, v: &Vec3, q: &crate::geometry::UnitQuat, role: &str) -> Self {
        Self {
            id,
            p: [p.x, p.y, p.z],
            v: [v.x, v.y, v.z],
            q: quat_to_wxyz(q),
            role: role.to_string(),
        }
    }
}

/// Active formation, for display overlays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationView {
    pub shape: String,
    /// Follower id and its leader-relative target offset.
    pub targets: Vec<(u32, [f64; 3])>,
}

/// Outbound telemetry snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub t: f64,
    pub tick: u64,
    pub paused: bool,
    pub uavs: Vec<UavState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formation: Option<FormationView>,
}

/// Everything the server sends, tagged by `"type"` and stamped with
/// `"proto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutboundFrame {
    State {
        proto: u32,
        #[serde(flatten)]
        frame: StateFrame,
    },
    Error {
        proto: u32,
        msg: String,
    },
}

impl OutboundFrame {
    pub fn state(frame: StateFrame) -> Self {
        OutboundFrame::State {
            proto: PROTO_VERSION,
            frame,
        }
    }

    pub fn error(msg: impl Into<String>) -> Self {
        OutboundFrame::Error {
            proto: PROTO_VERSION,
            msg: msg.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }
}
