//! Orchestration: configuration, the lockstep engine, commands, logs and
//! the pause/step session used by the network service.

mod command;
mod config;
mod engine;
mod logs;
mod session;

pub use command::{
    parse_command, Command, CommandError, FormationView, OutboundFrame, StateFrame, UavState, VelocityFrame, PROTO_VERSION,
};
pub use config::{
    CameraConfig, ConfigError, Decimations, Facing, FormationConfig, MagneticFieldConfig, Rates, Role, SimConfig,
    VehicleConfig, Waypoint, WorldConfig,
};
pub use engine::{RunReport, SimError, Simulation, Vehicle, VehicleSummary};
pub use logs::{read_transcript, LogBundle, TranscriptEntry};
pub use session::Session;
