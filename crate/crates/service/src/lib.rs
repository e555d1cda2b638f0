//! Network service and command-line front end for the swarm simulator.

pub mod cli;
pub mod server;
