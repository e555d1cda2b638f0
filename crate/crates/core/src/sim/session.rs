//! Pause, single-step and pacing state wrapped around a [`Simulation`].

use super::command::{Command, CommandError, StateFrame};
use super::engine::{SimError, Simulation};
use crate::clock::RealtimeFactor;

pub struct Session {
    pub sim: Simulation,
    paused: bool,
    pending_steps: u64,
    rtf: RealtimeFactor,
}

impl Session {
    pub fn new(sim: Simulation) -> Self {
        let rtf = sim.config().realtime_factor;
        Self {
            sim,
            paused: false,
            pending_steps: 0,
            rtf,
        }
    }

    /// Starts paused; ticks only on `Step` or after `Resume`.
    pub fn new_paused(sim: Simulation) -> Self {
        Self {
            paused: true,
            ..Self::new(sim)
        }
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn pending_steps(&self) -> u64 {
        self.pending_steps
    }

    pub fn realtime_factor(&self) -> RealtimeFactor {
        self.rtf
    }

    /// `Step(n)` always leaves the session paused once the `n` ticks have
    /// run; a running session pauses first.
    pub fn handle(&mut self, cmd: Command) -> Result<(), CommandError> {
        match cmd {
            Command::Pause => {
                self.paused = true;
                self.pending_steps = 0;
            }
            Command::Resume => {
                self.paused = false;
                self.pending_steps = 0;
            }
            Command::Step { n } => {
                self.paused = true;
                self.pending_steps += n;
            }
            Command::SetRtf { factor } => self.rtf = factor,
            other => self.sim.apply(other)?,
        }
        Ok(())
    }

    pub fn wants_tick(&self) -> bool {
        !self.paused || self.pending_steps > 0
    }

    /// Runs one tick if the session is running or has steps queued.
    pub fn advance(&mut self) -> Result<bool, SimError> {
        if !self.wants_tick() {
            return Ok(false);
        }
        self.sim.tick()?;
        if self.paused {
            self.pending_steps -= 1;
        }
        Ok(true)
    }

    pub fn snapshot(&self) -> StateFrame {
        self.sim.snapshot(self.paused && self.pending_steps == 0)
    }
}
