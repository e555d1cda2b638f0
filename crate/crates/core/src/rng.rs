//! Seeded random streams.
//!
//! Every stochastic subsystem draws from its own ChaCha20 stream. The key is
//! the 64-bit master seed in little-endian order followed by 24 zero bytes,
//! and the 64-bit stream id selects the ChaCha nonce. Stream ids are
//! `vehicle_id * 64 + sensor_index` (see [`SensorSlot`]), so adding or
//! removing a sensor never changes the draws of another. Gaussian variates
//! use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Per-vehicle slot of each random consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SensorSlot {
    Accel = 0,
    Gyro = 1,
    Mag = 2,
    Baro = 3,
    GpsPos = 4,
    GpsVel = 5,
    Camera = 6,
}

pub const SLOTS_PER_VEHICLE: u64 = 64;

pub fn stream_id(vehicle_id: u32, slot: SensorSlot) -> u64 {
    vehicle_id as u64 * SLOTS_PER_VEHICLE + slot as u64
}

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn for_sensor(master_seed: u64, vehicle_id: u32, slot: SensorSlot) -> Self {
        Self::new(master_seed, stream_id(vehicle_id, slot))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, sigma: f64) -> f64 {
        mean + sigma * self.standard_normal()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }
}
