//! Noise statistics of the sensor model: white-noise spread, random-walk
//! bias growth and the stationary Gauss-Markov variance.
//!
//! cargo run -p swarmsim --example sensor_noise

use swarmsim::rng::RngStream;
use swarmsim::sensors::{sample, AxisNoiseSpec, BiasState};

fn stddev(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn main() {
    let dt = 0.004;

    let white = AxisNoiseSpec {
        noise_density: 0.01,
        ..AxisNoiseSpec::NOISELESS
    };
    let mut rng = RngStream::new(0, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| sample(0.0, BiasState(0.0), &white, dt, &mut rng).0).collect();
    println!("white noise: density {} over dt {dt}", white.noise_density);
    println!("  stddev {:.4}, expected {:.4}", stddev(&xs), white.noise_density / dt.sqrt());

    let walk = AxisNoiseSpec {
        random_walk: 0.02,
        ..AxisNoiseSpec::NOISELESS
    };
    println!("\nrandom-walk bias, 200 trials:");
    for n in [100usize, 1000, 5000] {
        let finals: Vec<f64> = (0..200)
            .map(|trial| {
                let mut rng = RngStream::new(1, trial);
                (0..n).fold(BiasState(0.0), |b, _| sample(0.0, b, &walk, dt, &mut rng).1).0
            })
            .collect();
        let var = finals.iter().map(|b| b * b).sum::<f64>() / finals.len() as f64;
        println!("  N = {n:>5}: variance {var:.3e}, expected {:.3e}", walk.random_walk.powi(2) * dt * n as f64);
    }

    let gm = AxisNoiseSpec {
        random_walk: 0.02,
        bias_corr_time: Some(1.0),
        ..AxisNoiseSpec::NOISELESS
    };
    let phi = (-dt / 1.0f64).exp();
    let mut rng = RngStream::new(2, 0);
    let mut b = BiasState(0.0);
    let mut tail = Vec::new();
    for k in 0..2_000_000 {
        b = sample(0.0, b, &gm, dt, &mut rng).1;
        if k > 10_000 {
            tail.push(b.0);
        }
    }
    println!("\nGauss-Markov bias, tau = 1 s:");
    println!(
        "  stationary stddev {:.4}, expected {:.4}",
        stddev(&tail),
        (gm.random_walk.powi(2) * dt / (1.0 - phi * phi)).sqrt()
    );
}
