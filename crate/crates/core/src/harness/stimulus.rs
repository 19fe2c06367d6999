//! Spike-train generators. Times are matrix-cycle indices at biological
//! realtime; the clock divider does not affect them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sc::BIO_CYCLE_MS;

/// Highest representable rate: one spike per cycle.
pub const MAX_RATE_HZ: f64 = 1000.0 / BIO_CYCLE_MS;

fn period_cycles(rate_hz: f64) -> Result<f64> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::domain(format!("spike rate must be positive, got {rate_hz}")));
    }
    let period = 1000.0 / rate_hz / BIO_CYCLE_MS;
    if period < 1.0 {
        return Err(Error::domain(format!(
            "{rate_hz} Hz exceeds one spike per cycle ({MAX_RATE_HZ:.1} Hz)"
        )));
    }
    Ok(period)
}

/// `count` spikes starting at `start`, spaced by the rate's period rounded
/// to whole cycles.
pub fn gen_regular_train(rate_hz: f64, count: usize, start: u64) -> Result<Vec<u64>> {
    let p = period_cycles(rate_hz)?.round() as u64;
    Ok((0..count as u64).map(|i| start + i * p).collect())
}

/// Regular train over `[0, duration)` that keeps the exact mean rate: spike
/// `i` falls on cycle `floor((i + phase)·period)`, so intervals alternate
/// between the two neighbouring whole-cycle periods. `phase` is in `[0, 1)`.
pub fn gen_rate_train(rate_hz: f64, duration: u64, phase: f64) -> Result<Vec<u64>> {
    if rate_hz == 0.0 {
        return Ok(Vec::new());
    }
    if !(0.0..1.0).contains(&phase) {
        return Err(Error::domain(format!("train phase {phase} outside [0, 1)")));
    }
    let p = period_cycles(rate_hz)?;
    Ok((0..)
        .map(|i| ((i as f64 + phase) * p).floor() as u64)
        .take_while(|&t| t < duration)
        .collect())
}

/// Bernoulli approximation of a Poisson train, one draw per cycle.
pub fn gen_poisson_train(rate_hz: f64, duration: u64, seed: u64) -> Result<Vec<u64>> {
    if !(rate_hz >= 0.0 && rate_hz.is_finite()) {
        return Err(Error::domain(format!("spike rate must be non-negative, got {rate_hz}")));
    }
    if rate_hz == 0.0 {
        return Ok(Vec::new());
    }
    let p = rate_hz * BIO_CYCLE_MS / 1000.0;
    if p > 1.0 {
        return Err(Error::domain(format!("{rate_hz} Hz exceeds one spike per cycle")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..duration).filter(|_| rng.gen::<f64>() < p).collect())
}
