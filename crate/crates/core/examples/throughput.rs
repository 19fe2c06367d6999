//! Cycles per second of the bare engine with every synapse active.

use std::time::Instant;

use scnn_core::plasticity::{Sign, SynapseWord};
use scnn_core::{Engine, EngineConfig};

fn main() -> scnn_core::Result<()> {
    let mut engine = Engine::new(EngineConfig::default())?;
    for r in 0..128 {
        for c in 0..64 {
            engine.write_synapse(r, c, SynapseWord::fixed(1, Sign::Excitatory)?)?;
        }
    }
    let cycles = 200_000u64;
    let start = Instant::now();
    for i in 0..cycles {
        engine.latch_inputs((0..127).filter(|r| (i as usize + r) % 7 == 0))?;
        engine.step_cycle();
    }
    let secs = start.elapsed().as_secs_f64();
    println!("{cycles} cycles in {secs:.3} s: {:.0} cycles/s", cycles as f64 / secs);
    Ok(())
}
