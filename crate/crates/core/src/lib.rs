//! Cycle-accurate emulator of a switched-capacitor neuromorphic array:
//! 128 presynaptic inputs with short-term plasticity, a 128 × 64 synapse
//! matrix and 64 leaky integrate-and-fire neurons, driven through a packet
//! protocol, plus the harness used to characterize it.

pub mod engine;
pub mod harness;
pub mod error;
pub mod neuron;
pub mod plasticity;
pub mod presynapse;
pub mod protocol;
pub mod sc;

pub use engine::{Engine, EngineConfig, TestOutput};
pub use error::{Error, Result};
pub use sc::Analog;
