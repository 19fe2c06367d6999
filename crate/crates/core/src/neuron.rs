//! Leaky integrate-and-fire membranes.

use crate::sc::{apply_leak_event, Analog, DacValue, Kappa, LeakSchedule, TickGranularity};

/// Membrane rail; matches the bias DAC range.
pub const V_RAIL: Analog = Analog::from_int(250);

/// Per-group neuron configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NeuronParams {
    pub v_thresh: DacValue,
    pub v_reset: DacValue,
    pub tau_m: LeakSchedule,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams {
            // ~100 mV threshold, reset at the 0 mV rest level (code 63 is -1.97 mV,
            // so reset uses the code nearest 0).
            v_thresh: DacValue::nearest(100.0).unwrap(),
            v_reset: DacValue::nearest(0.0).unwrap(),
            tau_m: LeakSchedule::off(TickGranularity::PerEighthCycle),
        }
    }
}

impl NeuronParams {
    /// Non-fatal configuration problems.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.v_thresh.analog() <= Analog::ZERO {
            w.push(format!(
                "threshold {:.2} mV is not above rest; the neuron fires on any depolarization",
                self.v_thresh.voltage_mv()
            ));
        }
        if self.v_reset.analog() >= self.v_thresh.analog() {
            w.push("reset potential is not below threshold".to_string());
        }
        w
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct NeuronState {
    pub v_mem: Analog,
    pub fired_this_cycle: bool,
}

impl NeuronState {
    /// Adds the charge collected from the column.
    pub fn integrate(&mut self, q_total: Analog) {
        self.v_mem = (self.v_mem + q_total).clamp(-V_RAIL, V_RAIL);
    }

    /// Applies `events` leak events toward rest.
    pub fn leak(&mut self, events: u32) {
        for _ in 0..events {
            self.v_mem = apply_leak_event(self.v_mem, Kappa::ARRAY, Analog::ZERO);
        }
    }

    /// Strict threshold comparison; resets the membrane on a spike.
    pub fn compare_and_fire(&mut self, p: &NeuronParams) -> bool {
        let spiked = self.v_mem > p.v_thresh.analog();
        if spiked {
            self.v_mem = p.v_reset.analog();
        }
        self.fired_this_cycle = spiked;
        spiked
    }
}
