//! The matrix-cycle state machine.
//!
//! One call to [`Engine::step_cycle`] is one pass over all 64 columns:
//!
//! 1. rows whose input latch bit is set process their spike (facilitation,
//!    amplitude, depression, PSC jump);
//! 2. for each column, the charge of all 128 rows is summed, integrated on the
//!    neuron, the neuron's leak events for this cycle are applied, the
//!    membrane is compared against threshold, and the column's synapses run
//!    their long-term update with the pre-reset membrane voltage;
//! 3. presynaptic decay events (PSC, utilization, resources) are applied;
//! 4. the latch is cleared and the fired vector is published.
//!
//! Row 127 has no short-term dynamics; it always drives a constant level.
//! Every row drives its current PSC voltage into every column slot, so an
//! input spike influences the membrane for as long as its PSC lasts.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::neuron::{NeuronParams, NeuronState};
use crate::plasticity::{
    effective_weight, ltp_update, LtpParams, Sign, SynapseWord, WeightRam, BACKGROUND_ROW,
    N_COLS, N_ROWS, N_SYNAPSES,
};
use crate::presynapse::{ChargeGain, DecayEvents, PresynState, StpParams};
use crate::sc::{apply_leak_event, Analog, DacValue, Grouped, Kappa, TimeBase, GROUP_SIZE};

pub const N_PRESYN_GROUPS: usize = N_ROWS / GROUP_SIZE;
pub const N_NEURON_GROUPS: usize = N_COLS / GROUP_SIZE;

/// Group-shared parameters of presynaptic circuits and neurons.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParameterGroups {
    pub presyn: Grouped<StpParams>,
    pub neuron: Grouped<NeuronParams>,
}

impl Default for ParameterGroups {
    fn default() -> Self {
        ParameterGroups {
            presyn: Grouped::new(N_PRESYN_GROUPS, StpParams::default()),
            neuron: Grouped::new(N_NEURON_GROUPS, NeuronParams::default()),
        }
    }
}

/// Array-wide settings that are not group registers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EngineConfig {
    pub charge_gain: ChargeGain,
    /// Constant level driven by the background row.
    pub background_level: DacValue,
    pub ltp: LtpParams,
    /// Optional parasitic decay applied once per cycle to membranes and PSCs.
    pub residual_leak: Option<Kappa>,
    /// Per-neuron integrator offset added every cycle; zero models ideal
    /// offset compensation.
    pub neuron_offset: Vec<Analog>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            charge_gain: ChargeGain::DEFAULT,
            background_level: DacValue::new(127).unwrap(),
            ltp: LtpParams::default(),
            residual_leak: None,
            neuron_offset: vec![Analog::ZERO; N_COLS],
        }
    }
}

/// What an analog test output is connected to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TestOutput {
    #[default]
    Off,
    Membrane(usize),
    Psc(usize),
}

#[derive(Clone, Debug)]
pub struct Engine {
    time: TimeBase,
    presyn: Vec<PresynState>,
    neurons: Vec<NeuronState>,
    ram: WeightRam,
    groups: ParameterGroups,
    config: EngineConfig,
    input_latch: u128,
    output_vector: u64,
    test_outputs: [TestOutput; 2],
    column_order: Vec<usize>,
    // Column-major signed effective weights, kept in sync with `ram`.
    signed_weights: Vec<i8>,
    // Nonzero weights per row, used to skip silent rows.
    row_weights: Vec<u16>,
    units: Vec<Analog>,
    active: Vec<usize>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(EngineConfig::default()).expect("default configuration is valid")
    }
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        if config.neuron_offset.len() != N_COLS {
            return Err(Error::config("neuron_offset must have one entry per neuron"));
        }
        config.ltp.validate()?;
        let mut e = Engine {
            time: TimeBase::default(),
            presyn: vec![PresynState::default(); N_ROWS],
            neurons: vec![NeuronState::default(); N_COLS],
            ram: WeightRam::default(),
            groups: ParameterGroups::default(),
            config,
            input_latch: 0,
            output_vector: 0,
            test_outputs: [TestOutput::Off; 2],
            column_order: (0..N_COLS).collect(),
            signed_weights: vec![0; N_SYNAPSES],
            row_weights: vec![0; N_ROWS],
            units: vec![Analog::ZERO; N_ROWS],
            active: Vec::with_capacity(N_ROWS),
        };
        e.rebuild_weight_cache();
        Ok(e)
    }

    pub fn time(&self) -> &TimeBase {
        &self.time
    }

    pub fn cycle_index(&self) -> u64 {
        self.time.cycle_index()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn groups(&self) -> &ParameterGroups {
        &self.groups
    }

    pub fn ram(&self) -> &WeightRam {
        &self.ram
    }

    pub fn presyn_state(&self, row: usize) -> Result<&PresynState> {
        self.presyn.get(row).ok_or(Error::Index { what: "row", value: row, max: N_ROWS - 1 })
    }

    pub fn neuron_state(&self, col: usize) -> Result<&NeuronState> {
        self.neurons.get(col).ok_or(Error::Index { what: "neuron", value: col, max: N_COLS - 1 })
    }

    pub fn presyn_states(&self) -> &[PresynState] {
        &self.presyn
    }

    pub fn neuron_states(&self) -> &[NeuronState] {
        &self.neurons
    }

    /// Spikes of the most recent cycle, bit `c` for neuron `c`.
    pub fn output_vector(&self) -> u64 {
        self.output_vector
    }

    pub fn input_latch(&self) -> u128 {
        self.input_latch
    }

    /// Registers input spikes for the next cycle. Repeated addresses within
    /// one cycle collapse into a single spike.
    pub fn latch_inputs<I: IntoIterator<Item = usize>>(&mut self, rows: I) -> Result<()> {
        let mut bits = 0u128;
        for r in rows {
            if r >= BACKGROUND_ROW {
                return Err(Error::Index { what: "input row", value: r, max: BACKGROUND_ROW - 1 });
            }
            bits |= 1 << r;
        }
        self.input_latch |= bits;
        Ok(())
    }

    /// Changes the clock divider. Only the wall-clock mapping is affected.
    pub fn set_speedup(&mut self, divider: u8) -> Result<()> {
        self.time.set_divider(divider)
    }

    pub fn write_synapse(&mut self, row: usize, col: usize, word: SynapseWord) -> Result<()> {
        self.ram.write(row, col, word)?;
        self.refresh_weight(row, col);
        Ok(())
    }

    pub fn read_synapse(&self, row: usize, col: usize) -> Result<SynapseWord> {
        self.ram.read(row, col)
    }

    /// Replaces the whole weight RAM.
    pub fn load_ram(&mut self, ram: WeightRam) {
        self.ram = ram;
        self.rebuild_weight_cache();
    }

    /// Sets the background-row weight for one neuron.
    pub fn configure_background(&mut self, neuron: usize, weight: u8, sign: Sign) -> Result<()> {
        if neuron >= N_COLS {
            return Err(Error::Index { what: "neuron", value: neuron, max: N_COLS - 1 });
        }
        self.write_synapse(BACKGROUND_ROW, neuron, SynapseWord::fixed(weight, sign)?)
    }

    pub fn set_background_level(&mut self, level: DacValue) {
        self.config.background_level = level;
    }

    pub fn set_charge_gain(&mut self, gain: ChargeGain) {
        self.config.charge_gain = gain;
    }

    pub fn set_ltp(&mut self, ltp: LtpParams) -> Result<()> {
        ltp.validate()?;
        self.config.ltp = ltp;
        self.rebuild_weight_cache();
        Ok(())
    }

    pub fn presyn_params(&self, row: usize) -> Result<&StpParams> {
        self.groups.presyn.member(row)
    }

    pub fn neuron_params(&self, col: usize) -> Result<&NeuronParams> {
        self.groups.neuron.member(col)
    }

    pub fn set_presyn_group(&mut self, group: usize, params: StpParams) -> Result<()> {
        params.validate()?;
        self.groups.presyn.set_group(group, params)
    }

    pub fn set_neuron_group(&mut self, group: usize, params: NeuronParams) -> Result<()> {
        self.groups.neuron.set_group(group, params)
    }

    /// Applies `params` to every presynaptic group.
    pub fn set_all_presyn(&mut self, params: StpParams) -> Result<()> {
        for g in 0..N_PRESYN_GROUPS {
            self.set_presyn_group(g, params.clone())?;
        }
        Ok(())
    }

    pub fn set_all_neurons(&mut self, params: NeuronParams) -> Result<()> {
        for g in 0..N_NEURON_GROUPS {
            self.set_neuron_group(g, params.clone())?;
        }
        Ok(())
    }

    pub fn set_test_output(&mut self, slot: usize, target: TestOutput) -> Result<()> {
        match target {
            TestOutput::Membrane(c) if c >= N_COLS => {
                return Err(Error::Index { what: "neuron", value: c, max: N_COLS - 1 })
            }
            TestOutput::Psc(r) if r >= N_ROWS => {
                return Err(Error::Index { what: "row", value: r, max: N_ROWS - 1 })
            }
            _ => {}
        }
        let max = self.test_outputs.len() - 1;
        *self
            .test_outputs
            .get_mut(slot)
            .ok_or(Error::Index { what: "test output", value: slot, max })? = target;
        Ok(())
    }

    pub fn test_outputs(&self) -> [TestOutput; 2] {
        self.test_outputs
    }

    /// Current value on each test output.
    pub fn test_output_values(&self) -> [Option<Analog>; 2] {
        self.test_outputs.map(|t| match t {
            TestOutput::Off => None,
            TestOutput::Membrane(c) => Some(self.neurons[c].v_mem),
            TestOutput::Psc(r) => Some(self.presyn[r].v_psc),
        })
    }

    /// Changes the order in which column slots are visited.
    pub fn set_column_order(&mut self, order: Vec<usize>) -> Result<()> {
        let mut seen = [false; N_COLS];
        if order.len() != N_COLS {
            return Err(Error::config("column order must list all 64 columns"));
        }
        for &c in &order {
            if c >= N_COLS || std::mem::replace(&mut seen[c], true) {
                return Err(Error::config("column order must be a permutation of 0..64"));
            }
        }
        self.column_order = order;
        Ok(())
    }

    /// Advances one matrix cycle and returns the fired vector.
    pub fn step_cycle(&mut self) -> u64 {
        let latch = self.input_latch;

        // Presynaptic phase.
        for r in 0..BACKGROUND_ROW {
            if latch >> r & 1 == 1 {
                let p = &self.groups.presyn.member(r).expect("row in range");
                let s = &mut self.presyn[r];
                s.pending_spike = true;
                s.on_spike(p);
            }
        }
        self.presyn[BACKGROUND_ROW].pending_spike = true;

        let gain = self.config.charge_gain;
        for (u, s) in self.units.iter_mut().zip(&self.presyn).take(BACKGROUND_ROW) {
            *u = gain.unit(s.v_psc);
        }
        self.units[BACKGROUND_ROW] = gain.unit(self.config.background_level.analog());
        self.active.clear();
        let ltp_enabled = self.config.ltp.enabled;
        for r in 0..N_ROWS {
            // Weights can change mid-cycle under long-term plasticity.
            if self.units[r] != Analog::ZERO && (ltp_enabled || self.row_weights[r] != 0) {
                self.active.push(r);
            }
        }

        let mut mem_events = [0u32; N_NEURON_GROUPS];
        for (ev, p) in mem_events.iter_mut().zip(self.groups.neuron.iter_mut()) {
            *ev = p.tau_m.advance_cycle();
        }

        // Column slots.
        let mut fired = 0u64;
        for i in 0..N_COLS {
            let c = self.column_order[i];
            let w = &self.signed_weights[c * N_ROWS..(c + 1) * N_ROWS];
            let q: i64 = if self.active.len() == N_ROWS {
                w.iter().zip(&self.units).map(|(&w, u)| w as i64 * u.raw()).sum()
            } else {
                self.active.iter().map(|&r| w[r] as i64 * self.units[r].raw()).sum()
            };

            let n = &mut self.neurons[c];
            n.integrate(Analog::from_raw(q) + self.config.neuron_offset[c]);
            n.leak(mem_events[c / GROUP_SIZE]);
            if let Some(k) = self.config.residual_leak {
                n.v_mem = apply_leak_event(n.v_mem, k, Analog::ZERO);
            }
            let v_pre_reset = n.v_mem;
            let p = self.groups.neuron.member(c).expect("column in range");
            if n.compare_and_fire(p) {
                fired |= 1 << c;
            }

            if ltp_enabled {
                for r in 0..N_ROWS {
                    let spike = r != BACKGROUND_ROW && latch >> r & 1 == 1;
                    let word = self.ram.get_mut(r, c);
                    *word = ltp_update(*word, spike, v_pre_reset, &self.config.ltp);
                    self.set_cached(r, c);
                }
            }
        }

        // Presynaptic decay.
        for g in 0..N_PRESYN_GROUPS {
            let ev = DecayEvents::for_cycle(self.groups.presyn.group_mut(g).expect("group in range"));
            let rows = g * GROUP_SIZE..((g + 1) * GROUP_SIZE).min(BACKGROUND_ROW);
            for s in &mut self.presyn[rows] {
                s.decay(ev);
                if let Some(k) = self.config.residual_leak {
                    s.v_psc = apply_leak_event(s.v_psc, k, Analog::ZERO);
                }
            }
        }

        for s in &mut self.presyn {
            s.pending_spike = false;
        }
        self.input_latch = 0;
        self.output_vector = fired;
        self.time.advance();
        fired
    }

    /// Runs `cycles` cycles without input and returns the number of cycles
    /// with at least one output spike.
    pub fn run_idle(&mut self, cycles: u64) -> u64 {
        (0..cycles).filter(|_| self.step_cycle() != 0).count() as u64
    }

    /// Hash over all dynamic and configured state except the clock divider.
    pub fn state_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.time.cycle_index().hash(&mut h);
        self.presyn.hash(&mut h);
        self.neurons.hash(&mut h);
        self.ram.hash(&mut h);
        self.groups.hash(&mut h);
        self.config.hash(&mut h);
        self.input_latch.hash(&mut h);
        self.output_vector.hash(&mut h);
        h.finish()
    }

    fn refresh_weight(&mut self, row: usize, col: usize) {
        self.set_cached(row, col);
    }

    fn set_cached(&mut self, row: usize, col: usize) {
        let new = signed(self.ram.get(row, col), self.config.ltp.theta_x);
        let old = std::mem::replace(&mut self.signed_weights[col * N_ROWS + row], new);
        self.row_weights[row] = self.row_weights[row] + (new != 0) as u16 - (old != 0) as u16;
    }

    fn rebuild_weight_cache(&mut self) {
        for r in 0..N_ROWS {
            for c in 0..N_COLS {
                self.refresh_weight(r, c);
            }
        }
    }
}

fn signed(word: &SynapseWord, theta_x: Analog) -> i8 {
    let (w, sign) = effective_weight(word, theta_x);
    w as i8 * sign.factor() as i8
}

/// Per-cycle recording of test outputs and fired vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbeRecorder {
    pub rows: Vec<ProbeRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRecord {
    pub cycle: u64,
    pub values: [Option<f64>; 2],
    pub fired: u64,
}

impl ProbeRecorder {
    /// Records the state after a cycle has completed.
    pub fn record(&mut self, engine: &Engine) {
        self.rows.push(ProbeRecord {
            cycle: engine.cycle_index() - 1,
            values: engine.test_output_values().map(|v| v.map(Analog::to_f64)),
            fired: engine.output_vector(),
        });
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cycle", "probe0_mv", "probe1_mv", "fired"])?;
        for r in &self.rows {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            w.write_record([
                r.cycle.to_string(),
                fmt(r.values[0]),
                fmt(r.values[1]),
                format!("{:016x}", r.fired),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sc::{Fraction64, LeakSchedule, TickGranularity};

    fn no_leak_engine() -> Engine {
        Engine::default()
    }

    #[test]
    fn quiescent_array_stays_at_rest() {
        let mut e = no_leak_engine();
        let h0 = {
            let mut f = e.clone();
            f.time = TimeBase::default();
            f.state_hash()
        };
        for _ in 0..100 {
            assert_eq!(e.step_cycle(), 0);
        }
        assert!(e.neuron_states().iter().all(|n| n.v_mem == Analog::ZERO));
        assert!(e.presyn_states().iter().all(|s| *s == PresynState::default()));
        assert_ne!(h0, 0);
    }

    #[test]
    fn latch_semantics() {
        let mut e = no_leak_engine();
        e.latch_inputs([5, 5]).unwrap();
        assert_eq!(e.input_latch(), 1 << 5);
        assert!(e.latch_inputs([127]).is_err());
        e.latch_inputs(0..127).unwrap();
        assert_eq!(e.input_latch().count_ones(), 127);
        e.step_cycle();
        assert_eq!(e.input_latch(), 0);
    }

    #[test]
    fn duplicate_spikes_collapse() {
        let p = StpParams { u: Fraction64::new(32).unwrap(), ..StpParams::default() };
        let mut a = no_leak_engine();
        a.set_all_presyn(p.clone()).unwrap();
        let mut b = a.clone();
        a.latch_inputs([5]).unwrap();
        b.latch_inputs([5, 5, 5]).unwrap();
        a.step_cycle();
        b.step_cycle();
        assert_eq!(a.presyn_state(5).unwrap(), b.presyn_state(5).unwrap());
    }

    #[test]
    fn single_synapse_step_is_exact() {
        let mut e = no_leak_engine();
        let p = StpParams { u: Fraction64::new(48).unwrap(), ..StpParams::default() };
        e.set_all_presyn(p).unwrap();
        e.write_synapse(3, 10, SynapseWord::fixed(6, Sign::Excitatory).unwrap()).unwrap();
        e.latch_inputs([3]).unwrap();
        e.step_cycle();
        let v_psc = e.presyn_state(3).unwrap().v_psc;
        let expected = e.config().charge_gain.unit(v_psc) * 6;
        assert_eq!(e.neuron_state(10).unwrap().v_mem, expected);
        // PSC does not decay (tau_psc off): the same charge every cycle.
        e.step_cycle();
        assert_eq!(e.neuron_state(10).unwrap().v_mem, expected * 2);
        assert_eq!(e.neuron_state(11).unwrap().v_mem, Analog::ZERO);
    }

    #[test]
    fn background_drive_and_sign() {
        let mut e = no_leak_engine();
        e.configure_background(4, 0, Sign::Excitatory).unwrap();
        e.run_idle(10);
        assert_eq!(e.neuron_state(4).unwrap().v_mem, Analog::ZERO);

        let count = |sign_other: Option<u8>| {
            let mut e = no_leak_engine();
            e.configure_background(4, 8, Sign::Excitatory).unwrap();
            if let Some(w) = sign_other {
                // Inhibitory input through a constantly driven row.
                let p = StpParams {
                    u: Fraction64::new(63).unwrap(),
                    ..StpParams::default()
                };
                e.set_all_presyn(p).unwrap();
                e.write_synapse(0, 4, SynapseWord::fixed(w, Sign::Inhibitory).unwrap()).unwrap();
                e.latch_inputs([0]).unwrap();
            }
            let mut n = 0;
            for _ in 0..2000 {
                n += (e.step_cycle() >> 4 & 1) as u32;
            }
            n
        };
        let base = count(None);
        assert!(base > 0);
        assert!(count(Some(1)) < base);
        assert!(count(Some(2)) < count(Some(1)));
        assert!(e.configure_background(64, 1, Sign::Excitatory).is_err());
        assert!(e.configure_background(0, 16, Sign::Excitatory).is_err());
    }

    #[test]
    fn zero_weights_conserve_rest() {
        let mut e = no_leak_engine();
        let p = StpParams {
            u: Fraction64::new(40).unwrap(),
            tau_psc: LeakSchedule::new(5, TickGranularity::PerEighthCycle).unwrap(),
            ..StpParams::default()
        };
        e.set_all_presyn(p).unwrap();
        for i in 0..500 {
            e.latch_inputs((0..127).filter(|r| (r + i) % 3 == 0)).unwrap();
            assert_eq!(e.step_cycle(), 0);
        }
        assert!(e.neuron_states().iter().all(|n| n.v_mem == Analog::ZERO));
    }

    #[test]
    fn column_order_validation() {
        let mut e = no_leak_engine();
        assert!(e.set_column_order((0..63).collect()).is_err());
        let mut dup: Vec<usize> = (0..64).collect();
        dup[3] = 4;
        assert!(e.set_column_order(dup).is_err());
        assert!(e.set_column_order((0..64).rev().collect()).is_ok());
    }

    #[test]
    fn speedup_changes_wall_time_only() {
        let mut e = no_leak_engine();
        e.set_speedup(1).unwrap();
        e.step_cycle();
        assert!((e.time().wall_time_ms() - 0.0062).abs() < 1e-12);
        assert!((e.time().bio_time_ms() - 0.62).abs() < 1e-12);
        assert!(e.set_speedup(0).is_err());
    }

    #[test]
    fn probe_csv() {
        let mut e = no_leak_engine();
        e.set_test_output(0, TestOutput::Membrane(2)).unwrap();
        assert!(e.set_test_output(1, TestOutput::Psc(128)).is_err());
        assert!(e.set_test_output(2, TestOutput::Off).is_err());
        let mut rec = ProbeRecorder::default();
        e.configure_background(2, 15, Sign::Excitatory).unwrap();
        for _ in 0..3 {
            e.step_cycle();
            rec.record(&e);
        }
        let mut out = Vec::new();
        rec.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "cycle,probe0_mv,probe1_mv,fired");
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("0,"));
    }
}
