//! Presynaptic short-term plasticity and PSC generation, one circuit per row.
//!
//! Each row holds a utilization `u` (facilitation), a resource level `R`
//! (depression) and the PSC voltage `v_psc`. On a spike the row facilitates,
//! emits an amplitude `A = u'·R`, depresses, and adds `gain·A` to its PSC
//! voltage. Between spikes `u` decays toward 0, `R` recovers toward 1 and
//! `v_psc` decays toward 0, each driven by its own divider counter.

use crate::error::{Error, Result};
use crate::plasticity::Sign;
use crate::sc::{
    apply_leak_event, Analog, DacValue, Fraction64, Kappa, LeakSchedule, TickGranularity,
};

/// Default PSC saturation level.
pub const DEFAULT_V_SAT_MV: i64 = 250;

/// Per-group short-term plasticity configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StpParams {
    /// Utilization increment per spike.
    pub u: Fraction64,
    /// Depression strength.
    pub alpha: Fraction64,
    pub tau_u: LeakSchedule,
    pub tau_r: LeakSchedule,
    pub tau_psc: LeakSchedule,
    /// PSC amplitude scale; the jump for amplitude `A` is `gain·A`.
    pub gain: DacValue,
    pub v_sat: Analog,
}

impl Default for StpParams {
    fn default() -> Self {
        StpParams {
            u: Fraction64::default(),
            alpha: Fraction64::default(),
            tau_u: LeakSchedule::off(TickGranularity::PerCycle),
            tau_r: LeakSchedule::off(TickGranularity::PerCycle),
            tau_psc: LeakSchedule::off(TickGranularity::PerEighthCycle),
            gain: DacValue::new(127).unwrap(),
            v_sat: Analog::from_int(DEFAULT_V_SAT_MV),
        }
    }
}

impl StpParams {
    pub fn validate(&self) -> Result<()> {
        if self.gain.analog() < Analog::ZERO {
            return Err(Error::config(format!(
                "PSC gain DAC code {} gives a negative amplitude",
                self.gain.code()
            )));
        }
        if self.v_sat <= Analog::ZERO {
            return Err(Error::config("PSC saturation level must be positive"));
        }
        if self.tau_u.granularity() != TickGranularity::PerCycle
            || self.tau_r.granularity() != TickGranularity::PerCycle
            || self.tau_psc.granularity() != TickGranularity::PerEighthCycle
        {
            return Err(Error::config("presynaptic divider granularity mismatch"));
        }
        Ok(())
    }
}

/// Leak events due on one row during a matrix cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecayEvents {
    pub u: u32,
    pub r: u32,
    pub psc: u32,
}

impl DecayEvents {
    /// Advances the group counters by one matrix cycle.
    pub fn for_cycle(p: &mut StpParams) -> Self {
        DecayEvents {
            u: p.tau_u.advance_cycle(),
            r: p.tau_r.advance_cycle(),
            psc: p.tau_psc.advance_cycle(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PresynState {
    pub u: Analog,
    pub r: Analog,
    pub v_psc: Analog,
    pub pending_spike: bool,
    /// Amplitude `u'·R` of the most recent spike.
    pub last_amplitude: Analog,
    /// Utilization `u'` that produced `last_amplitude`.
    pub last_utilization: Analog,
}

impl Default for PresynState {
    fn default() -> Self {
        PresynState {
            u: Analog::ZERO,
            r: Analog::ONE,
            v_psc: Analog::ZERO,
            pending_spike: false,
            last_amplitude: Analog::ZERO,
            last_utilization: Analog::ZERO,
        }
    }
}

impl PresynState {
    /// Processes one presynaptic spike and returns the PSC jump in mV.
    ///
    /// Facilitation is applied before the amplitude is read out, depression
    /// after it.
    pub fn on_spike(&mut self, p: &StpParams) -> Analog {
        self.u = self.u + p.u.analog().mul(Analog::ONE - self.u);
        let amplitude = self.u.mul(self.r);
        self.r = self.r.mul(Analog::ONE - p.alpha.analog().mul(self.u));
        let jump = p.gain.analog().mul(amplitude);
        self.v_psc = (self.v_psc + jump).clamp(Analog::ZERO, p.v_sat);
        self.last_amplitude = amplitude;
        self.last_utilization = self.u;
        jump
    }

    pub fn decay(&mut self, ev: DecayEvents) {
        for _ in 0..ev.u {
            self.u = apply_leak_event(self.u, Kappa::ARRAY, Analog::ZERO);
        }
        for _ in 0..ev.r {
            self.r = apply_leak_event(self.r, Kappa::ARRAY, Analog::ONE);
        }
        for _ in 0..ev.psc {
            self.v_psc = apply_leak_event(self.v_psc, Kappa::ARRAY, Analog::ZERO);
        }
    }
}

/// Capacitance gain of one weight LSB: membrane mV per PSC mV.
///
/// Stored with 32 fractional bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChargeGain(u64);

impl ChargeGain {
    /// One spike at weight 15 with unit amplitude and full-scale gain
    /// (250 mV) moves the membrane by 10 mV.
    pub const DEFAULT: ChargeGain = ChargeGain((1u64 << 32) / 375);

    pub fn from_f64(g: f64) -> Result<Self> {
        if !(g >= 0.0 && g < 16.0) {
            return Err(Error::config(format!("charge gain {g} outside [0, 16)")));
        }
        Ok(ChargeGain((g * (1u64 << 32) as f64).round() as u64))
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / (1u64 << 32) as f64
    }

    /// Charge delivered per weight LSB for PSC voltage `v`.
    pub fn unit(self, v: Analog) -> Analog {
        Analog::from_raw(((v.raw() as i128 * self.0 as i128) / (1i128 << 32)) as i64)
    }
}

impl Default for ChargeGain {
    fn default() -> Self {
        ChargeGain::DEFAULT
    }
}

/// Charge a synapse of `weight` and `sign` transfers for PSC voltage `v_psc`.
///
/// Exactly linear in the weight: the unit charge is quantized once.
pub fn scale_weight(v_psc: Analog, weight: u8, sign: Sign, gain: ChargeGain) -> Analog {
    gain.unit(v_psc) * (weight as i64 * sign.factor())
}

/// Amplitudes of `n` probe spikes, `interval` cycles apart, with depression
/// switched off.
///
/// With `α = 0` the resource level only recovers, so the amplitude sequence
/// traces the depression time constant.
pub fn relax_test_mode(
    state: &PresynState,
    params: &StpParams,
    interval: u32,
    n: usize,
) -> Vec<Analog> {
    let mut s = *state;
    let mut p = params.clone();
    p.alpha = Fraction64::default();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            for _ in 0..interval {
                let ev = DecayEvents::for_cycle(&mut p);
                s.decay(ev);
            }
        }
        s.on_spike(&p);
        out.push(s.last_amplitude);
    }
    out
}
