//! Synaptic weight RAM and the binary long-term state.
//!
//! Every synapse stores an LTP and an LTD weight plus an analog state `x`.
//! The state collapses to one bit (`x ≥ θ_x`) that selects which weight is
//! applied. The learning rule is a reduced Brader-style update: a presynaptic
//! spike steps `x` up or down depending on the postsynaptic membrane voltage,
//! and a bistable drift pulls `x` toward 0 or 1 every cycle. The calcium
//! stop-learning gate is not modeled.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::sc::Analog;

pub const N_ROWS: usize = 128;
pub const N_COLS: usize = 64;
pub const N_SYNAPSES: usize = N_ROWS * N_COLS;
/// Row driven by the constant background level.
pub const BACKGROUND_ROW: usize = 127;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Sign {
    #[default]
    Excitatory,
    Inhibitory,
}

impl Sign {
    pub fn factor(self) -> i64 {
        match self {
            Sign::Excitatory => 1,
            Sign::Inhibitory => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SynapseWord {
    w_ltp: u8,
    w_ltd: u8,
    pub sign: Sign,
    x_state: Analog,
}

impl Default for SynapseWord {
    fn default() -> Self {
        SynapseWord { w_ltp: 0, w_ltd: 0, sign: Sign::Excitatory, x_state: Analog::ONE }
    }
}

impl SynapseWord {
    pub fn new(w_ltp: u8, w_ltd: u8, sign: Sign) -> Result<Self> {
        if w_ltp > 15 || w_ltd > 15 {
            return Err(Error::config(format!("weights ({w_ltp}, {w_ltd}) exceed 4 bits")));
        }
        Ok(SynapseWord { w_ltp, w_ltd, sign, x_state: Analog::ONE })
    }

    /// Same weight in both states.
    pub fn fixed(weight: u8, sign: Sign) -> Result<Self> {
        SynapseWord::new(weight, weight, sign)
    }

    pub fn with_state(mut self, x: Analog) -> Self {
        self.x_state = x.clamp(Analog::ZERO, Analog::ONE);
        self
    }

    pub fn w_ltp(&self) -> u8 {
        self.w_ltp
    }

    pub fn w_ltd(&self) -> u8 {
        self.w_ltd
    }

    pub fn x_state(&self) -> Analog {
        self.x_state
    }

    /// 16-bit RAM image encoding; the analog state is not part of it.
    pub fn to_bits(&self) -> u16 {
        (self.w_ltd as u16) | ((self.w_ltp as u16) << 4) | (((self.sign == Sign::Inhibitory) as u16) << 8)
    }

    pub fn from_bits(bits: u16) -> Result<Self> {
        if bits >> 9 != 0 {
            return Err(Error::config(format!("reserved bits set in synapse word {bits:#06x}")));
        }
        let sign = if bits & 0x100 != 0 { Sign::Inhibitory } else { Sign::Excitatory };
        SynapseWord::new(((bits >> 4) & 0xF) as u8, (bits & 0xF) as u8, sign)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LtpParams {
    /// Postsynaptic voltage above which a presynaptic spike potentiates.
    pub theta_v: Analog,
    pub a_up: Analog,
    pub b_down: Analog,
    pub theta_x: Analog,
    pub drift_up: Analog,
    pub drift_down: Analog,
    pub enabled: bool,
}

impl Default for LtpParams {
    fn default() -> Self {
        LtpParams {
            theta_v: Analog::from_int(50),
            a_up: Analog::from_f64(0.1),
            b_down: Analog::from_f64(0.1),
            theta_x: Analog::from_f64(0.5),
            drift_up: Analog::from_f64(0.001),
            drift_down: Analog::from_f64(0.001),
            enabled: false,
        }
    }
}

impl LtpParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: Analog| v >= Analog::ZERO && v <= Analog::ONE;
        if ![self.a_up, self.b_down, self.theta_x, self.drift_up, self.drift_down]
            .into_iter()
            .all(unit)
        {
            return Err(Error::config("plasticity steps, drifts and theta_x must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Weight selected by the collapsed binary state (`x ≥ θ_x` is potentiated).
pub fn effective_weight(w: &SynapseWord, theta_x: Analog) -> (u8, Sign) {
    if w.x_state >= theta_x {
        (w.w_ltp, w.sign)
    } else {
        (w.w_ltd, w.sign)
    }
}

pub fn ltp_update(w: SynapseWord, presyn_spike: bool, v_mem_post: Analog, p: &LtpParams) -> SynapseWord {
    if !p.enabled {
        return w;
    }
    let clamp = |x: Analog| x.clamp(Analog::ZERO, Analog::ONE);
    let mut x = w.x_state;
    if presyn_spike {
        x = if v_mem_post > p.theta_v { clamp(x + p.a_up) } else { clamp(x - p.b_down) };
    }
    x = if x >= p.theta_x { clamp(x + p.drift_up) } else { clamp(x - p.drift_down) };
    SynapseWord { x_state: x, ..w }
}

/// 128 × 64 synapse words, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightRam {
    words: Vec<SynapseWord>,
}

impl Default for WeightRam {
    fn default() -> Self {
        WeightRam { words: vec![SynapseWord::default(); N_SYNAPSES] }
    }
}

impl WeightRam {
    fn index(row: usize, col: usize) -> Result<usize> {
        if row >= N_ROWS {
            return Err(Error::Index { what: "row", value: row, max: N_ROWS - 1 });
        }
        if col >= N_COLS {
            return Err(Error::Index { what: "column", value: col, max: N_COLS - 1 });
        }
        Ok(row * N_COLS + col)
    }

    pub fn read(&self, row: usize, col: usize) -> Result<SynapseWord> {
        Ok(self.words[Self::index(row, col)?])
    }

    pub fn write(&mut self, row: usize, col: usize, word: SynapseWord) -> Result<()> {
        self.words[Self::index(row, col)?] = word;
        Ok(())
    }

    pub(crate) fn get(&self, row: usize, col: usize) -> &SynapseWord {
        &self.words[row * N_COLS + col]
    }

    pub(crate) fn get_mut(&mut self, row: usize, col: usize) -> &mut SynapseWord {
        &mut self.words[row * N_COLS + col]
    }

    pub fn words(&self) -> &[SynapseWord] {
        &self.words
    }

    /// Writes the flat little-endian image, one 16-bit word per synapse.
    pub fn export_image<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::with_capacity(N_SYNAPSES * 2);
        for w in &self.words {
            buf.extend_from_slice(&w.to_bits().to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    /// Reads an image produced by [`WeightRam::export_image`]. Imported
    /// synapses start in the potentiated state.
    pub fn import_image<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        if buf.len() != N_SYNAPSES * 2 {
            return Err(Error::config(format!(
                "weight image has {} bytes, expected {}",
                buf.len(),
                N_SYNAPSES * 2
            )));
        }
        let words = buf
            .chunks_exact(2)
            .map(|b| SynapseWord::from_bits(u16::from_le_bytes([b[0], b[1]])))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightRam { words })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> Analog {
        Analog::from_f64(0.5)
    }

    #[test]
    fn collapse_selects_weight() {
        let w = SynapseWord::new(12, 3, Sign::Inhibitory).unwrap();
        assert_eq!(effective_weight(&w.with_state(Analog::ONE), half()), (12, Sign::Inhibitory));
        assert_eq!(effective_weight(&w.with_state(Analog::ZERO), half()), (3, Sign::Inhibitory));
        assert_eq!(effective_weight(&w.with_state(half()), half()), (12, Sign::Inhibitory));
    }

    #[test]
    fn update_examples() {
        let p = LtpParams {
            enabled: true,
            a_up: Analog::from_f64(0.2),
            b_down: Analog::from_f64(0.1),
            drift_up: Analog::ZERO,
            drift_down: Analog::ZERO,
            ..LtpParams::default()
        };
        let w = SynapseWord::fixed(5, Sign::Excitatory).unwrap().with_state(Analog::from_f64(0.4));
        assert_eq!(ltp_update(w, false, Analog::from_int(200), &p), w);
        let up = ltp_update(w, true, p.theta_v + Analog::from_int(1), &p);
        assert!((up.x_state().to_f64() - 0.6).abs() < 2.0 / 65536.0);
        let low = w.with_state(Analog::from_f64(0.05));
        assert_eq!(ltp_update(low, true, p.theta_v - Analog::from_int(1), &p).x_state(), Analog::ZERO);
        let off = LtpParams { enabled: false, ..p };
        assert_eq!(ltp_update(w, true, Analog::from_int(200), &off), w);
    }

    #[test]
    fn ram_bounds_and_background_row() {
        let mut ram = WeightRam::default();
        let w = SynapseWord::new(7, 2, Sign::Inhibitory).unwrap();
        ram.write(0, 0, w).unwrap();
        assert_eq!(ram.read(0, 0).unwrap(), w);
        ram.write(BACKGROUND_ROW, 9, SynapseWord::fixed(4, Sign::Excitatory).unwrap()).unwrap();
        assert_eq!(ram.read(127, 9).unwrap().w_ltp(), 4);
        assert!(matches!(ram.write(128, 0, w), Err(Error::Index { .. })));
        assert!(ram.read(0, 64).is_err());
        assert!(SynapseWord::new(16, 0, Sign::Excitatory).is_err());
    }

    #[test]
    fn image_layout() {
        let w = SynapseWord::new(0xA, 0x5, Sign::Inhibitory).unwrap();
        assert_eq!(w.to_bits(), 0x01A5);
        assert!(SynapseWord::from_bits(0x0200).is_err());
        let mut ram = WeightRam::default();
        ram.write(1, 2, w).unwrap();
        let mut img = Vec::new();
        ram.export_image(&mut img).unwrap();
        assert_eq!(img.len(), 16384);
        let off = 2 * (64 + 2);
        assert_eq!(&img[off..off + 2], &[0xA5, 0x01]);
        assert_eq!(WeightRam::import_image(&img[..]).unwrap(), ram);
        assert!(WeightRam::import_image(&img[..10]).is_err());
    }

    proptest! {
        #[test]
        fn state_stays_in_unit_interval(
            x0 in 0.0f64..=1.0,
            events in proptest::collection::vec((any::<bool>(), -250i64..250), 0..500),
            a in 0.0f64..=1.0, b in 0.0f64..=1.0,
        ) {
            let p = LtpParams { enabled: true, a_up: Analog::from_f64(a), b_down: Analog::from_f64(b), ..LtpParams::default() };
            let mut w = SynapseWord::fixed(3, Sign::Excitatory).unwrap().with_state(Analog::from_f64(x0));
            for (spike, v) in events {
                w = ltp_update(w, spike, Analog::from_int(v), &p);
                prop_assert!(w.x_state() >= Analog::ZERO && w.x_state() <= Analog::ONE);
            }
        }

        #[test]
        fn drift_is_bistable(x0 in 0.0f64..=1.0) {
            let p = LtpParams { enabled: true, drift_up: Analog::from_f64(0.01), drift_down: Analog::from_f64(0.01), ..LtpParams::default() };
            let mut w = SynapseWord::fixed(3, Sign::Excitatory).unwrap().with_state(Analog::from_f64(x0));
            let up = w.x_state() >= p.theta_x;
            for _ in 0..200 {
                let next = ltp_update(w, false, Analog::ZERO, &p);
                if up {
                    prop_assert!(next.x_state() >= w.x_state());
                } else {
                    prop_assert!(next.x_state() <= w.x_state());
                }
                w = next;
            }
            prop_assert_eq!(w.x_state(), if up { Analog::ONE } else { Analog::ZERO });
        }

        #[test]
        fn image_word_round_trip(bits in 0u16..0x200) {
            prop_assert_eq!(SynapseWord::from_bits(bits).unwrap().to_bits(), bits);
        }
    }
}
