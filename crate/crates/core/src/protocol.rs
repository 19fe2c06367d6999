//! Host packet protocol.
//!
//! Every packet is a 16-bit header plus a 32-bit payload, framed on the wire
//! as six bytes: header then payload, both little-endian.
//!
//! Input headers carry a 4-bit type in bits 15:12 and a 12-bit address in
//! bits 11:0. Output headers carry a 5-bit type in bits 15:11; the remaining
//! bits are zero.
//!
//! A spike packet carries four 8-bit slots, slot `i` in payload byte `i`:
//! bit 7 is the enable flag and bits 6:0 the row address.
//!
//! Configuration address map (12 bits):
//!
//! | address        | contents                                                 |
//! |----------------|----------------------------------------------------------|
//! | `0x000-0x7FF`  | weight RAM window; two 16-bit synapse words per address  |
//! | `0x800-0x8FF`  | presynaptic groups, `0x800 + 0x20*g + param`             |
//! | `0x900-0x93F`  | neuron groups, `0x900 + 0x10*g + param`                  |
//! | `0xA00`        | clock divider                                            |
//! | `0xA01`        | test output select                                       |
//! | `0xA02`        | weight RAM window select (0 or 1)                        |
//! | `0xA03`        | background row level (DAC code)                          |
//!
//! Weight RAM address `a` in window `w` holds synapses `n = 4096*w + 2*a`
//! (low half) and `n + 1` (high half), with `n = 64*row + col`. Each half uses
//! the RAM image encoding of [`SynapseWord::to_bits`].

use std::collections::VecDeque;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::engine::{Engine, TestOutput};
use crate::error::{Error, Result};
use crate::plasticity::{SynapseWord, N_COLS, N_ROWS};
use crate::sc::{DacValue, Fraction64};

pub const PACKET_BYTES: usize = 6;
pub const DEFAULT_FIFO_CAPACITY: usize = 256;

/// Type codes and configuration addresses.
pub mod codes {
    pub const IN_SPIKE: u8 = 0x0;
    pub const IN_CONFIG_WRITE: u8 = 0x1;
    pub const IN_CONFIG_READ: u8 = 0x2;

    pub const OUT_VECTOR_LOW: u8 = 0x00;
    pub const OUT_VECTOR_HIGH: u8 = 0x01;
    pub const OUT_READBACK: u8 = 0x02;

    pub const RAM_WINDOW_END: u16 = 0x7FF;

    pub const PRESYN_BASE: u16 = 0x800;
    pub const PRESYN_STRIDE: u16 = 0x20;
    pub const PRESYN_U: u16 = 0;
    pub const PRESYN_ALPHA: u16 = 1;
    pub const PRESYN_TAU_U: u16 = 2;
    pub const PRESYN_TAU_R: u16 = 3;
    pub const PRESYN_TAU_PSC: u16 = 4;
    pub const PRESYN_GAIN: u16 = 5;

    pub const NEURON_BASE: u16 = 0x900;
    pub const NEURON_STRIDE: u16 = 0x10;
    pub const NEURON_THRESH: u16 = 0;
    pub const NEURON_RESET: u16 = 1;
    pub const NEURON_TAU_M: u16 = 2;

    pub const CLOCK_DIVIDER: u16 = 0xA00;
    pub const PROBE_SELECT: u16 = 0xA01;
    pub const RAM_WINDOW_SELECT: u16 = 0xA02;
    pub const BACKGROUND_LEVEL: u16 = 0xA03;

    /// Test output select, per 16-bit half: bits 15:14 kind, bits 6:0 index.
    pub const PROBE_OFF: u16 = 0;
    pub const PROBE_MEMBRANE: u16 = 1;
    pub const PROBE_PSC: u16 = 2;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Packet {
    pub header: u16,
    pub payload: u32,
}

impl Packet {
    pub fn to_bytes(self) -> [u8; PACKET_BYTES] {
        let h = self.header.to_le_bytes();
        let p = self.payload.to_le_bytes();
        [h[0], h[1], p[0], p[1], p[2], p[3]]
    }

    pub fn from_bytes(b: [u8; PACKET_BYTES]) -> Packet {
        Packet {
            header: u16::from_le_bytes([b[0], b[1]]),
            payload: u32::from_le_bytes([b[2], b[3], b[4], b[5]]),
        }
    }

    pub fn to_hex(self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<Packet> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.len() != 2 * PACKET_BYTES {
            return Err(Error::config(format!("packet hex must be 12 digits, got {}", s.len())));
        }
        let mut b = [0u8; PACKET_BYTES];
        for (i, byte) in b.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
                .map_err(|e| Error::config(format!("bad hex: {e}")))?;
        }
        Ok(Packet::from_bytes(b))
    }

    fn input(kind: u8, addr: u16, payload: u32) -> Packet {
        Packet { header: (kind as u16) << 12 | (addr & 0xFFF), payload }
    }

    fn output(kind: u8, payload: u32) -> Packet {
        Packet { header: (kind as u16) << 11, payload }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SpikeSlot {
    pub addr: u8,
    pub enable: bool,
}

impl SpikeSlot {
    pub fn new(addr: u8, enable: bool) -> Result<Self> {
        if addr > 0x7F {
            return Err(Error::config(format!("spike address {addr} exceeds 7 bits")));
        }
        Ok(SpikeSlot { addr, enable })
    }

    fn to_byte(self) -> u8 {
        (self.enable as u8) << 7 | (self.addr & 0x7F)
    }

    fn from_byte(b: u8) -> Self {
        SpikeSlot { addr: b & 0x7F, enable: b & 0x80 != 0 }
    }
}

/// Host-to-device packet contents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InputEvent {
    Spikes([SpikeSlot; 4]),
    ConfigWrite { addr: u16, value: u32 },
    ConfigRead { addr: u16 },
}

impl InputEvent {
    /// Enabled spike addresses.
    pub fn spike_rows(&self) -> Vec<usize> {
        match self {
            InputEvent::Spikes(s) => s.iter().filter(|s| s.enable).map(|s| s.addr as usize).collect(),
            _ => Vec::new(),
        }
    }
}

/// Device-to-host packet contents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputEvent {
    SpikeVectorLow(u32),
    SpikeVectorHigh(u32),
    ConfigReadback(u32),
}

pub fn encode_input_spikes(slots: [SpikeSlot; 4]) -> Packet {
    let bytes = slots.map(SpikeSlot::to_byte);
    Packet::input(codes::IN_SPIKE, 0, u32::from_le_bytes(bytes))
}

/// Packs spike rows four to a packet; unused slots are disabled.
pub fn encode_spike_rows(rows: &[usize]) -> Result<Vec<Packet>> {
    rows.chunks(4)
        .map(|chunk| {
            let mut slots = [SpikeSlot::default(); 4];
            for (slot, &r) in slots.iter_mut().zip(chunk) {
                *slot = SpikeSlot::new(u8::try_from(r).unwrap_or(u8::MAX), true)?;
            }
            Ok(encode_input_spikes(slots))
        })
        .collect()
}

pub fn encode_input(event: &InputEvent) -> Result<Packet> {
    let check = |addr: u16| {
        if addr > 0xFFF {
            Err(Error::config(format!("config address {addr:#x} exceeds 12 bits")))
        } else {
            Ok(addr)
        }
    };
    Ok(match *event {
        InputEvent::Spikes(slots) => {
            for s in slots {
                SpikeSlot::new(s.addr, s.enable)?;
            }
            encode_input_spikes(slots)
        }
        InputEvent::ConfigWrite { addr, value } => Packet::input(codes::IN_CONFIG_WRITE, check(addr)?, value),
        InputEvent::ConfigRead { addr } => Packet::input(codes::IN_CONFIG_READ, check(addr)?, 0),
    })
}

pub fn decode_packet(p: Packet) -> Result<InputEvent> {
    let kind = (p.header >> 12) as u8;
    let addr = p.header & 0xFFF;
    let err = |reason| Error::Protocol { header: p.header, reason };
    match kind {
        codes::IN_SPIKE => {
            if addr != 0 {
                return Err(err("spike packet with nonzero address field"));
            }
            Ok(InputEvent::Spikes(p.payload.to_le_bytes().map(SpikeSlot::from_byte)))
        }
        codes::IN_CONFIG_WRITE => Ok(InputEvent::ConfigWrite { addr, value: p.payload }),
        codes::IN_CONFIG_READ => {
            if p.payload != 0 {
                return Err(err("read request with nonzero payload"));
            }
            Ok(InputEvent::ConfigRead { addr })
        }
        _ => Err(err("unknown input packet type")),
    }
}

pub fn encode_output(event: &OutputEvent) -> Packet {
    match *event {
        OutputEvent::SpikeVectorLow(v) => Packet::output(codes::OUT_VECTOR_LOW, v),
        OutputEvent::SpikeVectorHigh(v) => Packet::output(codes::OUT_VECTOR_HIGH, v),
        OutputEvent::ConfigReadback(v) => Packet::output(codes::OUT_READBACK, v),
    }
}

pub fn decode_output(p: Packet) -> Result<OutputEvent> {
    if p.header & 0x7FF != 0 {
        return Err(Error::Protocol { header: p.header, reason: "reserved output header bits set" });
    }
    match (p.header >> 11) as u8 {
        codes::OUT_VECTOR_LOW => Ok(OutputEvent::SpikeVectorLow(p.payload)),
        codes::OUT_VECTOR_HIGH => Ok(OutputEvent::SpikeVectorHigh(p.payload)),
        codes::OUT_READBACK => Ok(OutputEvent::ConfigReadback(p.payload)),
        _ => Err(Error::Protocol { header: p.header, reason: "unknown output packet type" }),
    }
}

/// Output packets for one cycle's fired vector: none when nothing fired,
/// otherwise the low word followed by the high word.
pub fn output_vector_packets(fired: u64) -> Vec<Packet> {
    if fired == 0 {
        return Vec::new();
    }
    vec![
        encode_output(&OutputEvent::SpikeVectorLow(fired as u32)),
        encode_output(&OutputEvent::SpikeVectorHigh((fired >> 32) as u32)),
    ]
}

/// Pushes the fired vector to `fifo`; both entries or neither.
pub fn emit_output_vector(fired: u64, fifo: &Fifo) -> Result<usize> {
    let packets = output_vector_packets(fired);
    fifo.push_all(&packets)?;
    Ok(packets.len())
}

/// Reassembles fired vectors from a stream of output packets.
pub fn collect_spike_vectors(packets: &[Packet]) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut low = None;
    for &p in packets {
        match decode_output(p)? {
            OutputEvent::SpikeVectorLow(v) => low = Some(v),
            OutputEvent::SpikeVectorHigh(v) => {
                let lo = low.take().ok_or(Error::Protocol {
                    header: p.header,
                    reason: "high spike word without preceding low word",
                })?;
                out.push((v as u64) << 32 | lo as u64);
            }
            OutputEvent::ConfigReadback(_) => {}
        }
    }
    Ok(out)
}

/// Bounded packet queue. Clones share the same queue, so one clone can be
/// handed to a producer thread and another to a consumer thread.
#[derive(Clone, Debug)]
pub struct Fifo {
    inner: Arc<Mutex<VecDeque<Packet>>>,
    capacity: usize,
}

impl Default for Fifo {
    fn default() -> Self {
        Fifo::new(DEFAULT_FIFO_CAPACITY)
    }
}

impl Fifo {
    pub fn new(capacity: usize) -> Self {
        Fifo { inner: Arc::new(Mutex::new(VecDeque::with_capacity(capacity))), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&self, p: Packet) -> Result<()> {
        self.push_all(&[p])
    }

    /// Appends all packets, or none if they do not fit.
    pub fn push_all(&self, ps: &[Packet]) -> Result<()> {
        let mut q = self.inner.lock().unwrap();
        if q.len() + ps.len() > self.capacity {
            return Err(Error::FifoOverflow { capacity: self.capacity });
        }
        q.extend(ps.iter().copied());
        Ok(())
    }

    pub fn pop(&self) -> Option<Packet> {
        self.inner.lock().unwrap().pop_front()
    }

    pub fn drain(&self) -> Vec<Packet> {
        self.inner.lock().unwrap().drain(..).collect()
    }
}

/// Byte-stream transport for packets.
pub trait Transport {
    fn send(&mut self, p: Packet) -> Result<()>;
    fn recv(&mut self) -> Result<Option<Packet>>;
}

/// In-memory transport: everything sent is received back in order.
#[derive(Debug, Default)]
pub struct Loopback {
    buf: VecDeque<u8>,
}

impl Transport for Loopback {
    fn send(&mut self, p: Packet) -> Result<()> {
        self.buf.extend(p.to_bytes());
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<Packet>> {
        if self.buf.len() < PACKET_BYTES {
            return Ok(None);
        }
        let mut b = [0u8; PACKET_BYTES];
        for byte in &mut b {
            *byte = self.buf.pop_front().expect("length checked");
        }
        Ok(Some(Packet::from_bytes(b)))
    }
}

pub fn write_packets<W: Write>(mut out: W, packets: &[Packet]) -> Result<()> {
    for p in packets {
        out.write_all(&p.to_bytes())?;
    }
    Ok(())
}

pub fn read_packets<R: Read>(mut input: R) -> Result<Vec<Packet>> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() % PACKET_BYTES != 0 {
        return Err(Error::config(format!(
            "packet stream length {} is not a multiple of {PACKET_BYTES}",
            buf.len()
        )));
    }
    Ok(buf
        .chunks_exact(PACKET_BYTES)
        .map(|c| Packet::from_bytes(c.try_into().expect("chunk size")))
        .collect())
}

/// Reads a `.pkt` file: a raw concatenation of 6-byte packets.
pub fn read_pkt_file(path: impl AsRef<Path>) -> Result<Vec<Packet>> {
    read_packets(fs::File::open(path)?)
}

pub fn write_pkt_file(path: impl AsRef<Path>, packets: &[Packet]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    write_packets(&mut f, packets)?;
    f.flush()?;
    Ok(())
}

/// The engine behind its input and output FIFOs.
#[derive(Debug)]
pub struct Chip {
    pub engine: Engine,
    input: Fifo,
    output: Fifo,
    ram_window: u8,
}

impl Chip {
    pub fn new(engine: Engine) -> Self {
        Chip::with_capacity(engine, DEFAULT_FIFO_CAPACITY)
    }

    pub fn with_capacity(engine: Engine, capacity: usize) -> Self {
        Chip { engine, input: Fifo::new(capacity), output: Fifo::new(capacity), ram_window: 0 }
    }

    /// Host end of the input FIFO.
    pub fn input(&self) -> Fifo {
        self.input.clone()
    }

    /// Host end of the output FIFO.
    pub fn output(&self) -> Fifo {
        self.output.clone()
    }

    /// Executes one decoded input event. Spikes are latched for the next cycle.
    pub fn handle(&mut self, event: InputEvent) -> Result<()> {
        match event {
            InputEvent::Spikes(_) => self.engine.latch_inputs(event.spike_rows()),
            InputEvent::ConfigWrite { addr, value } => self.config_write(addr, value),
            InputEvent::ConfigRead { addr } => {
                let v = self.config_read(addr)?;
                self.output.push(encode_output(&OutputEvent::ConfigReadback(v)))
            }
        }
    }

    /// Drains the input FIFO, runs one matrix cycle and queues the fired
    /// vector. Stops at the first packet that fails; the remaining packets
    /// stay queued.
    pub fn step(&mut self) -> Result<u64> {
        while let Some(p) = self.input.pop() {
            self.handle(decode_packet(p)?)?;
        }
        let fired = self.engine.step_cycle();
        emit_output_vector(fired, &self.output)?;
        Ok(fired)
    }

    pub fn config_write(&mut self, addr: u16, value: u32) -> Result<()> {
        let byte = |v: u32| -> Result<u8> {
            u8::try_from(v).map_err(|_| Error::config(format!("value {v:#x} too wide for {addr:#05x}")))
        };
        match addr {
            0..=codes::RAM_WINDOW_END => {
                let n = self.ram_window as usize * 4096 + 2 * addr as usize;
                let lo = SynapseWord::from_bits(value as u16)?;
                let hi = SynapseWord::from_bits((value >> 16) as u16)?;
                self.write_synapse_index(n, lo)?;
                self.write_synapse_index(n + 1, hi)
            }
            0x800..=0x8FF => {
                let (g, param) = split(addr, codes::PRESYN_BASE, codes::PRESYN_STRIDE);
                let mut p = self.engine.groups().presyn.group(g)?.clone();
                let v = byte(value)?;
                match param {
                    codes::PRESYN_U => p.u = Fraction64::new(v)?,
                    codes::PRESYN_ALPHA => p.alpha = Fraction64::new(v)?,
                    codes::PRESYN_TAU_U => p.tau_u.set_code(v)?,
                    codes::PRESYN_TAU_R => p.tau_r.set_code(v)?,
                    codes::PRESYN_TAU_PSC => p.tau_psc.set_code(v)?,
                    codes::PRESYN_GAIN => p.gain = DacValue::new(v)?,
                    _ => return Err(Error::UnmappedAddress(addr)),
                }
                self.engine.set_presyn_group(g, p)
            }
            0x900..=0x93F => {
                let (g, param) = split(addr, codes::NEURON_BASE, codes::NEURON_STRIDE);
                let mut p = self.engine.groups().neuron.group(g)?.clone();
                let v = byte(value)?;
                match param {
                    codes::NEURON_THRESH => p.v_thresh = DacValue::new(v)?,
                    codes::NEURON_RESET => p.v_reset = DacValue::new(v)?,
                    codes::NEURON_TAU_M => p.tau_m.set_code(v)?,
                    _ => return Err(Error::UnmappedAddress(addr)),
                }
                self.engine.set_neuron_group(g, p)
            }
            codes::CLOCK_DIVIDER => self.engine.set_speedup(byte(value)?),
            codes::PROBE_SELECT => {
                for slot in 0..2 {
                    let sel = (value >> (16 * slot)) as u16;
                    self.engine.set_test_output(slot, decode_probe(sel)?)?;
                }
                Ok(())
            }
            codes::RAM_WINDOW_SELECT => match value {
                0 | 1 => {
                    self.ram_window = value as u8;
                    Ok(())
                }
                _ => Err(Error::config(format!("RAM window {value} out of range"))),
            },
            codes::BACKGROUND_LEVEL => {
                self.engine.set_background_level(DacValue::new(byte(value)?)?);
                Ok(())
            }
            _ => Err(Error::UnmappedAddress(addr)),
        }
    }

    pub fn config_read(&self, addr: u16) -> Result<u32> {
        let e = &self.engine;
        Ok(match addr {
            0..=codes::RAM_WINDOW_END => {
                let n = self.ram_window as usize * 4096 + 2 * addr as usize;
                let lo = e.read_synapse(n / N_COLS, n % N_COLS)?.to_bits() as u32;
                let hi = e.read_synapse((n + 1) / N_COLS, (n + 1) % N_COLS)?.to_bits() as u32;
                hi << 16 | lo
            }
            0x800..=0x8FF => {
                let (g, param) = split(addr, codes::PRESYN_BASE, codes::PRESYN_STRIDE);
                let p = e.groups().presyn.group(g)?;
                (match param {
                    codes::PRESYN_U => p.u.code(),
                    codes::PRESYN_ALPHA => p.alpha.code(),
                    codes::PRESYN_TAU_U => p.tau_u.code(),
                    codes::PRESYN_TAU_R => p.tau_r.code(),
                    codes::PRESYN_TAU_PSC => p.tau_psc.code(),
                    codes::PRESYN_GAIN => p.gain.code(),
                    _ => return Err(Error::UnmappedAddress(addr)),
                }) as u32
            }
            0x900..=0x93F => {
                let (g, param) = split(addr, codes::NEURON_BASE, codes::NEURON_STRIDE);
                let p = e.groups().neuron.group(g)?;
                (match param {
                    codes::NEURON_THRESH => p.v_thresh.code(),
                    codes::NEURON_RESET => p.v_reset.code(),
                    codes::NEURON_TAU_M => p.tau_m.code(),
                    _ => return Err(Error::UnmappedAddress(addr)),
                }) as u32
            }
            codes::CLOCK_DIVIDER => e.time().clock_divider() as u32,
            codes::PROBE_SELECT => {
                let [a, b] = e.test_outputs().map(encode_probe);
                (b as u32) << 16 | a as u32
            }
            codes::RAM_WINDOW_SELECT => self.ram_window as u32,
            codes::BACKGROUND_LEVEL => e.config().background_level.code() as u32,
            _ => return Err(Error::UnmappedAddress(addr)),
        })
    }

    fn write_synapse_index(&mut self, n: usize, word: SynapseWord) -> Result<()> {
        let (row, col) = (n / N_COLS, n % N_COLS);
        // Keep the long-term state of the synapse being rewritten.
        let x = self.engine.read_synapse(row, col)?.x_state();
        self.engine.write_synapse(row, col, word.with_state(x))
    }
}

fn split(addr: u16, base: u16, stride: u16) -> (usize, u16) {
    (((addr - base) / stride) as usize, (addr - base) % stride)
}

fn decode_probe(sel: u16) -> Result<TestOutput> {
    let index = (sel & 0x7F) as usize;
    match sel >> 14 {
        codes::PROBE_OFF => Ok(TestOutput::Off),
        codes::PROBE_MEMBRANE if index < N_COLS => Ok(TestOutput::Membrane(index)),
        codes::PROBE_PSC if index < N_ROWS => Ok(TestOutput::Psc(index)),
        _ => Err(Error::config(format!("invalid test output select {sel:#06x}"))),
    }
}

fn encode_probe(t: TestOutput) -> u16 {
    match t {
        TestOutput::Off => 0,
        TestOutput::Membrane(c) => codes::PROBE_MEMBRANE << 14 | c as u16,
        TestOutput::Psc(r) => codes::PROBE_PSC << 14 | r as u16,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plasticity::Sign;
    use proptest::prelude::*;

    fn slots(s: [(u8, bool); 4]) -> [SpikeSlot; 4] {
        s.map(|(a, e)| SpikeSlot::new(a, e).unwrap())
    }

    #[test]
    fn spike_packet_layout() {
        let p = encode_input_spikes(slots([(5, true), (0, false), (0, false), (0, false)]));
        assert_eq!(p.payload, 0x0000_0085);
        assert_eq!(p.header, 0x0000);
        let p = encode_input_spikes(slots([(127, true); 4]));
        assert_eq!(p.payload, 0xFFFF_FFFF);
        let none = encode_input_spikes([SpikeSlot::default(); 4]);
        assert!(decode_packet(none).unwrap().spike_rows().is_empty());
        assert!(SpikeSlot::new(128, true).is_err());
    }

    #[test]
    fn decode_errors() {
        let bad = Packet { header: 0xF000, payload: 0 };
        match decode_packet(bad) {
            Err(Error::Protocol { header, .. }) => assert_eq!(header, 0xF000),
            other => panic!("unexpected {other:?}"),
        }
        assert!(decode_packet(Packet { header: 0x0001, payload: 0 }).is_err());
        assert!(decode_packet(Packet { header: 0x2001, payload: 1 }).is_err());
        assert!(decode_output(Packet { header: 0x0001, payload: 0 }).is_err());
        assert!(decode_output(Packet { header: 0x1F << 11, payload: 0 }).is_err());
        let w = decode_packet(Packet { header: 0x1800, payload: 42 }).unwrap();
        assert_eq!(w, InputEvent::ConfigWrite { addr: 0x800, value: 42 });
    }

    #[test]
    fn output_vector_framing() {
        assert!(output_vector_packets(0).is_empty());
        let p = output_vector_packets(1 << 3);
        assert_eq!(decode_output(p[0]).unwrap(), OutputEvent::SpikeVectorLow(8));
        assert_eq!(decode_output(p[1]).unwrap(), OutputEvent::SpikeVectorHigh(0));
        let p = output_vector_packets(1 << 63);
        assert_eq!(decode_output(p[0]).unwrap(), OutputEvent::SpikeVectorLow(0));
        assert_eq!(decode_output(p[1]).unwrap(), OutputEvent::SpikeVectorHigh(0x8000_0000));
        assert_eq!(collect_spike_vectors(&p).unwrap(), vec![1 << 63]);
    }

    #[test]
    fn fifo_overflow_is_reported() {
        let f = Fifo::new(3);
        emit_output_vector(1, &f).unwrap();
        assert!(matches!(emit_output_vector(1, &f), Err(Error::FifoOverflow { capacity: 3 })));
        assert_eq!(f.len(), 2);
        assert_eq!(emit_output_vector(0, &f).unwrap(), 0);
        f.push(Packet { header: 0, payload: 9 }).unwrap();
        assert!(f.push(Packet { header: 0, payload: 10 }).is_err());
        assert_eq!(f.drain().len(), 3);
        assert!(f.is_empty());
    }

    #[test]
    fn config_space() {
        let mut chip = Chip::new(Engine::default());
        chip.config_write(codes::CLOCK_DIVIDER, 100).unwrap();
        assert_eq!(chip.config_read(codes::CLOCK_DIVIDER).unwrap(), 100);
        assert!(chip.config_write(codes::CLOCK_DIVIDER, 0).is_err());
        chip.config_write(0x800, 62).unwrap();
        for r in 0..16 {
            assert_eq!(chip.engine.presyn_params(r).unwrap().u.value(), 62.0 / 64.0);
        }
        assert_eq!(chip.engine.presyn_params(16).unwrap().u.code(), 0);
        assert!(matches!(chip.config_read(0xFFF), Err(Error::UnmappedAddress(0xFFF))));
        assert!(chip.config_write(0x806, 1).is_err());
        assert!(chip.config_write(0x800, 64).is_err());
        chip.config_write(0x900 + 0x10 * 3 + codes::NEURON_TAU_M, 12).unwrap();
        assert_eq!(chip.engine.neuron_params(63).unwrap().tau_m.code(), 12);
        assert_eq!(chip.config_read(0x932).unwrap(), 12);
    }

    #[test]
    fn ram_windows() {
        let mut chip = Chip::new(Engine::default());
        let lo = SynapseWord::new(3, 1, Sign::Inhibitory).unwrap().to_bits() as u32;
        let hi = SynapseWord::new(9, 2, Sign::Excitatory).unwrap().to_bits() as u32;
        chip.config_write(0x7FF, hi << 16 | lo).unwrap();
        assert_eq!(chip.engine.read_synapse(63, 62).unwrap().w_ltp(), 3);
        assert_eq!(chip.engine.read_synapse(63, 63).unwrap().w_ltp(), 9);
        chip.config_write(codes::RAM_WINDOW_SELECT, 1).unwrap();
        chip.config_write(0x7FF, lo).unwrap();
        assert_eq!(chip.engine.read_synapse(127, 62).unwrap().sign, Sign::Inhibitory);
        assert_eq!(chip.config_read(0x7FF).unwrap(), lo);
        assert!(chip.config_write(codes::RAM_WINDOW_SELECT, 2).is_err());
        assert!(chip.config_write(0, 0x0200).is_err());
    }

    #[test]
    fn probe_select_round_trip() {
        let mut chip = Chip::new(Engine::default());
        let v = (codes::PROBE_PSC as u32) << 30 | 5 << 16 | (codes::PROBE_MEMBRANE as u32) << 14 | 7;
        chip.config_write(codes::PROBE_SELECT, v).unwrap();
        assert_eq!(chip.engine.test_outputs(), [TestOutput::Membrane(7), TestOutput::Psc(5)]);
        assert_eq!(chip.config_read(codes::PROBE_SELECT).unwrap(), v);
        assert!(chip.config_write(codes::PROBE_SELECT, (codes::PROBE_MEMBRANE as u32) << 14 | 64).is_err());
    }

    #[test]
    fn chip_spike_path() {
        let mut chip = Chip::new(Engine::default());
        chip.engine.configure_background(3, 15, Sign::Excitatory).unwrap();
        let host_in = chip.input();
        let host_out = chip.output();
        host_in.push(encode_input(&InputEvent::ConfigRead { addr: codes::CLOCK_DIVIDER }).unwrap()).unwrap();
        let mut vectors = Vec::new();
        for _ in 0..40 {
            vectors.push(chip.step().unwrap());
        }
        let out = host_out.drain();
        assert_eq!(decode_output(out[0]).unwrap(), OutputEvent::ConfigReadback(100));
        let expected: Vec<u64> = vectors.into_iter().filter(|&v| v != 0).collect();
        assert!(!expected.is_empty());
        assert_eq!(collect_spike_vectors(&out).unwrap(), expected);

        host_in.push(encode_input_spikes(slots([(126, true), (3, true), (0, false), (0, false)]))).unwrap();
        chip.step().unwrap();
        assert!(chip.engine.presyn_state(126).unwrap().u == crate::Analog::ZERO);
        host_in.push(Packet { header: 0xF000, payload: 0 }).unwrap();
        assert!(chip.step().is_err());
    }

    #[test]
    fn background_row_not_addressable_over_the_wire() {
        let mut chip = Chip::new(Engine::default());
        chip.input().push(encode_input_spikes(slots([(127, true), (0, false), (0, false), (0, false)]))).unwrap();
        assert!(matches!(chip.step(), Err(Error::Index { .. })));
    }

    #[test]
    fn loopback_and_files() {
        let packets = vec![
            encode_input_spikes(slots([(1, true), (2, true), (3, false), (4, true)])),
            encode_input(&InputEvent::ConfigWrite { addr: 0xA00, value: 1 }).unwrap(),
        ];
        let mut lb = Loopback::default();
        for &p in &packets {
            lb.send(p).unwrap();
        }
        assert_eq!(lb.recv().unwrap(), Some(packets[0]));
        assert_eq!(lb.recv().unwrap(), Some(packets[1]));
        assert_eq!(lb.recv().unwrap(), None);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stim.pkt");
        write_pkt_file(&path, &packets).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 12);
        assert_eq!(read_pkt_file(&path).unwrap(), packets);
        assert!(read_packets(&[0u8; 7][..]).is_err());
    }

    #[test]
    fn hex_form() {
        let p = encode_input_spikes(slots([(5, true), (0, false), (0, false), (0, false)]));
        assert_eq!(p.to_hex(), "000085000000");
        assert_eq!(Packet::from_hex("00 00 85 00 00 00").unwrap(), p);
        assert!(Packet::from_hex("0000").is_err());
        assert!(Packet::from_hex("zz0085000000").is_err());
    }

    fn arb_event() -> impl Strategy<Value = InputEvent> {
        prop_oneof![
            proptest::array::uniform4((0u8..128, any::<bool>()))
                .prop_map(|s| InputEvent::Spikes(s.map(|(addr, enable)| SpikeSlot { addr, enable }))),
            (0u16..0x1000, any::<u32>()).prop_map(|(addr, value)| InputEvent::ConfigWrite { addr, value }),
            (0u16..0x1000).prop_map(|addr| InputEvent::ConfigRead { addr }),
        ]
    }

    proptest! {
        #[test]
        fn input_event_round_trip(ev in arb_event()) {
            let p = encode_input(&ev).unwrap();
            prop_assert_eq!(decode_packet(p).unwrap(), ev);
            prop_assert_eq!(Packet::from_bytes(p.to_bytes()), p);
        }

        #[test]
        fn decodable_packets_re_encode(header in any::<u16>(), payload in any::<u32>()) {
            let p = Packet { header, payload };
            if let Ok(ev) = decode_packet(p) {
                prop_assert_eq!(encode_input(&ev).unwrap(), p);
            }
            if let Ok(ev) = decode_output(p) {
                prop_assert_eq!(encode_output(&ev), p);
            }
        }

        #[test]
        fn fifo_preserves_order(ops in proptest::collection::vec(any::<Option<u32>>(), 0..300)) {
            let f = Fifo::new(16);
            let mut model = VecDeque::new();
            for op in ops {
                match op {
                    Some(v) => {
                        let p = Packet { header: 0, payload: v };
                        let r = f.push(p);
                        if model.len() < 16 {
                            prop_assert!(r.is_ok());
                            model.push_back(p);
                        } else {
                            prop_assert!(r.is_err());
                        }
                    }
                    None => prop_assert_eq!(f.pop(), model.pop_front()),
                }
            }
            prop_assert_eq!(f.drain(), Vec::from(model));
        }
    }
}
