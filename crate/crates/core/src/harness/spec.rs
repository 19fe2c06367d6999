//! Experiment descriptions and their INI text form.
//!
//! Grammar (format version 1). Blank lines and lines starting with `#` or
//! `;` are ignored; every other line is a `[section]` header or a
//! `key = value` pair. Numbers may be decimal or `0x` hexadecimal. Lists are
//! separated by commas or whitespace; an item `a..=b` or `a..=b:step`
//! expands to an inclusive range.
//!
//! ```text
//! [experiment]
//! version = 1
//! name = my-run
//! description = free text
//! duration_cycles = 1000        # or duration_ms
//! seed = 1                      # overridden by SCNN_SEED
//! divider = 100                 # clock divider; 100 is realtime, 1 is 100x faster
//! charge_gain = 0.0026666       # membrane mV per PSC mV per weight LSB
//! fit = decay                   # decay | relaxation
//!
//! [engine]                      # applied before the first cycle
//! presyn.<group|*>.<u|alpha|tau_u|tau_r|tau_psc|gain> = <code>
//! neuron.<group|*>.<thresh|reset|tau_m> = <code>
//! background_level = <dac code>
//! weight.<row>.<col> = <0..=15> [exc|inh]
//!
//! [schedule]                    # repeatable
//! write = <cycle> <address> <value>
//!
//! [stimulus]
//! row.<r> = regular <rate_hz> <count> [start_cycle]
//! row.<r> = poisson <rate_hz>
//! row.<r> = times <cycle> <cycle> ...
//!
//! [probe]
//! 0 = psc <row> | membrane <col> | off
//! 1 = ...
//!
//! [sweep]                       # turns the run into a transfer-function sweep
//! axis = weight | tau_m | none
//! values = 1..=15
//! rows = 0 1 2 3 4
//! neuron = 0
//! rates = 0..=200:10
//! train = regular               # or: poisson (seeded per row and point)
//! window = output 50 150        # or: input 0 100
//! rate_window_ms = 10000
//! settle_ms = 500
//! ```

use std::fmt::Write as _;

use crate::engine::TestOutput;
use crate::error::{Error, Result};
use crate::plasticity::{Sign, BACKGROUND_ROW, N_COLS, N_ROWS};
use crate::protocol::{codes, Chip};
use crate::sc::BIO_CYCLE_MS;
use crate::Engine;

use super::fit::DEFAULT_OUTPUT_WINDOW_HZ;
use super::stimulus::MAX_RATE_HZ;

pub const SPEC_FORMAT_VERSION: u32 = 1;
pub const SEED_ENV: &str = "SCNN_SEED";
/// Rate measurement window per sweep point.
pub const DEFAULT_RATE_WINDOW_MS: f64 = 10_000.0;
pub const DEFAULT_SETTLE_MS: f64 = 500.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Train {
    Regular { rate_hz: f64, count: usize, start: u64 },
    Poisson { rate_hz: f64 },
    Times(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowStimulus {
    pub row: usize,
    pub train: Train,
}

/// Configuration write issued before the given cycle is processed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConfigWrite {
    pub cycle: u64,
    pub addr: u16,
    pub value: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightSetting {
    pub row: usize,
    pub col: usize,
    pub weight: u8,
    pub sign: Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitRequest {
    /// Exponential fit of probe 0 after the last input spike.
    Decay,
    /// Resource recovery of the first stimulated row, from the spikes after
    /// the last scheduled write.
    Relaxation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    None,
    /// Weight of every swept row onto the swept neuron.
    Weight,
    /// Membrane divider code of all neuron groups.
    TauM,
}

/// Spike statistics of the swept inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepTrain {
    /// Phase-staggered regular trains at the exact mean rate.
    Regular,
    /// Independent seeded Poisson trains.
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitWindow {
    Output(f64, f64),
    Input(f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<u8>,
    pub rows: Vec<usize>,
    pub neuron: usize,
    pub rates_hz: Vec<f64>,
    pub train: SweepTrain,
    pub window: FitWindow,
    pub rate_window_ms: f64,
    pub settle_ms: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep {
            axis: SweepAxis::None,
            values: vec![0],
            rows: vec![0],
            neuron: 0,
            rates_hz: Vec::new(),
            train: SweepTrain::Regular,
            window: FitWindow::Output(DEFAULT_OUTPUT_WINDOW_HZ.0, DEFAULT_OUTPUT_WINDOW_HZ.1),
            rate_window_ms: DEFAULT_RATE_WINDOW_MS,
            settle_ms: DEFAULT_SETTLE_MS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub description: String,
    pub duration_cycles: u64,
    pub seed: u64,
    pub divider: u8,
    pub charge_gain: Option<f64>,
    pub weights: Vec<WeightSetting>,
    pub writes: Vec<ConfigWrite>,
    pub stimulus: Vec<RowStimulus>,
    pub probes: [TestOutput; 2],
    pub fit: Option<FitRequest>,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "unnamed".into(),
            description: String::new(),
            duration_cycles: 1000,
            seed: 0,
            divider: crate::sc::REALTIME_DIVIDER,
            charge_gain: None,
            weights: Vec::new(),
            writes: Vec::new(),
            stimulus: Vec::new(),
            probes: [TestOutput::Off; 2],
            fit: None,
            sweep: None,
        }
    }
}

/// Presynaptic register slots, in address order.
pub const PRESYN_PARAMS: [&str; 6] = ["u", "alpha", "tau_u", "tau_r", "tau_psc", "gain"];
/// Neuron register slots, in address order.
pub const NEURON_PARAMS: [&str; 3] = ["thresh", "reset", "tau_m"];

/// Writes setting one presynaptic register in `group` (all groups if `None`).
pub fn presyn_writes(group: Option<usize>, param: &str, code: u8) -> Result<Vec<ConfigWrite>> {
    group_writes(group, param, code, &PRESYN_PARAMS, codes::PRESYN_BASE, codes::PRESYN_STRIDE, N_ROWS / 16)
}

/// Writes setting one neuron register in `group` (all groups if `None`).
pub fn neuron_writes(group: Option<usize>, param: &str, code: u8) -> Result<Vec<ConfigWrite>> {
    group_writes(group, param, code, &NEURON_PARAMS, codes::NEURON_BASE, codes::NEURON_STRIDE, N_COLS / 16)
}

fn group_writes(
    group: Option<usize>,
    param: &str,
    code: u8,
    names: &[&str],
    base: u16,
    stride: u16,
    n_groups: usize,
) -> Result<Vec<ConfigWrite>> {
    let slot = names
        .iter()
        .position(|&n| n == param)
        .ok_or_else(|| Error::config(format!("unknown parameter '{param}'")))?;
    let groups: Vec<usize> = match group {
        Some(g) if g >= n_groups => {
            return Err(Error::Index { what: "parameter group", value: g, max: n_groups - 1 })
        }
        Some(g) => vec![g],
        None => (0..n_groups).collect(),
    };
    Ok(groups
        .into_iter()
        .map(|g| ConfigWrite { cycle: 0, addr: base + stride * g as u16 + slot as u16, value: code as u32 })
        .collect())
}

impl ExperimentSpec {
    pub fn is_sweep(&self) -> bool {
        self.sweep.is_some()
    }

    /// Engine with weights, divider, charge gain and the cycle-0 writes applied.
    pub fn build_chip(&self) -> Result<Chip> {
        let mut chip = Chip::new(Engine::default());
        chip.engine.set_speedup(self.divider)?;
        if let Some(g) = self.charge_gain {
            chip.engine.set_charge_gain(crate::presynapse::ChargeGain::from_f64(g)?);
        }
        for w in &self.weights {
            chip.engine.write_synapse(w.row, w.col, crate::plasticity::SynapseWord::fixed(w.weight, w.sign)?)?;
        }
        for slot in 0..2 {
            chip.engine.set_test_output(slot, self.probes[slot])?;
        }
        for w in self.writes.iter().filter(|w| w.cycle == 0) {
            chip.config_write(w.addr, w.value)?;
        }
        Ok(chip)
    }

    /// Checks the whole description without simulating.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config(format!("invalid experiment name '{}'", self.name)));
        }
        let mut chip = self.build_chip()?;
        let mut writes = self.writes.clone();
        writes.sort_by_key(|w| w.cycle);
        for w in writes.iter().filter(|w| w.cycle > 0) {
            if w.cycle >= self.duration_cycles && self.sweep.is_none() {
                return Err(Error::config(format!("write at cycle {} is past the end of the run", w.cycle)));
            }
            chip.config_write(w.addr, w.value)?;
        }
        for s in &self.stimulus {
            if s.row >= BACKGROUND_ROW {
                return Err(Error::Index { what: "stimulus row", value: s.row, max: BACKGROUND_ROW - 1 });
            }
            match &s.train {
                Train::Regular { rate_hz, .. } => {
                    super::stimulus::gen_regular_train(*rate_hz, 0, 0)?;
                }
                Train::Poisson { rate_hz } => {
                    super::stimulus::gen_poisson_train(*rate_hz, 0, 0)?;
                }
                Train::Times(_) => {}
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.rows.is_empty() {
                return Err(Error::config("sweep needs at least one input row"));
            }
            if let Some(&r) = sw.rows.iter().find(|&&r| r >= BACKGROUND_ROW) {
                return Err(Error::Index { what: "sweep row", value: r, max: BACKGROUND_ROW - 1 });
            }
            if sw.neuron >= N_COLS {
                return Err(Error::Index { what: "neuron", value: sw.neuron, max: N_COLS - 1 });
            }
            if sw.values.is_empty() || sw.rates_hz.is_empty() {
                return Err(Error::config("sweep needs values and rates"));
            }
            let max = match sw.axis {
                SweepAxis::None => u8::MAX,
                SweepAxis::Weight => 15,
                SweepAxis::TauM => crate::sc::MAX_DIVIDER_CODE,
            };
            if let Some(v) = sw.values.iter().find(|&&v| v > max) {
                return Err(Error::config(format!("sweep value {v} out of range")));
            }
            if let Some(r) = sw.rates_hz.iter().find(|r| !(0.0..=MAX_RATE_HZ).contains(*r)) {
                return Err(Error::domain(format!("sweep rate {r} Hz out of range")));
            }
            let (FitWindow::Output(lo, hi) | FitWindow::Input(lo, hi)) = sw.window;
            if !(lo < hi) {
                return Err(Error::config("fit window must have lo < hi"));
            }
            if !(sw.rate_window_ms >= BIO_CYCLE_MS) || !(sw.settle_ms >= 0.0) {
                return Err(Error::config("rate window must span at least one cycle"));
            }
        }
        Ok(())
    }

    /// Replaces the seed from the environment if `SCNN_SEED` is set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var(SEED_ENV) {
            self.seed = parse_u64(s.trim()).map_err(|e| Error::config(format!("{SEED_ENV}: {e}")))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_spec(text)
    }

    /// INI text that parses back to an equal description.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]\nversion = {SPEC_FORMAT_VERSION}\nname = {}", self.name);
        if !self.description.is_empty() {
            let _ = writeln!(s, "description = {}", self.description);
        }
        let _ = writeln!(s, "duration_cycles = {}\nseed = {}\ndivider = {}", self.duration_cycles, self.seed, self.divider);
        if let Some(g) = self.charge_gain {
            let _ = writeln!(s, "charge_gain = {g:?}");
        }
        match self.fit {
            Some(FitRequest::Decay) => s.push_str("fit = decay\n"),
            Some(FitRequest::Relaxation) => s.push_str("fit = relaxation\n"),
            None => {}
        }
        if !self.weights.is_empty() {
            s.push_str("\n[engine]\n");
            for w in &self.weights {
                let sign = if w.sign == Sign::Inhibitory { " inh" } else { "" };
                let _ = writeln!(s, "weight.{}.{} = {}{sign}", w.row, w.col, w.weight);
            }
        }
        if !self.writes.is_empty() {
            s.push_str("\n[schedule]\n");
            for w in &self.writes {
                let _ = writeln!(s, "write = {} {:#05x} {}", w.cycle, w.addr, w.value);
            }
        }
        if !self.stimulus.is_empty() {
            s.push_str("\n[stimulus]\n");
            for st in &self.stimulus {
                let body = match &st.train {
                    Train::Regular { rate_hz, count, start } => format!("regular {rate_hz:?} {count} {start}"),
                    Train::Poisson { rate_hz } => format!("poisson {rate_hz:?}"),
                    Train::Times(t) => {
                        let ts: Vec<String> = t.iter().map(u64::to_string).collect();
                        format!("times {}", ts.join(" "))
                    }
                };
                let _ = writeln!(s, "row.{} = {body}", st.row);
            }
        }
        s.push_str("\n[probe]\n");
        for (i, p) in self.probes.iter().enumerate() {
            let body = match p {
                TestOutput::Off => "off".to_string(),
                TestOutput::Membrane(c) => format!("membrane {c}"),
                TestOutput::Psc(r) => format!("psc {r}"),
            };
            let _ = writeln!(s, "{i} = {body}");
        }
        if let Some(sw) = &self.sweep {
            let axis = match sw.axis {
                SweepAxis::None => "none",
                SweepAxis::Weight => "weight",
                SweepAxis::TauM => "tau_m",
            };
            let join = |v: Vec<String>| v.join(" ");
            let window = match sw.window {
                FitWindow::Output(lo, hi) => format!("output {lo:?} {hi:?}"),
                FitWindow::Input(lo, hi) => format!("input {lo:?} {hi:?}"),
            };
            let _ = writeln!(
                s,
                "\n[sweep]\naxis = {axis}\nvalues = {}\nrows = {}\nneuron = {}\nrates = {}\ntrain = {}\nwindow = {window}\nrate_window_ms = {:?}\nsettle_ms = {:?}",
                join(sw.values.iter().map(u8::to_string).collect()),
                join(sw.rows.iter().map(usize::to_string).collect()),
                sw.neuron,
                join(sw.rates_hz.iter().map(|r| format!("{r:?}")).collect()),
                if sw.train == SweepTrain::Poisson { "poisson" } else { "regular" },
                sw.rate_window_ms,
                sw.settle_ms,
            );
        }
        s
    }
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("bad integer '{s}': {e}"))
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse().map_err(|e| format!("bad number '{s}': {e}"))
}

fn parse_int<T: TryFrom<u64>>(s: &str) -> std::result::Result<T, String> {
    T::try_from(parse_u64(s)?).map_err(|_| format!("'{s}' out of range"))
}

/// Expands a list with optional `a..=b[:step]` ranges.
fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        match item.split_once("..=") {
            Some((a, rest)) => {
                let (b, step) = match rest.split_once(':') {
                    Some((b, st)) => (b, parse_f64(st)?),
                    None => (rest, 1.0),
                };
                let (a, b) = (parse_f64(a)?, parse_f64(b)?);
                if !(step > 0.0) {
                    return Err(format!("range step must be positive in '{item}'"));
                }
                let n = ((b - a) / step + 1e-9).floor();
                if n < 0.0 {
                    return Err(format!("empty range '{item}'"));
                }
                out.extend((0..=n as u64).map(|i| a + i as f64 * step));
            }
            None => out.push(parse_f64(item)?),
        }
    }
    Ok(out)
}

fn to_ints<T: TryFrom<u64>>(v: Vec<f64>) -> std::result::Result<Vec<T>, String> {
    v.into_iter()
        .map(|x| {
            if x < 0.0 || x.fract() != 0.0 {
                return Err(format!("{x} is not a non-negative integer"));
            }
            T::try_from(x as u64).map_err(|_| format!("{x} out of range"))
        })
        .collect()
}

fn parse_probe(v: &str) -> std::result::Result<TestOutput, String> {
    let toks: Vec<&str> = v.split_whitespace().collect();
    match toks.as_slice() {
        ["off"] => Ok(TestOutput::Off),
        ["psc", r] => Ok(TestOutput::Psc(parse_int(r)?)),
        ["membrane", c] => Ok(TestOutput::Membrane(parse_int(c)?)),
        _ => Err(format!("bad probe '{v}'")),
    }
}

fn parse_group(g: &str) -> std::result::Result<Option<usize>, String> {
    if g == "*" {
        Ok(None)
    } else {
        Ok(Some(parse_int(g)?))
    }
}

fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    let mut section = String::new();
    let mut duration_ms = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            section = name
                .strip_suffix(']')
                .ok_or_else(|| err("unterminated section header".into()))?
                .trim()
                .to_string();
            if !["experiment", "engine", "schedule", "stimulus", "probe", "sweep"].contains(&section.as_str()) {
                return Err(err(format!("unknown section [{section}]")));
            }
            if section == "sweep" && spec.sweep.is_none() {
                spec.sweep = Some(Sweep::default());
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
        let (key, value) = (key.trim(), strip_comment(value).trim());
        let parts: Vec<&str> = key.split('.').collect();
        let res: std::result::Result<(), String> = (|| {
            match (section.as_str(), parts.as_slice()) {
                ("experiment", ["version"]) => {
                    let v: u32 = parse_int(value)?;
                    if v != SPEC_FORMAT_VERSION {
                        return Err(format!("unsupported spec version {v}"));
                    }
                }
                ("experiment", ["name"]) => spec.name = value.to_string(),
                ("experiment", ["description"]) => spec.description = value.to_string(),
                ("experiment", ["duration_cycles"]) => spec.duration_cycles = parse_u64(value)?,
                ("experiment", ["duration_ms"]) => duration_ms = Some(parse_f64(value)?),
                ("experiment", ["seed"]) => spec.seed = parse_u64(value)?,
                ("experiment", ["divider"]) => spec.divider = parse_int(value)?,
                ("experiment", ["charge_gain"]) => spec.charge_gain = Some(parse_f64(value)?),
                ("experiment", ["fit"]) => {
                    spec.fit = match value {
                        "decay" => Some(FitRequest::Decay),
                        "relaxation" => Some(FitRequest::Relaxation),
                        "none" => None,
                        _ => return Err(format!("unknown fit '{value}'")),
                    }
                }
                ("engine", ["presyn", g, p]) => {
                    let w = presyn_writes(parse_group(g)?, p, parse_int(value)?).map_err(|e| e.to_string())?;
                    spec.writes.extend(w);
                }
                ("engine", ["neuron", g, p]) => {
                    let w = neuron_writes(parse_group(g)?, p, parse_int(value)?).map_err(|e| e.to_string())?;
                    spec.writes.extend(w);
                }
                ("engine", ["background_level"]) => spec.writes.push(ConfigWrite {
                    cycle: 0,
                    addr: codes::BACKGROUND_LEVEL,
                    value: parse_int::<u8>(value)? as u32,
                }),
                ("engine", ["weight", r, c]) => {
                    let toks: Vec<&str> = value.split_whitespace().collect();
                    let (w, sign) = match toks.as_slice() {
                        [w] | [w, "exc"] => (w, Sign::Excitatory),
                        [w, "inh"] => (w, Sign::Inhibitory),
                        _ => return Err(format!("bad weight '{value}'")),
                    };
                    spec.weights.push(WeightSetting {
                        row: parse_int(r)?,
                        col: parse_int(c)?,
                        weight: parse_int(w)?,
                        sign,
                    });
                }
                ("schedule", ["write"]) => {
                    let toks: Vec<&str> = value.split_whitespace().collect();
                    let [c, a, v] = toks.as_slice() else {
                        return Err("write needs <cycle> <address> <value>".into());
                    };
                    spec.writes.push(ConfigWrite { cycle: parse_u64(c)?, addr: parse_int(a)?, value: parse_int(v)? });
                }
                ("stimulus", ["row", r]) => {
                    let toks: Vec<&str> = value.split_whitespace().collect();
                    let train = match toks.as_slice() {
                        ["regular", rate, count] => {
                            Train::Regular { rate_hz: parse_f64(rate)?, count: parse_int(count)?, start: 0 }
                        }
                        ["regular", rate, count, start] => Train::Regular {
                            rate_hz: parse_f64(rate)?,
                            count: parse_int(count)?,
                            start: parse_u64(start)?,
                        },
                        ["poisson", rate] => Train::Poisson { rate_hz: parse_f64(rate)? },
                        ["times", ts @ ..] => Train::Times(ts.iter().map(|t| parse_u64(t)).collect::<std::result::Result<_, _>>()?),
                        _ => return Err(format!("bad stimulus '{value}'")),
                    };
                    spec.stimulus.push(RowStimulus { row: parse_int(r)?, train });
                }
                ("probe", [slot]) => {
                    let slot: usize = parse_int(slot)?;
                    *spec.probes.get_mut(slot).ok_or("probe slot must be 0 or 1")? = parse_probe(value)?;
                }
                ("sweep", [k]) => {
                    let sw = spec.sweep.as_mut().expect("created with the section");
                    match *k {
                        "axis" => {
                            sw.axis = match value {
                                "none" => SweepAxis::None,
                                "weight" => SweepAxis::Weight,
                                "tau_m" => SweepAxis::TauM,
                                _ => return Err(format!("unknown sweep axis '{value}'")),
                            }
                        }
                        "values" => sw.values = to_ints(parse_list(value)?)?,
                        "rows" => sw.rows = to_ints(parse_list(value)?)?,
                        "neuron" => sw.neuron = parse_int(value)?,
                        "rates" => sw.rates_hz = parse_list(value)?,
                        "train" => {
                            sw.train = match value {
                                "regular" => SweepTrain::Regular,
                                "poisson" => SweepTrain::Poisson,
                                _ => return Err(format!("unknown train '{value}'")),
                            }
                        }
                        "window" => {
                            let toks: Vec<&str> = value.split_whitespace().collect();
                            sw.window = match toks.as_slice() {
                                ["output", lo, hi] => FitWindow::Output(parse_f64(lo)?, parse_f64(hi)?),
                                ["input", lo, hi] => FitWindow::Input(parse_f64(lo)?, parse_f64(hi)?),
                                _ => return Err(format!("bad window '{value}'")),
                            }
                        }
                        "rate_window_ms" => sw.rate_window_ms = parse_f64(value)?,
                        "settle_ms" => sw.settle_ms = parse_f64(value)?,
                        _ => return Err(format!("unknown sweep key '{k}'")),
                    }
                }
                ("", _) => return Err("key outside of any section".into()),
                _ => return Err(format!("unknown key '{key}' in [{section}]")),
            }
            Ok(())
        })();
        res.map_err(err)?;
    }
    if let Some(ms) = duration_ms {
        if !(ms >= 0.0) {
            return Err(Error::config("duration must be non-negative"));
        }
        spec.duration_cycles = (ms / BIO_CYCLE_MS).round() as u64;
    }
    Ok(spec)
}

fn strip_comment(v: &str) -> &str {
    match v.find(" #") {
        Some(i) => &v[..i],
        None => v,
    }
}
