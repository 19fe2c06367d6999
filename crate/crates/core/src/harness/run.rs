//! Running experiment descriptions and writing their artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::{ProbeRecorder, TestOutput};
use crate::error::{Error, Result};
use crate::plasticity::{Sign, SynapseWord};
use crate::protocol::{encode_input, encode_spike_rows, Chip, InputEvent};
use crate::sc::{tau_from_divider, TickGranularity, BIO_CYCLE_MS};

use super::fit::{
    fit_exponential, fit_input_window, fit_linear_window, onset_of, ExpFit, LineFit, RatePoint, Trace,
};
use super::spec::{neuron_writes, ExperimentSpec, FitRequest, FitWindow, Sweep, SweepAxis, SweepTrain, Train};
use super::stimulus::{gen_poisson_train, gen_rate_train, gen_regular_train};
use super::svg::{line_chart, Series};

/// Samples below this level (mV, or dimensionless for state variables)
/// are excluded from decay fits; fixed-point truncation dominates there.
pub const DECAY_FLOOR: f64 = 0.25;

/// State of one stimulated row right after a spike.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeRecord {
    pub cycle: u64,
    pub row: usize,
    /// `u'·R` of this spike.
    pub amplitude: f64,
    /// Utilization after facilitation, used for this spike.
    pub u: f64,
    /// Resources at the end of the spike's cycle.
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferCurve {
    /// Sweep value (weight or divider code).
    pub key: u8,
    /// Membrane time constant for membrane sweeps.
    pub tau_ms: Option<f64>,
    pub points: Vec<RatePoint>,
    pub fit: Option<LineFit>,
    pub onset_hz: Option<f64>,
    pub fit_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub probes: ProbeRecorder,
    /// Cycles with output spikes and their fired vectors.
    pub spikes: Vec<(u64, u64)>,
    pub amplitudes: Vec<AmplitudeRecord>,
    pub decay_fit: Option<ExpFit>,
    pub relaxation_fit: Option<ExpFit>,
    pub curves: Vec<TransferCurve>,
    pub final_state_hash: Option<u64>,
    pub warnings: Vec<String>,
}

/// Leading samples of a decaying trace down to `floor`.
pub fn decay_tail(first_cycle: u64, values: &[f64], floor: f64) -> Trace {
    let n = values.iter().position(|&v| v < floor).unwrap_or(values.len());
    Trace::from_cycles(first_cycle, values[..n].to_vec())
}

fn spike_schedule(spec: &ExperimentSpec, duration: u64) -> Result<BTreeMap<u64, Vec<usize>>> {
    let mut sched: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for s in &spec.stimulus {
        let times = match &s.train {
            Train::Regular { rate_hz, count, start } => gen_regular_train(*rate_hz, *count, *start)?,
            Train::Poisson { rate_hz } => gen_poisson_train(*rate_hz, duration, spec.seed.wrapping_add(s.row as u64))?,
            Train::Times(t) => t.clone(),
        };
        for t in times.into_iter().filter(|&t| t < duration) {
            sched.entry(t).or_default().push(s.row);
        }
    }
    Ok(sched)
}

fn neuron_warnings(chip: &Chip) -> Vec<String> {
    let mut w = Vec::new();
    for (g, p) in chip.engine.groups().neuron.iter().enumerate() {
        for msg in p.warnings() {
            w.push(format!("neuron group {g}: {msg}"));
        }
    }
    w
}

/// Runs a description to completion. Sweeps run one engine per point on
/// the rayon pool; results are ordered by sweep value and rate.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut result = ExperimentResult {
        spec: spec.clone(),
        probes: ProbeRecorder::default(),
        spikes: Vec::new(),
        amplitudes: Vec::new(),
        decay_fit: None,
        relaxation_fit: None,
        curves: Vec::new(),
        final_state_hash: None,
        warnings: neuron_warnings(&spec.build_chip()?),
    };
    match &spec.sweep {
        Some(sw) => result.curves = run_sweep(spec, sw)?,
        None => run_trace(spec, &mut result)?,
    }
    Ok(result)
}

fn run_trace(spec: &ExperimentSpec, out: &mut ExperimentResult) -> Result<()> {
    let sched = spike_schedule(spec, spec.duration_cycles)?;
    let mut writes: BTreeMap<u64, Vec<(u16, u32)>> = BTreeMap::new();
    for w in spec.writes.iter().filter(|w| w.cycle > 0) {
        writes.entry(w.cycle).or_default().push((w.addr, w.value));
    }
    let mut chip = spec.build_chip()?;
    let input = chip.input();
    let output = chip.output();
    for cycle in 0..spec.duration_cycles {
        for &(addr, value) in writes.get(&cycle).into_iter().flatten() {
            input.push(encode_input(&InputEvent::ConfigWrite { addr, value })?)?;
        }
        let rows = sched.get(&cycle);
        if let Some(rows) = rows {
            input.push_all(&encode_spike_rows(rows)?)?;
        }
        let fired = chip.step()?;
        output.drain();
        out.probes.record(&chip.engine);
        if fired != 0 {
            out.spikes.push((cycle, fired));
        }
        for &row in rows.into_iter().flatten() {
            let s = chip.engine.presyn_state(row)?;
            out.amplitudes.push(AmplitudeRecord {
                cycle,
                row,
                amplitude: s.last_amplitude.to_f64(),
                u: s.last_utilization.to_f64(),
                r: s.r.to_f64(),
            });
        }
    }
    out.final_state_hash = Some(chip.engine.state_hash());

    match spec.fit {
        Some(FitRequest::Decay) => {
            let last = sched.keys().next_back().copied().unwrap_or(0);
            let values: Vec<f64> = out.probes.rows.iter().skip(last as usize).map(|r| r.values[0].unwrap_or(0.0)).collect();
            out.decay_fit = Some(fit_exponential(&decay_tail(last, &values, DECAY_FLOOR))?);
        }
        Some(FitRequest::Relaxation) => {
            let row = spec.stimulus.first().map(|s| s.row).ok_or_else(|| Error::config("relaxation fit needs a stimulus"))?;
            let from = spec.writes.iter().map(|w| w.cycle).max().unwrap_or(0);
            let (t, v): (Vec<f64>, Vec<f64>) = out
                .amplitudes
                .iter()
                .filter(|a| a.row == row && a.cycle >= from && a.u > 0.0)
                .map(|a| (a.cycle as f64 * BIO_CYCLE_MS, 1.0 - a.amplitude / a.u))
                .unzip();
            out.relaxation_fit = Some(fit_exponential(&Trace::new(t, v)?)?);
        }
        None => {}
    }
    Ok(())
}

/// Measures one transfer-function point: input and output rate of the
/// swept neuron over the rate window, after the settling period.
pub fn measure_rate(spec: &ExperimentSpec, sw: &Sweep, key: u8, rate_hz: f64) -> Result<RatePoint> {
    let mut chip = spec.build_chip()?;
    match sw.axis {
        SweepAxis::None => {}
        SweepAxis::Weight => {
            for &r in &sw.rows {
                chip.engine.write_synapse(r, sw.neuron, SynapseWord::fixed(key, Sign::Excitatory)?)?;
            }
        }
        SweepAxis::TauM => {
            for w in neuron_writes(None, "tau_m", key)? {
                chip.config_write(w.addr, w.value)?;
            }
        }
    }
    let settle = (sw.settle_ms / BIO_CYCLE_MS).round() as u64;
    let window = (sw.rate_window_ms / BIO_CYCLE_MS).round().max(1.0) as u64;
    let total = settle + window;
    let n = sw.rows.len();
    let mut events: Vec<(u64, usize)> = Vec::new();
    for (i, &row) in sw.rows.iter().enumerate() {
        let times = match sw.train {
            SweepTrain::Regular => gen_rate_train(rate_hz, total, i as f64 / n as f64)?,
            SweepTrain::Poisson => gen_poisson_train(rate_hz, total, point_seed(spec.seed, key, rate_hz, row))?,
        };
        events.extend(times.into_iter().map(|t| (t, row)));
    }
    events.sort_unstable();

    let input = chip.input();
    let output = chip.output();
    let (mut n_in, mut n_out) = (0u64, 0u64);
    let mut next = 0;
    let mut rows = Vec::with_capacity(n);
    for cycle in 0..total {
        rows.clear();
        while next < events.len() && events[next].0 == cycle {
            rows.push(events[next].1);
            next += 1;
        }
        if !rows.is_empty() {
            input.push_all(&encode_spike_rows(&rows)?)?;
        }
        let fired = chip.step()?;
        if fired != 0 {
            output.drain();
        }
        if cycle >= settle {
            n_in += rows.len() as u64;
            n_out += fired >> sw.neuron & 1;
        }
    }
    let secs = window as f64 * BIO_CYCLE_MS / 1000.0;
    Ok(RatePoint { input_hz: n_in as f64 / n as f64 / secs, output_hz: n_out as f64 / secs })
}

/// Independent stream per sweep point and row; stable across toolchains.
fn point_seed(seed: u64, key: u8, rate_hz: f64, row: usize) -> u64 {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    [key as u64, rate_hz.to_bits(), row as u64]
        .iter()
        .fold(mix(seed), |h, &v| mix(h.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ v))
}

fn run_sweep(spec: &ExperimentSpec, sw: &Sweep) -> Result<Vec<TransferCurve>> {
    let jobs: Vec<(u8, usize)> =
        sw.values.iter().flat_map(|&v| (0..sw.rates_hz.len()).map(move |i| (v, i))).collect();
    let mut points: Vec<((u8, usize), RatePoint)> = jobs
        .into_par_iter()
        .map(|(v, i)| measure_rate(spec, sw, v, sw.rates_hz[i]).map(|p| ((v, i), p)))
        .collect::<Result<_>>()?;
    points.sort_by_key(|&(k, _)| k);

    let mut keys = sw.values.clone();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys
        .into_iter()
        .map(|key| {
            let pts: Vec<RatePoint> = points.iter().filter(|(k, _)| k.0 == key).map(|&(_, p)| p).collect();
            let fit = match sw.window {
                FitWindow::Output(lo, hi) => fit_linear_window(&pts, lo, hi),
                FitWindow::Input(lo, hi) => fit_input_window(&pts, lo, hi),
            };
            let tau_ms = match sw.axis {
                SweepAxis::TauM => tau_from_divider(key, TickGranularity::PerEighthCycle).ok().and_then(|t| t.ms()),
                _ => None,
            };
            let (fit, onset_hz, fit_error) = match fit {
                Ok(f) => (Some(f), onset_of(&f).ok(), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            TransferCurve { key, tau_ms, points: pts, fit, onset_hz, fit_error }
        })
        .collect())
}

impl ExperimentResult {
    /// Human-readable digest of the fits.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment {}", self.spec.name);
        if !self.spec.description.is_empty() {
            let _ = writeln!(s, "  {}", self.spec.description);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        if self.spec.sweep.is_none() {
            let n_spikes: u32 = self.spikes.iter().map(|(_, f)| f.count_ones()).sum();
            let _ = writeln!(s, "  cycles: {}  output spikes: {n_spikes}", self.spec.duration_cycles);
        }
        if !self.amplitudes.is_empty() {
            let a: Vec<String> = self.amplitudes.iter().take(12).map(|a| format!("{:.4}", a.amplitude)).collect();
            let _ = writeln!(s, "  spike amplitudes: {}{}", a.join(" "), if self.amplitudes.len() > 12 { " ..." } else { "" });
        }
        if let Some(f) = self.decay_fit {
            let _ = writeln!(s, "  decay fit: amplitude {:.4}, tau {:.4} ms", f.amplitude, f.tau_ms);
        }
        if let Some(f) = self.relaxation_fit {
            let _ = writeln!(s, "  relaxation fit: tau {:.2} ms", f.tau_ms);
        }
        for c in &self.curves {
            let tau = c.tau_ms.map(|t| format!(" tau_m {t:.2} ms")).unwrap_or_default();
            match (&c.fit, &c.fit_error) {
                (Some(f), _) => {
                    let onset = c.onset_hz.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into());
                    let prod = match (c.tau_ms, c.onset_hz) {
                        (Some(t), Some(o)) => format!(" f_on*tau {:.1} ms*Hz", t * o),
                        _ => String::new(),
                    };
                    let _ = writeln!(
                        s,
                        "  key {:>2}{tau}: slope {:.6} intercept {:.4} Hz r2 {:.6} (n={}) onset {onset} Hz{prod}",
                        c.key, f.slope, f.intercept, f.r2, f.n
                    );
                }
                (None, Some(e)) => {
                    let _ = writeln!(s, "  key {:>2}{tau}: no fit ({e})", c.key);
                }
                _ => {}
            }
        }
        s
    }

    /// Writes CSV, SVG and summary files into `dir`; returns their paths.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let name = &self.spec.name;
        let mut files = Vec::new();
        let mut put = |file: String, bytes: Vec<u8>| -> Result<()> {
            let p = dir.join(file);
            fs::write(&p, bytes)?;
            files.push(p);
            Ok(())
        };

        if self.spec.sweep.is_none() {
            let mut buf = Vec::new();
            self.probes.write_csv(&mut buf)?;
            put(format!("{name}_trace.csv"), buf)?;
            let series: Vec<Series> = (0..2)
                .filter(|&i| self.spec.probes[i] != TestOutput::Off)
                .map(|i| {
                    let pts = self
                        .probes
                        .rows
                        .iter()
                        .filter_map(|r| r.values[i].map(|v| (r.cycle as f64 * BIO_CYCLE_MS, v)))
                        .collect();
                    Series::line(probe_label(self.spec.probes[i]), pts)
                })
                .collect();
            put(format!("{name}_trace.svg"), line_chart(name, "time (ms)", "voltage (mV)", &series).into_bytes())?;

            if !self.amplitudes.is_empty() {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["cycle", "row", "amplitude", "u", "r"])?;
                for a in &self.amplitudes {
                    w.write_record([
                        a.cycle.to_string(),
                        a.row.to_string(),
                        format!("{:.8}", a.amplitude),
                        format!("{:.8}", a.u),
                        format!("{:.8}", a.r),
                    ])?;
                }
                put(format!("{name}_amplitudes.csv"), csv_bytes(w)?)?;
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["cycle", "fired"])?;
            for (c, f) in &self.spikes {
                w.write_record([c.to_string(), format!("{f:016x}")])?;
            }
            put(format!("{name}_spikes.csv"), csv_bytes(w)?)?;
        } else {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["key", "input_hz", "output_hz"])?;
            for c in &self.curves {
                for p in &c.points {
                    w.write_record([c.key.to_string(), format!("{:.6}", p.input_hz), format!("{:.6}", p.output_hz)])?;
                }
            }
            put(format!("{name}_transfer.csv"), csv_bytes(w)?)?;

            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["key", "tau_ms", "slope", "intercept_hz", "r2", "onset_hz"])?;
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.8}")).unwrap_or_default();
            for c in &self.curves {
                w.write_record([
                    c.key.to_string(),
                    opt(c.tau_ms),
                    opt(c.fit.map(|f| f.slope)),
                    opt(c.fit.map(|f| f.intercept)),
                    opt(c.fit.map(|f| f.r2)),
                    opt(c.onset_hz),
                ])?;
            }
            put(format!("{name}_fits.csv"), csv_bytes(w)?)?;

            let axis = match self.spec.sweep.as_ref().map(|s| s.axis) {
                Some(SweepAxis::Weight) => "w",
                Some(SweepAxis::TauM) => "tau_m code",
                _ => "key",
            };
            let series: Vec<Series> = self
                .curves
                .iter()
                .map(|c| Series::line(format!("{axis} {}", c.key), c.points.iter().map(|p| (p.input_hz, p.output_hz)).collect()))
                .collect();
            put(
                format!("{name}_transfer.svg"),
                line_chart(name, "input rate (Hz)", "output rate (Hz)", &series).into_bytes(),
            )?;
        }
        put(format!("{name}_summary.txt"), self.summary().into_bytes())?;
        Ok(files)
    }
}

fn csv_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn probe_label(t: TestOutput) -> String {
    match t {
        TestOutput::Off => "off".into(),
        TestOutput::Membrane(c) => format!("membrane {c}"),
        TestOutput::Psc(r) => format!("psc {r}"),
    }
}
