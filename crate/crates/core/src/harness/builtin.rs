//! Built-in characterization runs.

use crate::engine::TestOutput;
use crate::plasticity::{Sign, BACKGROUND_ROW};
use crate::protocol::codes;

use super::spec::{
    neuron_writes, presyn_writes, ConfigWrite, ExperimentSpec, FitRequest, FitWindow, RowStimulus, Sweep,
    SweepAxis, SweepTrain, Train, WeightSetting,
};

pub const BUILTIN_NAMES: [(&str, &str); 8] = [
    ("fig5-psc-psp", "single PSC and alpha-shaped PSP, tau_psc = tau_mem = 12 ms"),
    ("fig6-depression", "depressing synapse, 10 spikes at 50 Hz, then relaxation with alpha = 0"),
    ("fig7-facilitation", "facilitating synapse, 10 spikes at 50 Hz"),
    ("fig7-combined", "facilitation and depression combined, 10 spikes at 50 Hz"),
    ("fig9-transfer", "non-leaky transfer function, input on 5 synapses"),
    ("fig10-onset", "transfer functions over membrane time constants, onset frequencies"),
    ("fig11-weight-sweep", "transfer function of one synapse for weights 0..15, tau_mem infinite"),
    ("fig11-background", "weight sweep on top of a background drive firing near 85 Hz"),
];

/// Presynaptic register codes: U, alpha, tau_u, tau_R, tau_psc, gain.
type StpCodes = [u8; 6];

/// Constant-amplitude synapse: full utilization, no depression.
const STATIC_STP: StpCodes = [63, 0, 0, 0, 10, 127];

fn stp(group: Option<usize>, c: StpCodes) -> Vec<ConfigWrite> {
    ["u", "alpha", "tau_u", "tau_r", "tau_psc", "gain"]
        .iter()
        .zip(c)
        .flat_map(|(p, code)| presyn_writes(group, p, code).expect("valid built-in"))
        .collect()
}

fn neurons(thresh: u8, reset: u8, tau_m: u8) -> Vec<ConfigWrite> {
    [("thresh", thresh), ("reset", reset), ("tau_m", tau_m)]
        .iter()
        .flat_map(|&(p, code)| neuron_writes(None, p, code).expect("valid built-in"))
        .collect()
}

fn exc(row: usize, col: usize, weight: u8) -> WeightSetting {
    WeightSetting { row, col, weight, sign: Sign::Excitatory }
}

fn stp_train(name: &str, description: &str, c: StpCodes) -> ExperimentSpec {
    let mut writes = stp(None, c);
    writes.extend(neurons(127, 64, 1));
    ExperimentSpec {
        name: name.into(),
        description: description.into(),
        duration_cycles: 500,
        writes,
        stimulus: vec![RowStimulus { row: 0, train: Train::Regular { rate_hz: 50.0, count: 10, start: 10 } }],
        probes: [TestOutput::Psc(0), TestOutput::Off],
        ..ExperimentSpec::default()
    }
}

fn rates(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Synapse drive for the multi-input transfer functions: long PSCs keep
/// the membrane current smooth; PSCs saturate above roughly 250 Hz.
const TRANSFER_STP: StpCodes = [63, 0, 0, 0, 62, 67];
/// Single-synapse drive for the weight sweep: no saturation up to 100 Hz.
const WEIGHT_SWEEP_STP: StpCodes = [63, 0, 0, 0, 20, 75];
/// Stronger drive for the background regime, where the input only
/// modulates an already firing neuron.
const BACKGROUND_SWEEP_STP: StpCodes = [63, 0, 0, 0, 20, 89];
const TRANSFER_ROWS: [usize; 5] = [0, 1, 2, 3, 4];

fn weight_sweep(rate_window_ms: f64) -> Sweep {
    Sweep {
        axis: SweepAxis::Weight,
        values: (0..=15).collect(),
        rows: vec![0],
        rates_hz: rates(0.0, 100.0, 10.0),
        window: FitWindow::Input(0.0, 100.0),
        rate_window_ms,
        ..Sweep::default()
    }
}

pub fn builtin(name: &str) -> Option<ExperimentSpec> {
    let (_, description) = BUILTIN_NAMES.iter().find(|(n, _)| *n == name)?;
    Some(match name {
        "fig5-psc-psp" => {
            let mut writes = stp(None, STATIC_STP);
            writes.extend(neurons(127, 64, 10));
            ExperimentSpec {
                name: name.into(),
                description: description.to_string(),
                duration_cycles: 250,
                weights: vec![exc(0, 0, 15)],
                writes,
                stimulus: vec![RowStimulus { row: 0, train: Train::Times(vec![10]) }],
                probes: [TestOutput::Psc(0), TestOutput::Membrane(0)],
                fit: Some(FitRequest::Decay),
                ..ExperimentSpec::default()
            }
        }
        "fig6-depression" => {
            let mut s = stp_train(name, description, [61, 32, 1, 51, 11, 127]);
            // Adaptation off after the train; probe spikes every 50 ms.
            s.writes.push(ConfigWrite { cycle: 300, addr: codes::PRESYN_BASE + codes::PRESYN_ALPHA, value: 0 });
            s.stimulus.push(RowStimulus { row: 0, train: Train::Times((0..16).map(|i| 381 + 81 * i).collect()) });
            s.duration_cycles = 1700;
            s.fit = Some(FitRequest::Relaxation);
            s
        }
        "fig7-facilitation" => stp_train(name, description, [8, 55, 51, 1, 11, 127]),
        "fig7-combined" => stp_train(name, description, [19, 32, 31, 31, 8, 127]),
        "fig9-transfer" => {
            let mut writes = stp(None, TRANSFER_STP);
            writes.extend(neurons(102, 64, 0));
            ExperimentSpec {
                name: name.into(),
                description: description.to_string(),
                weights: TRANSFER_ROWS.iter().map(|&r| exc(r, 0, 3)).collect(),
                writes,
                sweep: Some(Sweep {
                    axis: SweepAxis::None,
                    values: vec![0],
                    rows: TRANSFER_ROWS.to_vec(),
                    rates_hz: rates(0.0, 400.0, 10.0),
                    // Linear range only; the PSCs saturate above about 230 Hz.
                    window: FitWindow::Input(0.0, 220.0),
                    ..Sweep::default()
                }),
                ..ExperimentSpec::default()
            }
        }
        "fig10-onset" => {
            let mut writes = stp(None, TRANSFER_STP);
            // Reset close to threshold keeps the transfer function linear
            // with its onset near rheobase; the threshold stays well clear
            // of the rail so the shortest time constant can still reach it.
            writes.extend(neurons(102, 95, 0));
            ExperimentSpec {
                name: name.into(),
                description: description.to_string(),
                weights: TRANSFER_ROWS.iter().map(|&r| exc(r, 0, 6)).collect(),
                writes,
                sweep: Some(Sweep {
                    axis: SweepAxis::TauM,
                    values: vec![6, 9, 12, 18, 24, 36, 48, 60],
                    rows: TRANSFER_ROWS.to_vec(),
                    rates_hz: rates(0.0, 220.0, 2.0),
                    // Irregular input avoids phase locking to the input trains.
                    train: SweepTrain::Poisson,
                    window: FitWindow::Output(50.0, 150.0),
                    rate_window_ms: 5000.0,
                    settle_ms: 300.0,
                    ..Sweep::default()
                }),
                ..ExperimentSpec::default()
            }
        }
        "fig11-weight-sweep" => {
            let mut writes = stp(None, WEIGHT_SWEEP_STP);
            writes.extend(neurons(89, 64, 0));
            ExperimentSpec {
                name: name.into(),
                description: description.to_string(),
                writes,
                sweep: Some(weight_sweep(20_000.0)),
                ..ExperimentSpec::default()
            }
        }
        "fig11-background" => {
            let mut writes = stp(None, BACKGROUND_SWEEP_STP);
            writes.extend(neurons(89, 64, 0));
            // Background drive sets the unstimulated rate near 85 Hz.
            writes.push(ConfigWrite { cycle: 0, addr: codes::BACKGROUND_LEVEL, value: 98 });
            ExperimentSpec {
                name: name.into(),
                description: description.to_string(),
                weights: vec![exc(BACKGROUND_ROW, 0, 15)],
                writes,
                sweep: Some(weight_sweep(10_000.0)),
                ..ExperimentSpec::default()
            }
        }
        _ => return None,
    })
}
