use scnn_core::harness::{run_experiment, ExperimentSpec, SEED_ENV};
use scnn_core::sc::{tau_from_divider, TickGranularity};

const PSC_DECAY: &str = "
[experiment]
version = 1
name = psc-decay
duration_ms = 120
fit = decay

[engine]
presyn.*.u = 63
presyn.*.gain = 127
presyn.*.tau_psc = 20
neuron.*.thresh = 127

[stimulus]
row.0 = times 5

[probe]
0 = psc 0
1 = membrane 0
";

#[test]
fn decay_run_from_text() {
    let spec = ExperimentSpec::parse(PSC_DECAY).unwrap();
    assert_eq!(spec.duration_cycles, 194);
    let r = run_experiment(&spec).unwrap();
    let fit = r.decay_fit.unwrap();
    let tau = tau_from_divider(20, TickGranularity::PerEighthCycle).unwrap().ms().unwrap();
    assert!((fit.tau_ms / tau - 1.0).abs() < 0.02, "{} vs {tau}", fit.tau_ms);
    assert!((fit.amplitude - 246.09).abs() < 1.0);
    assert_eq!(r.probes.rows.len(), 194);
    // No synapse is programmed, so the membrane stays at rest.
    assert!(r.probes.rows.iter().all(|row| row.values[1] == Some(0.0)));
}

#[test]
fn artifacts_are_written() {
    let spec = ExperimentSpec::parse(PSC_DECAY).unwrap();
    let r = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = r.write_artifacts(dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in ["psc-decay_trace.csv", "psc-decay_trace.svg", "psc-decay_spikes.csv", "psc-decay_summary.txt"] {
        assert!(names.iter().any(|n| n == want), "missing {want} in {names:?}");
    }
    let trace = std::fs::read_to_string(dir.path().join("psc-decay_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 195);
    let svg = std::fs::read_to_string(dir.path().join("psc-decay_trace.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

const SWEEP: &str = "
[experiment]
version = 1
name = small-sweep
seed = 7

[engine]
presyn.*.u = 63
presyn.*.gain = 75
presyn.*.tau_psc = 20
neuron.*.thresh = 89
neuron.*.reset = 64

[sweep]
axis = weight
values = 0 5 10
rows = 0
rates = 0..=60:20
train = poisson
window = input 0 60
rate_window_ms = 2000
settle_ms = 100
";

#[test]
fn weight_sweep_from_text() {
    let spec = ExperimentSpec::parse(SWEEP).unwrap();
    let r = run_experiment(&spec).unwrap();
    assert_eq!(r.curves.iter().map(|c| c.key).collect::<Vec<_>>(), vec![0, 5, 10]);
    let zero = &r.curves[0];
    assert!(zero.points.iter().all(|p| p.output_hz == 0.0));
    for c in &r.curves[1..] {
        assert_eq!(c.points.len(), 4);
        assert!(c.points.windows(2).all(|w| w[1].output_hz > w[0].output_hz), "{:?}", c.points);
        assert!(c.fit.unwrap().slope > 0.0);
    }
    assert!(r.curves[2].fit.unwrap().slope > r.curves[1].fit.unwrap().slope);

    // Same seed, same answer; another seed draws other trains.
    assert_eq!(run_experiment(&spec).unwrap().curves, r.curves);
    let mut other = spec.clone();
    other.seed = 8;
    assert_ne!(run_experiment(&other).unwrap().curves, r.curves);
}

#[test]
fn seed_from_environment() {
    let mut spec = ExperimentSpec::parse(SWEEP).unwrap();
    std::env::set_var(SEED_ENV, "0x2a");
    let applied = spec.apply_env();
    std::env::remove_var(SEED_ENV);
    applied.unwrap();
    assert_eq!(spec.seed, 42);
}

#[test]
fn rejected_descriptions() {
    let cases = [
        ("[experiment]\nversion = 2\nname = x\n", "version"),
        ("[experiment]\nversion = 1\nname = x\n[nonsense]\n", "section"),
        ("[experiment]\nversion = 1\nname = x\n[stimulus]\nrow.127 = times 1\n", "row"),
        ("[experiment]\nversion = 1\nname = x\n[engine]\npresyn.*.gain = 200\n", "gain"),
        ("[experiment]\nversion = 1\nname = x\n[engine]\nweight.0.0 = 16\n", "weight"),
    ];
    for (text, what) in cases {
        let parsed = ExperimentSpec::parse(text).and_then(|s| s.validate());
        assert!(parsed.is_err(), "accepted bad {what}: {text}");
    }
}
