//! Characterization harness: stimulus generation, probe recording, fits,
//! transfer-function sweeps and CSV/SVG artifacts.

mod builtin;
mod fit;
mod run;
mod spec;
mod stimulus;
mod svg;

pub use builtin::{builtin, BUILTIN_NAMES};
pub use fit::{
    bin_average, extract_onset_frequency, fit_exponential, fit_input_window, fit_line, fit_linear_window,
    onset_of, ExpFit, LineFit, RatePoint, Trace, DEFAULT_OUTPUT_WINDOW_HZ, MIN_EXP_SAMPLES,
};
pub use run::{decay_tail, measure_rate, run_experiment, AmplitudeRecord, ExperimentResult, TransferCurve, DECAY_FLOOR};
pub use spec::{
    neuron_writes, presyn_writes, ConfigWrite, ExperimentSpec, FitRequest, FitWindow, RowStimulus, Sweep,
    SweepAxis, SweepTrain, Train, WeightSetting, DEFAULT_RATE_WINDOW_MS, DEFAULT_SETTLE_MS, SEED_ENV, SPEC_FORMAT_VERSION,
};
pub use stimulus::{gen_poisson_train, gen_rate_train, gen_regular_train, MAX_RATE_HZ};
pub use svg::{line_chart, Series};
