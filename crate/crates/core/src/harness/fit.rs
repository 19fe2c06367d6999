//! Traces, bin averaging and least-squares fits.

use crate::error::{Error, Result};
use crate::sc::BIO_CYCLE_MS;

/// Output-rate window used to locate the linear part of a transfer function.
pub const DEFAULT_OUTPUT_WINDOW_HZ: (f64, f64) = (50.0, 150.0);

/// Minimum number of samples for an exponential fit.
pub const MIN_EXP_SAMPLES: usize = 10;

/// Sampled waveform; times in milliseconds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub t_ms: Vec<f64>,
    pub v: Vec<f64>,
}

impl Trace {
    pub fn new(t_ms: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t_ms.len() != v.len() {
            return Err(Error::domain("trace time and value lengths differ"));
        }
        if t_ms.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("trace times must be strictly increasing"));
        }
        Ok(Trace { t_ms, v })
    }

    /// One sample per cycle, starting at cycle `first`.
    pub fn from_cycles(first: u64, v: Vec<f64>) -> Self {
        let t_ms = (0..v.len()).map(|i| (first + i as u64) as f64 * BIO_CYCLE_MS).collect();
        Trace { t_ms, v }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Averages consecutive samples into bins of `bin_ms`. Bins shorter than
/// the sample spacing are widened to one sample. Each output sample sits at
/// the mean time of its bin.
pub fn bin_average(t: &Trace, bin_ms: f64) -> Result<Trace> {
    if !(bin_ms > 0.0) {
        return Err(Error::domain(format!("bin width must be positive, got {bin_ms}")));
    }
    if t.is_empty() {
        return Ok(Trace::default());
    }
    let dt = if t.len() > 1 { t.t_ms[1] - t.t_ms[0] } else { BIO_CYCLE_MS };
    let n = ((bin_ms / dt).round() as usize).max(1);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(Trace {
        t_ms: t.t_ms.chunks(n).map(mean).collect(),
        v: t.v.chunks(n).map(mean).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFit {
    /// Fitted value at the first sample time.
    pub amplitude: f64,
    pub tau_ms: f64,
}

/// Fits `a·exp(-(t - t0)/tau)` by least squares on the logarithm.
pub fn fit_exponential(t: &Trace) -> Result<ExpFit> {
    if t.len() < MIN_EXP_SAMPLES {
        return Err(Error::Fit(format!(
            "exponential fit needs at least {MIN_EXP_SAMPLES} samples, got {}",
            t.len()
        )));
    }
    if let Some(v) = t.v.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Fit(format!("exponential fit needs positive samples, found {v}")));
    }
    let t0 = t.t_ms[0];
    let xs: Vec<f64> = t.t_ms.iter().map(|x| x - t0).collect();
    let ys: Vec<f64> = t.v.iter().map(|v| v.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    if !(line.slope < 0.0) {
        return Err(Error::Fit("trace does not decay; time constant is infinite".into()));
    }
    Ok(ExpFit { amplitude: line.intercept.exp(), tau_ms: -1.0 / line.slope })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if n < 2 {
        return Err(Error::Fit(format!("line fit needs at least 2 points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LineFit { slope, intercept, r2, n })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePoint {
    pub input_hz: f64,
    pub output_hz: f64,
}

/// Window membership with slack for rates measured over a rounded window.
fn within(x: f64, lo: f64, hi: f64) -> bool {
    let eps = 1e-6 * lo.abs().max(hi.abs()).max(1.0);
    x >= lo - eps && x <= hi + eps
}

fn fit_points<F: Fn(&RatePoint) -> bool>(points: &[RatePoint], keep: F) -> Result<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| keep(p)).map(|p| (p.input_hz, p.output_hz)).unzip();
    if xs.len() < 2 {
        return Err(Error::Fit(format!("only {} points inside the fit window", xs.len())));
    }
    fit_line(&xs, &ys)
}

/// Line fit over the points whose output rate lies in `[lo, hi]`.
pub fn fit_linear_window(points: &[RatePoint], lo: f64, hi: f64) -> Result<LineFit> {
    fit_points(points, |p| within(p.output_hz, lo, hi))
}

/// Line fit over the points whose input rate lies in `[lo, hi]`.
pub fn fit_input_window(points: &[RatePoint], lo: f64, hi: f64) -> Result<LineFit> {
    fit_points(points, |p| within(p.input_hz, lo, hi))
}

/// Input rate where the line fitted in the output window crosses zero.
pub fn extract_onset_frequency(points: &[RatePoint], lo: f64, hi: f64) -> Result<f64> {
    onset_of(&fit_linear_window(points, lo, hi)?)
}

pub fn onset_of(fit: &LineFit) -> Result<f64> {
    if fit.slope.abs() <= 1e-12 * (1.0 + fit.intercept.abs()) {
        return Err(Error::Fit("flat transfer function has no onset".into()));
    }
    Ok(-fit.intercept / fit.slope)
}
