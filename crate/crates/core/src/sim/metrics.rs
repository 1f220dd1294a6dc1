//! Scalar summaries of a trajectory.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use super::output::{Sample, TrajectoryRecord};

/// Dominant frequency of a uniformly sampled signal and the bin width, both
/// in Hz. The mean is removed first and the DC bin ignored.
pub fn dominant_frequency(signal: &[f64], sample_interval: f64) -> Option<(f64, f64)> {
    let n = signal.len();
    if n < 4 || !(sample_interval > 0.0) {
        return None;
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bin = 1.0 / (n as f64 * sample_interval);
    let (k, _) = buf[1..=n / 2]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c.norm_sqr()))
        .fold(
            (0, -1.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    Some((k as f64 * bin, bin))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn peak_to_peak(xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    if lo.is_finite() {
        hi - lo
    } else {
        f64::NAN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    /// Mean body-axis surge speed `u` (m/s).
    pub mean_surge: f64,
    /// Peak-to-peak pitch angle (rad).
    pub pitch_peak_to_peak: f64,
    /// Dominant yaw-rate frequency (Hz), NaN when undefined.
    pub yaw_rate_frequency: f64,
    /// FFT bin width of the yaw-rate spectrum (Hz).
    pub frequency_resolution: f64,
    /// Mean roll angle (rad).
    pub mean_roll: f64,
}

impl Summary {
    /// Metrics over the samples with `t >= start`.
    pub fn from_record(record: &TrajectoryRecord, start: f64) -> Self {
        let w: &[Sample] = record.window(start);
        let yaw_rate: Vec<f64> = w.iter().map(|s| s.state.rates.z).collect();
        let (freq, res) =
            dominant_frequency(&yaw_rate, record.sample_interval()).unwrap_or((f64::NAN, f64::NAN));
        Self {
            mean_surge: mean(w.iter().map(|s| s.state.velocity.x)),
            pitch_peak_to_peak: peak_to_peak(w.iter().map(|s| s.state.attitude.theta)),
            yaw_rate_frequency: freq,
            frequency_resolution: res,
            mean_roll: mean(w.iter().map(|s| s.state.attitude.phi)),
        }
    }
}
