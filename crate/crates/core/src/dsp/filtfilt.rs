use ndarray::{Array2, ArrayView1};

use super::design::{FilterDesign, Section};
use crate::dataset::Recording;
use crate::error::{Error, Result};

impl FilterDesign {
    /// Samples of odd-reflection padding added at each end per pass.
    pub fn pad_len(&self) -> usize {
        3 * self.total_order()
    }

    /// Shortest signal the zero-phase filter accepts.
    pub fn min_signal_len(&self) -> usize {
        self.pad_len() + 1
    }
}

/// Steady-state transposed-direct-form-II states for a unit step input.
fn step_states(sections: &[Section]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sections
        .iter()
        .map(|s| {
            let gain = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[1] + s.a[2]);
            let z2 = s.b[2] - s.a[2] * gain;
            let z1 = s.b[1] - s.a[1] * gain + z2;
            let state = [scale * z1, scale * z2];
            scale *= gain;
            state
        })
        .collect()
}

fn run_cascade(sections: &[Section], zi: &[[f64; 2]], x0: f64, data: &mut [f64]) {
    for (s, z) in sections.iter().zip(zi) {
        let (mut z1, mut z2) = (z[0] * x0, z[1] * x0);
        for v in data.iter_mut() {
            let x = *v;
            let y = s.b[0] * x + z1;
            z1 = s.b[1] * x - s.a[1] * y + z2;
            z2 = s.b[2] * x - s.a[2] * y;
            *v = y;
        }
    }
}

/// Forward-backward filtering of one channel with odd-reflection edges.
pub fn filtfilt(design: &FilterDesign, signal: ArrayView1<f64>) -> Result<Vec<f64>> {
    let n = signal.len();
    let pad = design.pad_len();
    if n < design.min_signal_len() {
        return Err(Error::SignalTooShort {
            len: n,
            min: design.min_signal_len(),
        });
    }
    let first = signal[0];
    let last = signal[n - 1];
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend(signal.iter().copied());
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    let zi = step_states(&design.sections);
    let x0 = ext[0];
    run_cascade(&design.sections, &zi, x0, &mut ext);
    ext.reverse();
    let y0 = ext[0];
    run_cascade(&design.sections, &zi, y0, &mut ext);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

/// Zero-phase filtering of every channel; metadata is carried over.
pub fn apply_zero_phase(design: &FilterDesign, recording: &Recording) -> Result<Recording> {
    let samples = recording.samples();
    let (channels, n) = samples.dim();
    let rows: Vec<Vec<f64>> = samples
        .outer_iter()
        .map(|row| filtfilt(design, row))
        .collect::<Result<_>>()?;
    let out = Array2::from_shape_vec((channels, n), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Shape(e.to_string()))?;
    recording.with_samples(out)
}
