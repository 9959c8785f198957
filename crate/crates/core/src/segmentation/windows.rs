use ndarray::{s, Array2};

use super::LobeName;
use crate::dataset::Recording;
use crate::error::{Error, Result};

/// 250 ms at 128 Hz.
pub const WINDOW_LEN: usize = 32;
/// 64 ms at 128 Hz.
pub const WINDOW_STRIDE: usize = 8;

pub fn window_count(n_samples: usize) -> usize {
    if n_samples < WINDOW_LEN {
        0
    } else {
        (n_samples - WINDOW_LEN) / WINDOW_STRIDE + 1
    }
}

/// One `[32 × N_c]` window (time-major) and its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start: usize,
    pub data: Array2<f64>,
    pub label: u8,
}

/// Sliding windows over the lobe's channels, in temporal order.
pub fn extract_windows(recording: &Recording, lobe: LobeName) -> Result<Vec<Window>> {
    let n = recording.n_samples();
    if n < WINDOW_LEN {
        return Err(Error::SignalTooShort {
            len: n,
            min: WINDOW_LEN,
        });
    }
    let rows: Vec<usize> = lobe.channels().iter().map(|c| c.index()).collect();
    let samples = recording.samples();
    Ok((0..window_count(n))
        .map(|w| {
            let start = w * WINDOW_STRIDE;
            let block = samples.slice(s![.., start..start + WINDOW_LEN]);
            let data = Array2::from_shape_fn((WINDOW_LEN, rows.len()), |(t, c)| block[[rows[c], t]]);
            Window {
                start,
                data,
                label: recording.label,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Task;

    fn ramp(n: usize) -> Recording {
        let samples = Array2::from_shape_fn((14, n), |(c, s)| (c * 10_000 + s) as f64);
        Recording::new(samples, 0, Task::Digit, 4).unwrap()
    }

    /// Start indices by enumeration rather than by formula.
    fn brute_force_starts(n: usize) -> Vec<usize> {
        let mut starts = Vec::new();
        let mut s = 0;
        while s + WINDOW_LEN <= n {
            starts.push(s);
            s += WINDOW_STRIDE;
        }
        starts
    }

    #[test]
    fn counts_match_enumeration() {
        for n in [32, 39, 40, 41, 100, 1280] {
            assert_eq!(window_count(n), brute_force_starts(n).len(), "n={n}");
        }
        assert_eq!(window_count(1280), 157);
        assert_eq!(brute_force_starts(40), vec![0, 8]);
    }

    #[test]
    fn boundary_lengths() {
        assert_eq!(extract_windows(&ramp(32), LobeName::All).unwrap().len(), 1);
        let w = extract_windows(&ramp(40), LobeName::All).unwrap();
        assert_eq!(w.iter().map(|w| w.start).collect::<Vec<_>>(), vec![0, 8]);
    }

    #[test]
    fn windows_reproduce_signal_region() {
        let rec = ramp(1280);
        for lobe in LobeName::ALL {
            let windows = extract_windows(&rec, lobe).unwrap();
            assert_eq!(windows.len(), 157);
            for (w, win) in windows.iter().enumerate() {
                assert_eq!(win.start, 8 * w);
                assert_eq!(win.data.dim(), (32, lobe.n_channels()));
                assert_eq!(win.label, 4);
                for (c, ch) in lobe.channels().iter().enumerate() {
                    for t in 0..32 {
                        assert_eq!(win.data[[t, c]], rec.samples()[[ch.index(), 8 * w + t]]);
                    }
                }
            }
        }
    }
}
