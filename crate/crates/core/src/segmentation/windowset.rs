use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::windows::{extract_windows, window_count, WINDOW_LEN};
use super::LobeName;
use crate::dataset::{Recording, N_CLASSES};
use crate::error::{Error, Result};

pub const TEST_FRACTION: f64 = 0.2;
/// Fraction of the non-test windows held out for early stopping.
pub const VAL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Partition {
    Train = 0,
    Val = 1,
    Test = 2,
}

impl Partition {
    pub(crate) fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Partition::Train),
            1 => Some(Partition::Val),
            2 => Some(Partition::Test),
            _ => None,
        }
    }
}

/// Granularity of the train/val/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Windows are shuffled individually; windows of one trial may land in
    /// different partitions.
    #[default]
    Window,
    /// Whole recordings are assigned to a partition.
    Recording,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Window => "window",
            SplitMode::Recording => "recording",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "window" => Ok(SplitMode::Window),
            "recording" => Ok(SplitMode::Recording),
            other => Err(Error::Usage(format!("unknown split mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Segmented, channel-selected, normalized windows with labels and partition
/// tags.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub lobe: LobeName,
    pub split_mode: SplitMode,
    /// `[N × 32 × N_c]`, normalized with `norm_stats`.
    pub windows: Array3<f32>,
    pub labels: Vec<u8>,
    pub partition: Vec<Partition>,
    pub norm_stats: NormStats,
    /// Non-fatal findings, e.g. a class missing from the train partition.
    pub warnings: Vec<String>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.windows.dim().2
    }

    pub fn indices(&self, part: Partition) -> Vec<usize> {
        self.partition
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == part)
            .map(|(i, _)| i)
            .collect()
    }

    /// Copies the selected windows into a batch tensor.
    pub fn gather(&self, indices: &[usize]) -> Array3<f32> {
        self.windows.select(Axis(0), indices)
    }

    pub fn gather_labels(&self, indices: &[usize]) -> Vec<u8> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }
}

fn rounded(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

/// Partition sizes `(test, val)` for `n` units.
pub fn split_sizes(n: usize) -> (usize, usize) {
    let test = rounded(TEST_FRACTION, n);
    let val = rounded(VAL_FRACTION, n - test);
    (test, val)
}

fn assign(n: usize, rng: &mut ChaCha8Rng) -> Vec<Partition> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (test, val) = split_sizes(n);
    let mut parts = vec![Partition::Train; n];
    for (rank, &i) in order.iter().enumerate() {
        parts[i] = if rank < test {
            Partition::Test
        } else if rank < test + val {
            Partition::Val
        } else {
            Partition::Train
        };
    }
    parts
}

/// Windows every recording, splits, and z-scores each channel with
/// train-partition statistics.
pub fn build_windowset(
    recordings: &[Recording],
    lobe: LobeName,
    split_mode: SplitMode,
    split_seed: u64,
) -> Result<WindowSet> {
    let first = recordings
        .first()
        .ok_or_else(|| Error::Usage("no recordings to segment".into()))?;
    if let Some(other) = recordings.iter().find(|r| r.task != first.task) {
        return Err(Error::Usage(format!(
            "recordings mix tasks {} and {}",
            first.task, other.task
        )));
    }

    let n_channels = lobe.n_channels();
    let total: usize = recordings.iter().map(|r| window_count(r.n_samples())).sum();
    let mut raw = Array3::<f64>::zeros((total, WINDOW_LEN, n_channels));
    let mut labels = Vec::with_capacity(total);
    let mut owner = Vec::with_capacity(total);
    let mut next = 0;
    for (r, rec) in recordings.iter().enumerate() {
        for w in extract_windows(rec, lobe)? {
            raw.index_axis_mut(Axis(0), next).assign(&w.data);
            labels.push(w.label);
            owner.push(r);
            next += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    let partition = match split_mode {
        SplitMode::Window => assign(total, &mut rng),
        SplitMode::Recording => {
            let per_recording = assign(recordings.len(), &mut rng);
            owner.iter().map(|&r| per_recording[r]).collect()
        }
    };

    let mut warnings = Vec::new();
    let mut train_counts = [0usize; N_CLASSES];
    for (l, p) in labels.iter().zip(&partition) {
        if *p == Partition::Train {
            train_counts[usize::from(*l)] += 1;
        }
    }
    let absent: Vec<String> = (0..N_CLASSES)
        .filter(|&k| train_counts[k] == 0)
        .map(|k| k.to_string())
        .collect();
    if !absent.is_empty() {
        warnings.push(format!("classes absent from train partition: {}", absent.join(", ")));
    }

    let norm_stats = train_stats(&raw, &partition, n_channels);
    let windows = Array3::from_shape_fn(raw.dim(), |(i, t, c)| {
        ((raw[[i, t, c]] - norm_stats.mean[c]) / norm_stats.std[c]) as f32
    });

    Ok(WindowSet {
        lobe,
        split_mode,
        windows,
        labels,
        partition,
        norm_stats,
        warnings,
    })
}

fn train_stats(raw: &Array3<f64>, partition: &[Partition], n_channels: usize) -> NormStats {
    let mut sum = vec![0.0; n_channels];
    let mut count = 0usize;
    let train: Vec<usize> = (0..partition.len())
        .filter(|&i| partition[i] == Partition::Train)
        .collect();
    for &i in &train {
        for row in raw.index_axis(Axis(0), i).outer_iter() {
            for (c, v) in row.iter().enumerate() {
                sum[c] += v;
            }
            count += 1;
        }
    }
    if count == 0 {
        return NormStats {
            mean: vec![0.0; n_channels],
            std: vec![1.0; n_channels],
        };
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0; n_channels];
    for &i in &train {
        for row in raw.index_axis(Axis(0), i).outer_iter() {
            for (c, v) in row.iter().enumerate() {
                sq[c] += (v - mean[c]).powi(2);
            }
        }
    }
    let std = sq
        .iter()
        .map(|s| {
            let sd = (s / count as f64).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    NormStats { mean, std }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, Task};

    #[test]
    fn one_recording_split_sizes() {
        let recs = generate_synthetic(1, Task::Digit, 0).unwrap();
        let ws = build_windowset(&recs[..1], LobeName::All, SplitMode::Window, 1).unwrap();
        assert_eq!(ws.len(), 157);
        assert_eq!(ws.indices(Partition::Test).len(), 31);
        assert_eq!(ws.indices(Partition::Val).len(), 13);
        assert_eq!(ws.indices(Partition::Train).len(), 113);
        assert!(!ws.warnings.is_empty(), "nine classes are missing from train");
    }

    #[test]
    fn full_size_arithmetic() {
        assert_eq!(split_sizes(230 * 157).0, 7222);
        assert_eq!(split_sizes(157), (31, 13));
    }

    #[test]
    fn deterministic_partition() {
        let recs = generate_synthetic(1, Task::Digit, 0).unwrap();
        let a = build_windowset(&recs, LobeName::Frontal, SplitMode::Window, 42).unwrap();
        let b = build_windowset(&recs, LobeName::Frontal, SplitMode::Window, 42).unwrap();
        assert_eq!(a, b);
        let c = build_windowset(&recs, LobeName::Frontal, SplitMode::Window, 43).unwrap();
        assert_ne!(a.partition, c.partition);
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn train_channels_are_standardized() {
        let recs = generate_synthetic(1, Task::Digit, 5).unwrap();
        let ws = build_windowset(&recs, LobeName::All, SplitMode::Window, 3).unwrap();
        let train = ws.indices(Partition::Train);
        for c in 0..14 {
            let vals: Vec<f64> = train
                .iter()
                .flat_map(|&i| (0..32).map(move |t| (i, t)))
                .map(|(i, t)| f64::from(ws.windows[[i, t, c]]))
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-6, "channel {c} mean {mean}");
            assert!((sd - 1.0).abs() < 1e-6, "channel {c} sd {sd}");
        }
    }

    #[test]
    fn recording_level_keeps_trials_together() {
        let recs = generate_synthetic(2, Task::Digit, 5).unwrap();
        let ws = build_windowset(&recs, LobeName::Temporal, SplitMode::Recording, 3).unwrap();
        for chunk in ws.partition.chunks(157) {
            assert!(chunk.iter().all(|p| *p == chunk[0]));
        }
        let test_recs = ws.partition.chunks(157).filter(|c| c[0] == Partition::Test).count();
        assert_eq!(test_recs, 4);
    }

    #[test]
    fn mixed_tasks_and_empty_input_rejected() {
        let mut recs = generate_synthetic(1, Task::Digit, 0).unwrap();
        recs.extend(generate_synthetic(1, Task::Image, 0).unwrap());
        assert!(build_windowset(&recs, LobeName::All, SplitMode::Window, 0).is_err());
        assert!(build_windowset(&[], LobeName::All, SplitMode::Window, 0).is_err());
    }
}
