//! EEG trial representation, the canonical CSV importer, manifests and the
//! synthetic band-coded generator.

mod csv_io;
mod manifest;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use csv_io::{import_recording, read_recording_csv, write_recording_csv};
pub use manifest::{
    export_dataset, load_manifest, manifest_base, save_manifest, Manifest, ManifestEntry, MANIFEST_VERSION,
};
pub use synthetic::{generate_synthetic, generate_synthetic_with, SyntheticConfig};

/// Sampling rate of every recording, in Hz.
pub const SAMPLE_RATE_HZ: f64 = 128.0;
pub const N_CHANNELS: usize = 14;
pub const N_CLASSES: usize = 10;
/// Samples in one full 10 s trial.
pub const TRIAL_SAMPLES: usize = 1280;
/// Shortest recording that still yields one analysis window.
pub const MIN_SAMPLES: usize = 32;

/// Electrode of the 14-channel headset, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelId {
    AF3,
    AF4,
    F3,
    F4,
    F7,
    F8,
    FC5,
    FC6,
    T7,
    T8,
    P7,
    P8,
    O1,
    O2,
}

impl ChannelId {
    pub const ALL: [ChannelId; N_CHANNELS] = [
        ChannelId::AF3,
        ChannelId::AF4,
        ChannelId::F3,
        ChannelId::F4,
        ChannelId::F7,
        ChannelId::F8,
        ChannelId::FC5,
        ChannelId::FC6,
        ChannelId::T7,
        ChannelId::T8,
        ChannelId::P7,
        ChannelId::P8,
        ChannelId::O1,
        ChannelId::O2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelId::AF3 => "AF3",
            ChannelId::AF4 => "AF4",
            ChannelId::F3 => "F3",
            ChannelId::F4 => "F4",
            ChannelId::F7 => "F7",
            ChannelId::F8 => "F8",
            ChannelId::FC5 => "FC5",
            ChannelId::FC6 => "FC6",
            ChannelId::T7 => "T7",
            ChannelId::T8 => "T8",
            ChannelId::P7 => "P7",
            ChannelId::P8 => "P8",
            ChannelId::O1 => "O1",
            ChannelId::O2 => "O2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Prompt category of a recording session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Digit,
    Character,
    Image,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Digit, Task::Character, Task::Image];

    pub fn name(self) -> &'static str {
        match self {
            Task::Digit => "digit",
            Task::Character => "character",
            Task::Image => "image",
        }
    }

    /// Display names of the ten classes, indexed by label.
    pub fn class_names(self) -> [&'static str; N_CLASSES] {
        match self {
            Task::Digit => ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"],
            Task::Character => ["A", "C", "F", "H", "J", "M", "P", "S", "T", "Y"],
            Task::Image => [
                "Apple", "Car", "Dog", "Gold", "Mobile", "Rose", "Scooter", "Tiger", "Wallet", "Watch",
            ],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "digit" | "digits" => Ok(Task::Digit),
            "character" | "characters" | "char" => Ok(Task::Character),
            "image" | "images" => Ok(Task::Image),
            other => Err(Error::Usage(format!("unknown task '{other}'"))),
        }
    }
}

/// One EEG trial: a channel-major `[14 × S]` sample matrix plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    samples: Array2<f64>,
    pub subject: u32,
    pub task: Task,
    pub label: u8,
}

impl Recording {
    /// Validates shape, finiteness and label range.
    pub fn new(samples: Array2<f64>, subject: u32, task: Task, label: u8) -> Result<Self> {
        if samples.nrows() != N_CHANNELS {
            return Err(Error::InvalidRecording(format!(
                "expected {N_CHANNELS} channel rows, got {}",
                samples.nrows()
            )));
        }
        if samples.ncols() < MIN_SAMPLES {
            return Err(Error::InvalidRecording(format!(
                "{} samples, need at least {MIN_SAMPLES}",
                samples.ncols()
            )));
        }
        if usize::from(label) >= N_CLASSES {
            return Err(Error::InvalidRecording(format!("label {label} outside 0..=9")));
        }
        if let Some(((ch, s), _)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidRecording(format!(
                "non-finite sample at channel {} index {s}",
                ChannelId::ALL[ch]
            )));
        }
        Ok(Self {
            samples,
            subject,
            task,
            label,
        })
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }

    pub fn rate_hz(&self) -> f64 {
        SAMPLE_RATE_HZ
    }

    /// Same metadata, different samples. Shape must be unchanged.
    pub fn with_samples(&self, samples: Array2<f64>) -> Result<Self> {
        if samples.dim() != self.samples.dim() {
            return Err(Error::Shape(format!(
                "replacement samples {:?} differ from {:?}",
                samples.dim(),
                self.samples.dim()
            )));
        }
        Recording::new(samples, self.subject, self.task, self.label)
    }
}

/// SHA-256 over metadata and sample bits of every recording, in order.
pub fn dataset_checksum(recordings: &[Recording]) -> String {
    let mut hasher = Sha256::new();
    for rec in recordings {
        hasher.update(rec.subject.to_le_bytes());
        hasher.update([rec.task as u8, rec.label]);
        hasher.update((rec.n_samples() as u64).to_le_bytes());
        for v in rec.samples.iter() {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}
