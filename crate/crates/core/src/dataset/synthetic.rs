//! Band-coded synthetic trials with a known ground truth.
//!
//! Class `k` is a sinusoid at `lo + (hi - lo) * (k + 0.5) / 10` Hz added to
//! the coded channels, each channel carrying a fixed class-specific phase
//! offset. Every channel also receives white Gaussian noise. Filtering the
//! coding band away therefore removes all class information.

use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ChannelId, Recording, Task, N_CHANNELS, N_CLASSES, SAMPLE_RATE_HZ, TRIAL_SAMPLES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// Lower edge of the band holding the class code, Hz.
    pub code_low_hz: f64,
    /// Upper edge of the band holding the class code, Hz.
    pub code_high_hz: f64,
    /// Peak amplitude of the class sinusoid.
    pub amplitude: f64,
    pub noise_std: f64,
    /// Channels that carry the class code; the rest are noise only.
    pub coded_channels: Vec<ChannelId>,
    /// Seed of the class-to-phase table, shared by every subject.
    pub code_seed: u64,
    pub samples: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            code_low_hz: 20.0,
            code_high_hz: 30.0,
            amplitude: 1.0,
            noise_std: 1.0,
            coded_channels: ChannelId::ALL.to_vec(),
            code_seed: 0x5EED_C0DE,
            samples: TRIAL_SAMPLES,
        }
    }
}

impl SyntheticConfig {
    pub fn class_frequency(&self, label: usize) -> f64 {
        self.code_low_hz + (self.code_high_hz - self.code_low_hz) * (label as f64 + 0.5) / N_CLASSES as f64
    }

    fn validate(&self) -> Result<()> {
        let nyquist = SAMPLE_RATE_HZ / 2.0;
        if !(0.0 < self.code_low_hz && self.code_low_hz < self.code_high_hz && self.code_high_hz < nyquist) {
            return Err(Error::Usage(format!(
                "code band {}-{} Hz must satisfy 0 < low < high < {nyquist}",
                self.code_low_hz, self.code_high_hz
            )));
        }
        if !(self.noise_std >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Usage("noise_std must be >= 0 and amplitude finite".into()));
        }
        if self.samples < super::MIN_SAMPLES {
            return Err(Error::Usage(format!("samples must be >= {}", super::MIN_SAMPLES)));
        }
        Ok(())
    }

    /// Per (class, channel) phase offsets.
    fn phase_table(&self) -> [[f64; N_CHANNELS]; N_CLASSES] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.code_seed);
        let mut table = [[0.0; N_CHANNELS]; N_CLASSES];
        for row in table.iter_mut() {
            for phase in row.iter_mut() {
                *phase = rng.random::<f64>() * TAU;
            }
        }
        table
    }
}

/// Default generator: class code in 20–30 Hz on all channels.
pub fn generate_synthetic(n_subjects: u32, task: Task, seed: u64) -> Result<Vec<Recording>> {
    generate_synthetic_with(&SyntheticConfig::default(), n_subjects, task, seed)
}

/// Ten recordings per subject, labels 0..9 in order.
pub fn generate_synthetic_with(
    config: &SyntheticConfig,
    n_subjects: u32,
    task: Task,
    seed: u64,
) -> Result<Vec<Recording>> {
    if n_subjects == 0 {
        return Err(Error::Usage("n_subjects must be >= 1".into()));
    }
    config.validate()?;
    let phases = config.phase_table();
    let mut coded = [false; N_CHANNELS];
    for ch in &config.coded_channels {
        coded[ch.index()] = true;
    }
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::Usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out = Vec::with_capacity(n_subjects as usize * N_CLASSES);
    for subject in 0..n_subjects {
        for (label, label_phases) in phases.iter().enumerate() {
            let omega = TAU * config.class_frequency(label) / SAMPLE_RATE_HZ;
            let trial_phase = rng.random::<f64>() * TAU;
            let mut samples = Array2::<f64>::zeros((N_CHANNELS, config.samples));
            for (ch, mut row) in samples.outer_iter_mut().enumerate() {
                for (s, v) in row.iter_mut().enumerate() {
                    let mut x = noise.sample(&mut rng);
                    if coded[ch] {
                        x += config.amplitude * (omega * s as f64 + trial_phase + label_phases[ch]).sin();
                    }
                    *v = x;
                }
            }
            out.push(Recording::new(samples, subject, task, label as u8)?);
        }
    }
    Ok(out)
}
