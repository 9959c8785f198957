//! Band filters: Butterworth designs realized as second-order sections and
//! applied forward-backward.

mod band;
mod design;
mod filtfilt;

use rayon::prelude::*;

use crate::dataset::Recording;
use crate::error::Result;

pub use band::{BandEdges, BandName, BandSpec, FilterKind};
pub use design::{design_filter, design_filter_at, FilterDesign, Section};
pub use filtfilt::{apply_zero_phase, filtfilt};

pub const DEFAULT_ORDER: usize = 4;

/// Filters every recording into `band`. The identity band returns copies.
pub fn filter_recordings(band: &BandSpec, order: usize, recordings: &[Recording]) -> Result<Vec<Recording>> {
    if band.kind == FilterKind::Identity {
        return Ok(recordings.to_vec());
    }
    let design = design_filter(band, order)?;
    recordings.par_iter().map(|r| apply_zero_phase(&design, r)).collect()
}
