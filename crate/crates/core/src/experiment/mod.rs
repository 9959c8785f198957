//! Lobe × band grid sweeps and their reports.

mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use report::{emit_reports, format_accuracy, load_grid, render_confusion_svg, results_csv, CellFilter, CSV_CORNER};

use crate::dataset::{dataset_checksum, Recording, Task, N_CLASSES};
use crate::dsp::{filter_recordings, BandEdges, BandName, BandSpec, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::nn::{ModelDims, Network};
use crate::segmentation::{
    build_windowset, read_windowset, write_windowset, LobeName, Partition, SplitMode, WindowSet,
};
use crate::training::{evaluate, train, Confusion, EpochRecord, Evaluation, Seeds, TrainConfig, TrainReport};

/// Everything that determines a grid's numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub lobes: Vec<LobeName>,
    pub bands: Vec<BandName>,
    pub band_edges: BandEdges,
    pub filter_order: usize,
    pub split_mode: SplitMode,
    pub split_seed: u64,
    /// Independent training runs per cell.
    pub repeat: usize,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lobes: LobeName::ALL.to_vec(),
            bands: BandName::ALL.to_vec(),
            band_edges: BandEdges::default(),
            filter_order: DEFAULT_ORDER,
            split_mode: SplitMode::default(),
            split_seed: 0,
            repeat: 1,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lobes.is_empty() || self.bands.is_empty() {
            return Err(Error::Usage("a grid needs at least one lobe and one band".into()));
        }
        if self.repeat == 0 {
            return Err(Error::Usage("repeat must be at least 1".into()));
        }
        let mut lobes = self.lobes.clone();
        lobes.sort();
        lobes.dedup();
        let mut bands = self.bands.clone();
        bands.sort();
        bands.dedup();
        if lobes.len() != self.lobes.len() || bands.len() != self.bands.len() {
            return Err(Error::Usage("duplicate lobe or band in grid selection".into()));
        }
        self.train.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Cells in table order: lobes by row, bands by column.
    pub fn cells(&self) -> Vec<(LobeName, BandName)> {
        let mut lobes = self.lobes.clone();
        lobes.sort();
        let mut bands = self.bands.clone();
        bands.sort();
        lobes.iter().flat_map(|&l| bands.iter().map(move |&b| (l, b))).collect()
    }
}

/// Seed offset derived from the cell identity alone.
pub fn cell_seed_offset(task: Task, lobe: LobeName, band: BandName) -> u64 {
    let digest = Sha256::digest(format!("{}/{}/{}", task.name(), lobe.key(), band.key()).as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Seeds of run `run` of a cell: the base seeds offset by the cell hash.
pub fn cell_seeds(base: Seeds, task: Task, lobe: LobeName, band: BandName, run: usize) -> Seeds {
    let offset = cell_seed_offset(task, lobe, band).wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    base.offset(offset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRun {
    pub seeds: Seeds,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub report: TrainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub task: Task,
    pub lobe: LobeName,
    pub band: BandName,
    /// Test accuracy of the pooled confusion matrix, i.e. the mean over runs.
    pub accuracy: Option<f64>,
    pub accuracy_min: Option<f64>,
    pub accuracy_max: Option<f64>,
    /// Test confusion counts summed over runs.
    pub confusion: Option<Confusion>,
    pub runs: Vec<CellRun>,
    pub error: Option<String>,
}

impl GridCell {
    fn failed(task: Task, lobe: LobeName, band: BandName, error: String) -> Self {
        Self {
            task,
            lobe,
            band,
            accuracy: None,
            accuracy_min: None,
            accuracy_max: None,
            confusion: None,
            runs: Vec::new(),
            error: Some(error),
        }
    }

    fn from_runs(task: Task, lobe: LobeName, band: BandName, runs: Vec<CellRun>) -> Self {
        let mut pooled = [[0u64; N_CLASSES]; N_CLASSES];
        for run in &runs {
            for (row, add) in pooled.iter_mut().zip(&run.confusion) {
                for (p, a) in row.iter_mut().zip(add) {
                    *p += a;
                }
            }
        }
        let accs = runs.iter().map(|r| r.accuracy);
        Self {
            task,
            lobe,
            band,
            accuracy: Some(Evaluation::from_confusion(pooled).accuracy),
            accuracy_min: accs.clone().reduce(f64::min),
            accuracy_max: accs.reduce(f64::max),
            confusion: Some(pooled),
            runs,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub config_hash: String,
    pub dataset_checksum: String,
    pub split_mode: SplitMode,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultGrid {
    pub task: Task,
    pub metadata: GridMetadata,
    pub cells: Vec<GridCell>,
}

impl ResultGrid {
    pub fn cell(&self, lobe: LobeName, band: BandName) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.lobe == lobe && c.band == band)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.error.is_some())
    }
}

/// Called after every epoch with the cell and repeat index.
pub type EpochHook<'a> = &'a (dyn Fn(LobeName, BandName, usize, &EpochRecord) + Sync);

/// Runtime knobs that do not change results.
#[derive(Default)]
pub struct GridRuntime<'a> {
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    /// WindowSet cache directory.
    pub cache_dir: Option<PathBuf>,
    pub on_epoch: Option<EpochHook<'a>>,
    pub on_cell: Option<&'a (dyn Fn(&GridCell) + Sync)>,
}

fn cache_path(dir: &Path, checksum: &str, cfg: &ExperimentConfig, lobe: LobeName, band: BandName) -> PathBuf {
    let key = format!(
        "{checksum}/{}/{}/{:?}/{}/{}/{}",
        lobe.key(),
        band.key(),
        cfg.band_edges,
        cfg.filter_order,
        cfg.split_mode,
        cfg.split_seed
    );
    dir.join(format!("ws_{}.bin", &hex::encode(Sha256::digest(key.as_bytes()))[..24]))
}

/// Filters, segments and splits the recordings for one cell, reading from
/// and writing to the cache when a directory is given.
pub fn prepare_windowset(
    recordings: &[Recording],
    cfg: &ExperimentConfig,
    lobe: LobeName,
    band: BandName,
    cache_dir: Option<&Path>,
) -> Result<WindowSet> {
    let cached = cache_dir.map(|d| cache_path(d, &dataset_checksum(recordings), cfg, lobe, band));
    if let Some(path) = cached.as_ref().filter(|p| p.exists()) {
        match read_windowset(path) {
            Ok(ws) => return Ok(ws),
            Err(e) => log::warn!("ignoring unreadable cache {}: {e}", path.display()),
        }
    }
    let spec = BandSpec::with_edges(band, cfg.band_edges);
    let filtered = filter_recordings(&spec, cfg.filter_order, recordings)?;
    let ws = build_windowset(&filtered, lobe, cfg.split_mode, cfg.split_seed)?;
    for w in &ws.warnings {
        log::warn!("{} / {}: {w}", lobe.key(), band.key());
    }
    if let Some(path) = cached {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_windowset(&ws, &path)?;
    }
    Ok(ws)
}

/// Trains and tests one cell, `cfg.repeat` times.
pub fn run_cell(
    recordings: &[Recording],
    task: Task,
    lobe: LobeName,
    band: BandName,
    cfg: &ExperimentConfig,
    rt: &GridRuntime<'_>,
) -> Result<Vec<CellRun>> {
    let ws = prepare_windowset(recordings, cfg, lobe, band, rt.cache_dir.as_deref())?;
    let dims = ModelDims::standard(lobe.n_channels());
    (0..cfg.repeat)
        .map(|r| {
            let seeds = cell_seeds(cfg.train.seeds, task, lobe, band, r);
            let tc = TrainConfig {
                seeds,
                ..cfg.train.clone()
            };
            let mut net = Network::<f32>::new(dims, seeds.init)?;
            let mut hook = |rec: &EpochRecord| {
                if let Some(f) = rt.on_epoch {
                    f(lobe, band, r, rec);
                }
            };
            let outcome = train(&ws, &mut net, &tc, &mut hook)?;
            let test = evaluate(&net.params, &net.dims, &ws, Partition::Test)?;
            Ok(CellRun {
                seeds,
                accuracy: test.accuracy,
                confusion: test.confusion,
                report: outcome.report,
            })
        })
        .collect()
}

/// Runs every selected cell with an independent model. Cell failures are
/// recorded in the cell and do not stop the grid.
pub fn run_grid(
    recordings: &[Recording],
    task: Task,
    cfg: &ExperimentConfig,
    rt: &GridRuntime<'_>,
) -> Result<ResultGrid> {
    cfg.validate()?;
    if let Some(r) = recordings.iter().find(|r| r.task != task) {
        return Err(Error::Usage(format!(
            "recording of subject {} is a {} trial, grid task is {task}",
            r.subject, r.task
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(rt.workers)
        .build()
        .map_err(|e| Error::Usage(format!("worker pool: {e}")))?;
    let cells: Vec<GridCell> = pool.install(|| {
        cfg.cells()
            .into_par_iter()
            .map(|(lobe, band)| {
                let cell = match run_cell(recordings, task, lobe, band, cfg, rt) {
                    Ok(runs) => GridCell::from_runs(task, lobe, band, runs),
                    Err(e) => GridCell::failed(task, lobe, band, e.to_string()),
                };
                if let Some(f) = rt.on_cell {
                    f(&cell);
                }
                cell
            })
            .collect()
    });
    Ok(ResultGrid {
        task,
        metadata: GridMetadata {
            config_hash: cfg.config_hash(),
            dataset_checksum: dataset_checksum(recordings),
            split_mode: cfg.split_mode,
            config: cfg.clone(),
        },
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_has_35_cells_in_table_order() {
        let cfg = ExperimentConfig::default();
        let cells = cfg.cells();
        assert_eq!(cells.len(), 35);
        assert_eq!(cells[0], (LobeName::Frontal, BandName::Delta));
        assert_eq!(cells[34], (LobeName::All, BandName::All));
        let mut dedup = cells.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 35);
    }

    #[test]
    fn subset_selection_is_sorted_into_table_order() {
        let cfg = ExperimentConfig {
            lobes: vec![LobeName::All, LobeName::Frontal],
            bands: vec![BandName::Dbg, BandName::Delta],
            ..Default::default()
        };
        assert_eq!(
            cfg.cells(),
            vec![
                (LobeName::Frontal, BandName::Delta),
                (LobeName::Frontal, BandName::Dbg),
                (LobeName::All, BandName::Delta),
                (LobeName::All, BandName::Dbg),
            ]
        );
    }

    #[test]
    fn duplicates_and_empty_selection_rejected() {
        let dup = ExperimentConfig {
            bands: vec![BandName::Beta, BandName::Beta],
            ..Default::default()
        };
        assert!(dup.validate().is_err());
        let empty = ExperimentConfig {
            lobes: vec![],
            ..Default::default()
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn cell_offsets_are_stable_and_distinct() {
        let a = cell_seed_offset(Task::Digit, LobeName::All, BandName::Beta);
        assert_eq!(a, cell_seed_offset(Task::Digit, LobeName::All, BandName::Beta));
        assert_ne!(a, cell_seed_offset(Task::Digit, LobeName::All, BandName::Alpha));
        assert_ne!(a, cell_seed_offset(Task::Image, LobeName::All, BandName::Beta));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.train.max_epochs = 30;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn empty_recordings_fail_per_cell() {
        let cfg = ExperimentConfig {
            lobes: vec![LobeName::All],
            bands: vec![BandName::All, BandName::Beta],
            ..Default::default()
        };
        let grid = run_grid(&[], Task::Digit, &cfg, &GridRuntime::default()).unwrap();
        assert_eq!(grid.cells.len(), 2);
        assert!(grid.cells.iter().all(|c| c.error.is_some() && c.accuracy.is_none()));
    }
}
