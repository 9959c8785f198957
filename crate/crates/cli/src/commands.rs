use std::path::Path;

use anyhow::{bail, Context, Result};
use eegbands::dataset::{
    dataset_checksum, export_dataset, generate_synthetic_with, load_manifest, manifest_base, Recording, Task,
};
use eegbands::dsp::BandName;
use eegbands::experiment::{
    cell_seeds, emit_reports, load_grid, prepare_windowset, results_csv, run_grid, CellFilter, GridRuntime,
};
use eegbands::nn::{save_checkpoint, Checkpoint, ModelDims, Network};
use eegbands::segmentation::{LobeName, Partition};
use eegbands::training::{evaluate, train as train_model, Confusion, EpochRecord, Seeds, TrainConfig, TrainReport};
use serde::Serialize;

use crate::config::RunConfig;
use crate::runlog::RunLog;

fn epoch_line(prefix: &str, e: &EpochRecord) -> String {
    format!(
        "{prefix}epoch={} train_loss={:.6} train_acc={:.4} val_acc={:.4} secs={:.2}",
        e.epoch, e.train_loss, e.train_accuracy, e.val_accuracy, e.wall_seconds
    )
}

fn load_task(cfg: &RunConfig, log: &RunLog) -> Result<Vec<Recording>> {
    let manifest = load_manifest(&cfg.paths.manifest)
        .with_context(|| format!("loading manifest {}", cfg.paths.manifest.display()))?;
    let recs = manifest.load_recordings(&manifest_base(&cfg.paths.manifest), Some(cfg.task))?;
    if recs.is_empty() {
        bail!(
            "manifest {} has no {} recordings",
            cfg.paths.manifest.display(),
            cfg.task
        );
    }
    log.line(&format!(
        "loaded {} {} recordings, checksum {}",
        recs.len(),
        cfg.task,
        dataset_checksum(&recs)
    ));
    Ok(recs)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let log = RunLog::open(&cfg.paths.out_dir)?;
    log.config("synth", &cfg.to_toml());
    let s = &cfg.synthetic;
    let recs = generate_synthetic_with(&s.signal, s.subjects, cfg.task, s.seed)?;
    ensure_parent(&cfg.paths.manifest)?;
    export_dataset(&recs, &cfg.paths.manifest)?;
    let checksum = dataset_checksum(&recs);
    log.line(&format!("wrote {} recordings, checksum {checksum}", recs.len()));
    println!(
        "wrote {} recordings and {} (checksum {checksum})",
        recs.len(),
        cfg.paths.manifest.display()
    );
    Ok(())
}

pub fn import(cfg: &RunConfig, source: &Path, task: Option<Task>) -> Result<()> {
    let log = RunLog::open(&cfg.paths.out_dir)?;
    log.config("import", &cfg.to_toml());
    log.line(&format!("source {}", source.display()));
    let manifest = load_manifest(source).with_context(|| format!("loading manifest {}", source.display()))?;
    let recs = manifest.load_recordings(&manifest_base(source), task)?;
    if recs.is_empty() {
        bail!("{} lists no matching recordings", source.display());
    }
    ensure_parent(&cfg.paths.manifest)?;
    export_dataset(&recs, &cfg.paths.manifest)?;
    let checksum = dataset_checksum(&recs);
    log.line(&format!("imported {} recordings, checksum {checksum}", recs.len()));
    for t in Task::ALL {
        let n = recs.iter().filter(|r| r.task == t).count();
        if n > 0 {
            println!("{t}: {n} recordings");
        }
    }
    println!("wrote {} (checksum {checksum})", cfg.paths.manifest.display());
    Ok(())
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    task: Task,
    lobe: LobeName,
    band: BandName,
    seeds: Seeds,
    train: &'a TrainConfig,
    test_accuracy: f64,
    test_confusion: Confusion,
    report: &'a TrainReport,
}

pub fn train(cfg: &RunConfig, lobe: LobeName, band: BandName) -> Result<()> {
    cfg.experiment.train.validate()?;
    let out = &cfg.paths.out_dir;
    let log = RunLog::open(out)?;
    log.config("train", &cfg.to_toml());
    log.line(&format!("cell lobe={lobe} band={band}"));
    let recs = load_task(cfg, &log)?;
    let ws = prepare_windowset(&recs, &cfg.experiment, lobe, band, cfg.paths.cache_dir.as_deref())?;
    for w in &ws.warnings {
        log.line(&format!("warning {w}"));
    }

    let seeds = cell_seeds(cfg.experiment.train.seeds, cfg.task, lobe, band, 0);
    let tc = TrainConfig {
        seeds,
        ..cfg.experiment.train.clone()
    };
    let dims = ModelDims::standard(lobe.n_channels());
    let mut net = Network::<f32>::new(dims, seeds.init)?;
    let outcome = train_model(&ws, &mut net, &tc, &mut |e| {
        log::info!("{}", epoch_line("", e));
        log.line(&epoch_line("", e));
    })?;
    let test = evaluate(&net.params, &net.dims, &ws, Partition::Test)?;

    let stem = format!("{}_{}_{}", cfg.task.name(), lobe.key(), band.key());
    let ckpt_path = out.join(format!("model_{stem}.ckpt"));
    save_checkpoint(
        &ckpt_path,
        &Checkpoint {
            dims,
            params: net.params.clone(),
            moments: outcome.moments,
        },
    )?;
    let mut report = outcome.report;
    report.checkpoint = Some(ckpt_path.display().to_string());
    let report_path = out.join(format!("train_{stem}.json"));
    let body = TrainOutput {
        task: cfg.task,
        lobe,
        band,
        seeds,
        train: &tc,
        test_accuracy: test.accuracy,
        test_confusion: test.confusion,
        report: &report,
    };
    std::fs::write(&report_path, serde_json::to_string_pretty(&body)? + "\n")
        .with_context(|| format!("writing {}", report_path.display()))?;
    log.line(&format!(
        "done best_epoch={} stopping_epoch={} test_acc={:.4}",
        report.best_epoch, report.stopping_epoch, test.accuracy
    ));
    println!(
        "{} / {} / {}: test accuracy {:.4} (best epoch {} of {})",
        cfg.task, lobe, band, test.accuracy, report.best_epoch, report.stopping_epoch
    );
    println!("report {}", report_path.display());
    Ok(())
}

pub fn sweep(cfg: &RunConfig, figures: &CellFilter) -> Result<()> {
    cfg.experiment.validate()?;
    let out = &cfg.paths.out_dir;
    let log = RunLog::open(out)?;
    log.config("sweep", &cfg.to_toml());
    let recs = load_task(cfg, &log)?;
    let on_epoch = |lobe: LobeName, band: BandName, run: usize, e: &EpochRecord| {
        let prefix = format!("cell lobe={lobe} band={band} run={run} ");
        log::info!("{}", epoch_line(&prefix, e));
        log.line(&epoch_line(&prefix, e));
    };
    let on_cell = |c: &eegbands::experiment::GridCell| {
        let msg = match (&c.accuracy, &c.error) {
            (Some(a), _) => format!("cell lobe={} band={} test_acc={a:.4}", c.lobe, c.band),
            (None, Some(e)) => format!("cell lobe={} band={} failed: {e}", c.lobe, c.band),
            (None, None) => format!("cell lobe={} band={} no result", c.lobe, c.band),
        };
        log::info!("{msg}");
        log.line(&msg);
    };
    let rt = GridRuntime {
        workers: cfg.workers,
        cache_dir: cfg.paths.cache_dir.clone(),
        on_epoch: Some(&on_epoch),
        on_cell: Some(&on_cell),
    };
    let grid = run_grid(&recs, cfg.task, &cfg.experiment, &rt)?;
    let written = emit_reports(&grid, out, figures)?;
    for p in &written {
        log.line(&format!("wrote {}", p.display()));
    }
    print!("{}", results_csv(&grid)?);
    let failed: Vec<String> = grid
        .failures()
        .map(|c| format!("({}, {}): {}", c.lobe, c.band, c.error.as_deref().unwrap_or("")))
        .collect();
    if !failed.is_empty() {
        log.line(&format!("{} cells failed", failed.len()));
        bail!(
            "{} of {} cells failed:\n  {}",
            failed.len(),
            grid.cells.len(),
            failed.join("\n  ")
        );
    }
    log.line("sweep complete");
    Ok(())
}

pub fn report(cfg: &RunConfig, input: &Path, figures: &CellFilter) -> Result<()> {
    let out = &cfg.paths.out_dir;
    let log = RunLog::open(out)?;
    log.config("report", &cfg.to_toml());
    log.line(&format!("input {}", input.display()));
    let grid = load_grid(input).with_context(|| format!("reading results {}", input.display()))?;
    let written = emit_reports(&grid, out, figures)?;
    for p in &written {
        log.line(&format!("wrote {}", p.display()));
        println!("{}", p.display());
    }
    Ok(())
}
