use eegbands::dataset::{generate_synthetic, generate_synthetic_with, SyntheticConfig, Task};
use eegbands::nn::{ModelDims, Network};
use eegbands::segmentation::{build_windowset, LobeName, Partition, SplitMode, WindowSet};
use eegbands::training::{evaluate, train, TrainConfig};

fn subset(ws: &WindowSet, n_train: usize, n_val: usize) -> WindowSet {
    let train: Vec<usize> = ws.indices(Partition::Train).into_iter().take(n_train).collect();
    let val: Vec<usize> = ws.indices(Partition::Val).into_iter().take(n_val).collect();
    let keep: Vec<usize> = train.iter().chain(&val).copied().collect();
    WindowSet {
        windows: ws.gather(&keep),
        labels: ws.gather_labels(&keep),
        partition: keep.iter().map(|&i| ws.partition[i]).collect(),
        warnings: Vec::new(),
        ..ws.clone()
    }
}

#[test]
fn separable_synthetic_reaches_ninety_percent() {
    let recs = generate_synthetic(2, Task::Digit, 11).unwrap();
    let ws = build_windowset(&recs, LobeName::All, SplitMode::Window, 3).unwrap();
    let mut net = Network::<f32>::new(ModelDims::standard(14), 5).unwrap();
    let cfg = TrainConfig {
        max_epochs: 15,
        patience: 3,
        ..Default::default()
    };
    let out = train(&ws, &mut net, &cfg, &mut |_| {}).unwrap();
    let test = evaluate(&net.params, &net.dims, &ws, Partition::Test).unwrap();
    assert!(test.accuracy >= 0.90, "test accuracy {}", test.accuracy);
    assert_eq!(test.total() as usize, ws.indices(Partition::Test).len());

    let r = &out.report;
    assert!(r.stopping_epoch <= cfg.max_epochs);
    let max_val = r.epochs.iter().map(|e| e.val_accuracy).fold(f64::MIN, f64::max);
    assert_eq!(r.best_val_accuracy, max_val);
    // The restored parameters are those of the best epoch.
    let val = evaluate(&net.params, &net.dims, &ws, Partition::Val).unwrap();
    assert_eq!(val.accuracy, r.best_val_accuracy);
    assert_eq!(r.epochs[r.best_epoch - 1].val_accuracy, max_val);
}

#[test]
fn constant_validation_accuracy_stops_after_two_epochs() {
    let recs = generate_synthetic(1, Task::Digit, 2).unwrap();
    let ws = subset(
        &build_windowset(&recs, LobeName::Temporal, SplitMode::Window, 1).unwrap(),
        64,
        64,
    );
    let mut net = Network::<f32>::new(ModelDims::standard(2), 1).unwrap();
    // Steps far below f32 resolution leave the weights, and so the
    // validation accuracy, unchanged.
    let cfg = TrainConfig {
        patience: 1,
        learning_rate: 1e-30,
        ..Default::default()
    };
    let out = train(&ws, &mut net, &cfg, &mut |_| {}).unwrap();
    let r = &out.report;
    assert_eq!(r.epochs[0].val_accuracy, r.epochs[1].val_accuracy);
    assert_eq!(r.stopping_epoch, 2);
    assert!(r.stopped_early);
    assert_eq!(r.best_epoch, 1);
}

#[test]
fn same_seeds_give_same_report() {
    let recs = generate_synthetic(1, Task::Image, 4).unwrap();
    let ws = subset(
        &build_windowset(&recs, LobeName::Parietal, SplitMode::Window, 2).unwrap(),
        300,
        60,
    );
    let cfg = TrainConfig {
        max_epochs: 3,
        batch_size: 64,
        ..Default::default()
    };
    let run = || {
        let mut net = Network::<f32>::new(ModelDims::standard(2), cfg.seeds.init).unwrap();
        let out = train(&ws, &mut net, &cfg, &mut |_| {}).unwrap();
        (out.report, net.params)
    };
    let (ra, pa) = run();
    let (rb, pb) = run();
    assert!(ra.same_trajectory(&rb));
    assert_eq!(pa, pb);
    assert_eq!(ra.epochs.len(), 3);
}

#[test]
fn empty_validation_partition_rejected() {
    let recs = generate_synthetic(1, Task::Digit, 2).unwrap();
    let ws = subset(
        &build_windowset(&recs, LobeName::Temporal, SplitMode::Window, 1).unwrap(),
        20,
        0,
    );
    let mut net = Network::<f32>::new(ModelDims::standard(2), 1).unwrap();
    assert!(train(&ws, &mut net, &TrainConfig::default(), &mut |_| {}).is_err());
}

#[test]
fn memorizes_two_hundred_windows() {
    // Pure noise: labels can only be fitted by memorization.
    let cfg = SyntheticConfig {
        amplitude: 0.0,
        ..Default::default()
    };
    let recs = generate_synthetic_with(&cfg, 1, Task::Digit, 8).unwrap();
    let ws = subset(
        &build_windowset(&recs, LobeName::All, SplitMode::Window, 5).unwrap(),
        200,
        20,
    );
    let mut net = Network::<f32>::new(ModelDims::standard(14), 3).unwrap();
    let tc = TrainConfig {
        max_epochs: 200,
        patience: 200,
        ..Default::default()
    };
    let mut reached = None;
    let out = train(&ws, &mut net, &tc, &mut |e| {
        if e.train_loss < 0.05 && reached.is_none() {
            reached = Some(e.epoch);
        }
    })
    .unwrap();
    let last = out.report.epochs.last().unwrap().train_loss;
    assert!(reached.is_some(), "final train loss {last}");
}
