//! Cross-module equivalences of the round loop: without-replacement training
//! with the un-rescaled schedule is exactly early-stopped full-data training,
//! and r = 1 degenerates to plain epoch shuffling.

use rs2_core::dataset::Dataset;
use rs2_core::harness::{run, LrKind, LrSpec, ModelSpec, OptimizerSpec, RunConfig, TimingMode};
use rs2_core::matrix::Matrix;
use rs2_core::models::{loss_and_grad, Loss, LossKind, Model, ModelKind};
use rs2_core::optim::{lr_at, sgd_step, OptimizerState};
use rs2_core::rng::{shuffle, Rng, Stream};
use rs2_core::sampling::{ratio_floor, ScheduleKind};

fn blob_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = Rng::new(seed, Stream::DataGen, 0);
    let mut data = Vec::with_capacity(n * 3);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 4;
        let center = class as f64 * 2.0 - 3.0;
        for _ in 0..3 {
            data.push(center + rng.normal());
        }
        labels.push(class);
    }
    Dataset::new(Matrix::new(n, 3, data).unwrap(), labels, 4).unwrap()
}

fn base_config(schedule: ScheduleKind, r: f64, rounds: usize) -> RunConfig {
    let mut config = RunConfig::new(
        ModelSpec {
            kind: ModelKind::SoftmaxRegression,
            hidden: None,
            loss: Loss::new(LossKind::CrossEntropy),
        },
        schedule,
        r,
        rounds,
    );
    config.batch_size = 5;
    config.lr = LrSpec::new(LrKind::NaiveEarlyStop, 0.2);
    config.optimizer = OptimizerSpec::Sgd { momentum: 0.0 };
    config.split_ratio = 1.0;
    config.seed = 11;
    config.timing = TimingMode::Modeled {
        per_batch_ms: 1.0,
        per_selection_ms: 0.1,
    };
    config
}

#[test]
fn without_replacement_equals_truncated_full_run() {
    // N = 100, b = 5, r = 0.2: subsets of 20 split into 4 batches, 5 rounds
    // per pass, so batch and pass boundaries line up with the full run.
    let dataset = blob_dataset(100, 21);
    let rounds = 6;
    let rs2 = base_config(ScheduleKind::Rs2WithoutReplacement, 0.2, rounds);
    let rs2_record = run(&rs2, &dataset).unwrap();

    let t = 100usize.div_ceil(5);
    let truncate_at = ratio_floor(0.2, t * rounds);
    let mut full = base_config(ScheduleKind::Rs2WithoutReplacement, 1.0, rounds);
    full.step_limit = Some(truncate_at);
    let full_record = run(&full, &dataset).unwrap();

    assert_eq!(rs2_record.steps, truncate_at);
    assert_eq!(full_record.steps, truncate_at);
    assert_eq!(rs2_record.final_weights, full_record.final_weights);
    assert_eq!(rs2_record.weights_digest, full_record.weights_digest);
}

#[test]
fn full_ratio_run_is_plain_epoch_shuffled_training() {
    let dataset = blob_dataset(60, 22);
    let rounds = 3;
    let config = base_config(ScheduleKind::Rs2WithoutReplacement, 1.0, rounds);
    let record = run(&config, &dataset).unwrap();

    // Oracle: hand-rolled epoch-shuffled training with the same streams.
    let (train, _) = rs2_core::harness::split_dataset(&dataset, 1.0, config.seed).unwrap();
    let model0 = Model::initialized(
        ModelKind::SoftmaxRegression,
        train.dim(),
        None,
        train.num_classes(),
        config.seed,
    )
    .unwrap();
    let mut model = model0.clone();
    let mut state = OptimizerState::new(model0.weights.clone());
    let loss = Loss::new(LossKind::CrossEntropy);
    let t = train.len().div_ceil(config.batch_size);
    let schedule = config.lr.build(t * rounds, 1.0);
    for round in 0..rounds {
        let mut perm: Vec<usize> = (0..train.len()).collect();
        let mut rng = Rng::new(config.seed, Stream::Shuffle, round as u64);
        shuffle(&mut rng, &mut perm);
        for chunk in perm.chunks(config.batch_size) {
            let features = train.features().select_rows(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels()[i]).collect();
            model.weights.copy_from_slice(&state.w);
            let (_, grad) = loss_and_grad(&model, &loss, &features, &labels).unwrap();
            let lr = lr_at(&schedule, state.t);
            sgd_step(&mut state, &grad, lr, 0.0).unwrap();
        }
    }
    assert_eq!(record.final_weights, state.w);
}

#[test]
fn early_stop_equivalence_fails_with_rescaled_lr() {
    // Sanity check on the equivalence itself: with the r-scaled schedule the
    // two runs take different step sizes and must diverge.
    let dataset = blob_dataset(100, 23);
    let rounds = 6;
    let mut rs2 = base_config(ScheduleKind::Rs2WithoutReplacement, 0.2, rounds);
    rs2.lr = LrSpec::new(LrKind::CosineRScaled, 0.2);
    let rs2_record = run(&rs2, &dataset).unwrap();

    let t = 100usize.div_ceil(5);
    let mut full = base_config(ScheduleKind::Rs2WithoutReplacement, 1.0, rounds);
    full.lr = LrSpec::new(LrKind::CosineRScaled, 0.2);
    full.step_limit = Some(ratio_floor(0.2, t * rounds));
    let full_record = run(&full, &dataset).unwrap();

    assert_ne!(rs2_record.final_weights, full_record.final_weights);
}
