//! Round-loop training driver with per-round subset selection, timing, and
//! accuracy tracking.
//!
//! One run executes `rounds` rounds. Each round first asks the schedule for a
//! subset (timed as selection), then trains on that subset in mini-batches of
//! `batch_size` (timed as training), stepping the learning-rate schedule by
//! global step index. Everything is derived from the config seed, so two runs
//! with equal configs agree bit-for-bit except for wall-clock fields.

use crate::dataset::Dataset;
use crate::models::{
    accuracy as model_accuracy, loss_and_grad, loss_value, per_example_losses, Loss, Model,
    ModelKind,
};
use crate::optim::{
    appendix_d_params, compute_md_point, lr_at, nesterov_step, sgd_step, AcceleratedParams,
    LrSchedule, OptimizerState,
};
use crate::rng::{uniform_indices, Rng, Stream};
use crate::sampling::{loss_based_weights, ratio_floor, ScheduleKind, SubsetSchedule};
use crate::{Error, Result};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrKind {
    Constant,
    CosineFull,
    CosineRScaled,
    NaiveEarlyStop,
    InverseT,
}

impl LrKind {
    pub fn name(self) -> &'static str {
        match self {
            LrKind::Constant => "constant",
            LrKind::CosineFull => "cosine_full",
            LrKind::CosineRScaled => "cosine_r_scaled",
            LrKind::NaiveEarlyStop => "naive_early_stop",
            LrKind::InverseT => "inverse_t",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrKind::Constant),
            "cosine_full" => Ok(LrKind::CosineFull),
            "cosine_r_scaled" => Ok(LrKind::CosineRScaled),
            "naive_early_stop" => Ok(LrKind::NaiveEarlyStop),
            "inverse_t" => Ok(LrKind::InverseT),
            other => Err(Error::InvalidArgument(format!(
                "unknown lr schedule kind '{other}'"
            ))),
        }
    }
}

/// Learning-rate schedule parameters before the step horizon is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSpec {
    pub kind: LrKind,
    pub eta0: f64,
    pub eta_min: f64,
    /// Constant for the inverse-t kind (eta_t = c / t).
    pub c: f64,
}

impl LrSpec {
    pub fn new(kind: LrKind, eta0: f64) -> Self {
        LrSpec {
            kind,
            eta0,
            eta_min: 0.0,
            c: eta0,
        }
    }

    pub fn build(&self, total_full_steps: usize, r: f64) -> LrSchedule {
        match self.kind {
            LrKind::Constant => LrSchedule::Constant { eta0: self.eta0 },
            LrKind::CosineFull => LrSchedule::CosineFull {
                eta0: self.eta0,
                eta_min: self.eta_min,
                total_full_steps,
            },
            LrKind::CosineRScaled => LrSchedule::CosineRScaled {
                eta0: self.eta0,
                eta_min: self.eta_min,
                total_full_steps,
                r,
            },
            LrKind::NaiveEarlyStop => LrSchedule::NaiveEarlyStop {
                eta0: self.eta0,
                eta_min: self.eta_min,
                total_full_steps,
            },
            LrKind::InverseT => LrSchedule::InverseT { c: self.c },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerSpec {
    Sgd {
        momentum: f64,
    },
    /// Accelerated updates with the closed-form parameter sequences; the
    /// smoothness/noise constants are supplied (or estimated) by the caller.
    Nesterov {
        beta_smooth: f64,
        sigma: f64,
        d_tilde: f64,
    },
}

/// How selection/training durations are obtained: measured from a monotonic
/// clock, or modeled as work-proportional costs (selection and training both
/// vary run to run on a wall clock; the modeled form is reproducible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimingMode {
    Measured,
    Modeled {
        per_batch_ms: f64,
        per_selection_ms: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hidden: Option<usize>,
    pub loss: Loss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub schedule: ScheduleKind,
    pub r: f64,
    /// Number of rounds X.
    pub rounds: usize,
    pub batch_size: usize,
    pub lr: LrSpec,
    pub optimizer: OptimizerSpec,
    pub seed: u64,
    /// Fraction of train labels to flip, in [0, 1).
    pub noise_p: f64,
    /// Evaluate every this many rounds (the final round always evaluates).
    pub eval_cadence: usize,
    pub accuracy_targets: Vec<f64>,
    /// Train fraction of the input dataset; the rest is held out.
    pub split_ratio: f64,
    /// Stop after this many optimizer steps, even mid-round.
    pub step_limit: Option<usize>,
    pub timing: TimingMode,
}

impl RunConfig {
    /// Baseline configuration: SGD, cosine r-scaled LR, 80/20 split,
    /// evaluation every round, measured timing.
    pub fn new(model: ModelSpec, schedule: ScheduleKind, r: f64, rounds: usize) -> Self {
        RunConfig {
            model,
            schedule,
            r,
            rounds,
            batch_size: 32,
            lr: LrSpec::new(LrKind::CosineRScaled, 0.1),
            optimizer: OptimizerSpec::Sgd { momentum: 0.0 },
            seed: 0,
            noise_p: 0.0,
            eval_cadence: 1,
            accuracy_targets: Vec::new(),
            split_ratio: 0.8,
            step_limit: None,
            timing: TimingMode::Measured,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "r must be in (0, 1], got {}",
                self.r
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise_p) {
            return Err(Error::InvalidArgument(format!(
                "noise ratio must be in [0, 1), got {}",
                self.noise_p
            )));
        }
        if self.eval_cadence == 0 {
            return Err(Error::InvalidArgument("eval cadence must be >= 1".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split ratio must be in (0, 1], got {}",
                self.split_ratio
            )));
        }
        Ok(())
    }
}

/// One evaluated round. The ms fields accumulate everything since the
/// previous entry so that their sums equal the record totals at any cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundEntry {
    pub round: usize,
    pub steps_so_far: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub lr_last: f64,
    pub selection_ms: f64,
    pub train_ms: f64,
    pub cum_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub entries: Vec<RoundEntry>,
    pub total_selection_ms: f64,
    pub total_train_ms: f64,
    pub steps: usize,
    /// The reported iterate (the point the last gradient was taken at).
    pub final_weights: Vec<f64>,
    pub weights_digest: String,
    pub final_train_loss: f64,
    pub final_test_accuracy: f64,
    /// Squared norm of the full-train gradient at the final weights.
    pub final_grad_norm_sq: f64,
    pub complete: bool,
    pub abort_reason: Option<String>,
}

/// FNV-1a over the little-endian weight bytes.
pub fn weights_digest(weights: &[f64]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for w in weights {
        for byte in w.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{hash:016x}")
}

/// Shuffle-split into train and held-out parts using the dedicated stream.
/// `split_ratio = 1.0` yields an empty held-out set.
pub fn split_dataset(dataset: &Dataset, split_ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(split_ratio > 0.0 && split_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must be in (0, 1], got {split_ratio}"
        )));
    }
    let n = dataset.len();
    let train_count = ratio_floor(split_ratio, n).max(1);
    let mut rng = Rng::new(seed, Stream::Split, 0);
    let order = uniform_indices(&mut rng, n, n, true)?;
    let train = dataset.subset(&order[..train_count])?;
    let heldout = dataset.subset(&order[train_count..])?;
    Ok((train, heldout))
}

/// Flip the labels of exactly `round(p * N)` uniformly chosen examples to a
/// uniformly chosen *different* class.
pub fn flip_labels(dataset: &Dataset, p: f64, rng: &mut Rng) -> Result<Dataset> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "noise ratio must be in [0, 1), got {p}"
        )));
    }
    let k = dataset.num_classes();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "label flipping needs at least 2 classes".into(),
        ));
    }
    let n = dataset.len();
    let flips = (p * n as f64).round() as usize;
    let mut labels = dataset.labels().to_vec();
    let victims = uniform_indices(rng, n, flips, true)?;
    for i in victims {
        let old = labels[i];
        let draw = rng.below(k - 1);
        labels[i] = if draw >= old { draw + 1 } else { draw };
    }
    dataset.with_labels(labels)
}

/// Raw and relative (percent of clean) accuracy drop.
pub fn relative_accuracy_drop(clean_acc: f64, noisy_acc: f64) -> Result<(f64, f64)> {
    if clean_acc <= 0.0 {
        return Err(Error::InvalidArgument(
            "clean accuracy must be positive".into(),
        ));
    }
    let raw = clean_acc - noisy_acc;
    Ok((raw, 100.0 * raw / clean_acc))
}

/// Mean held-out loss minus mean training loss at the model's weights.
pub fn generalization_gap(
    model: &Model,
    loss: &Loss,
    train: &Dataset,
    heldout: &Dataset,
) -> Result<f64> {
    let train_loss = loss_value(model, loss, train.features(), train.labels())?;
    let heldout_loss = loss_value(model, loss, heldout.features(), heldout.labels())?;
    Ok(heldout_loss - train_loss)
}

/// Earliest cumulative time at which each accuracy target was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeToAccuracy {
    /// `(target, earliest cum_time_ms)`, sorted by ascending target;
    /// `None` when the target was never reached.
    pub entries: Vec<(f64, Option<f64>)>,
}

pub fn time_to_accuracy(record: &RunRecord, targets: &[f64]) -> Result<TimeToAccuracy> {
    if !record.complete {
        return Err(Error::InvalidArgument(
            "time-to-accuracy needs a complete run record".into(),
        ));
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let entries = sorted
        .into_iter()
        .map(|target| {
            let hit = record
                .entries
                .iter()
                .find(|e| e.test_accuracy >= target)
                .map(|e| e.cum_time_ms);
            (target, hit)
        })
        .collect();
    Ok(TimeToAccuracy { entries })
}

struct Timer {
    start: Instant,
}

impl Timer {
    fn start() -> Self {
        Timer {
            start: Instant::now(),
        }
    }

    fn ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

/// Execute one configured run on `dataset`.
///
/// Numeric failures inside the optimizer abort the run and return a partial
/// record flagged incomplete; configuration and shape problems are `Err`.
pub fn run(config: &RunConfig, dataset: &Dataset) -> Result<RunRecord> {
    config.validate()?;
    let (train, heldout) = split_dataset(dataset, config.split_ratio, config.seed)?;
    let train = if config.noise_p > 0.0 {
        let mut rng = Rng::new(config.seed, Stream::LabelNoise, 0);
        flip_labels(&train, config.noise_p, &mut rng)?
    } else {
        train
    };

    let mut model = Model::initialized(
        config.model.kind,
        train.dim(),
        config.model.hidden,
        train.num_classes(),
        config.seed,
    )?;
    let loss = config.model.loss;
    let mut state = OptimizerState::new(model.weights.clone());
    let subset_size = ratio_floor(config.r, train.len());
    if subset_size == 0 {
        return Err(Error::InvalidArgument(
            "selection ratio too small for dataset".into(),
        ));
    }
    // Constructed lazily inside the round-1 selection timer so its setup
    // work (initial permutation, class index) is charged as selection.
    let mut sched: Option<SubsetSchedule> = None;

    let b = config.batch_size;
    let t_batches = train.len().div_ceil(b);
    let lr_schedule = config.lr.build(t_batches * config.rounds, config.r);
    let steps_per_round = subset_size.div_ceil(b);
    let accel: Option<AcceleratedParams> = match config.optimizer {
        OptimizerSpec::Sgd { .. } => None,
        OptimizerSpec::Nesterov {
            beta_smooth,
            sigma,
            d_tilde,
        } => Some(appendix_d_params(
            beta_smooth,
            sigma,
            1.0,
            steps_per_round,
            config.rounds,
            d_tilde,
        )?),
    };

    let mut entries: Vec<RoundEntry> = Vec::new();
    let mut total_selection_ms = 0.0;
    let mut total_train_ms = 0.0;
    let mut pending_selection_ms = 0.0;
    let mut pending_train_ms = 0.0;
    let mut steps = 0usize;
    let mut abort: Option<String> = None;
    let mut lr_last = f64::NAN;

    'rounds: for round in 1..=config.rounds {
        // --- subset selection (timed) ---
        let timer = Timer::start();
        if sched.is_none() {
            sched = Some(SubsetSchedule::new(
                config.schedule,
                config.r,
                config.seed,
                &train,
            )?);
        }
        let sched = sched.as_mut().unwrap();
        let needs_weights = match config.schedule {
            ScheduleKind::ImportanceRecompute => true,
            ScheduleKind::ImportanceResample => round == 1,
            _ => false,
        };
        if needs_weights {
            model.weights.copy_from_slice(&state.w_md);
            let losses = per_example_losses(&model, &loss, train.features(), train.labels())?;
            sched.update_weights(loss_based_weights(&losses)?)?;
        }
        let subset = sched.next_round_subset(round, &train)?;
        let selection_ms = match config.timing {
            TimingMode::Measured => timer.ms(),
            TimingMode::Modeled {
                per_selection_ms, ..
            } => {
                let selecting = round == 1 || config.schedule != ScheduleKind::StaticRandom;
                if selecting {
                    per_selection_ms
                } else {
                    0.0
                }
            }
        };
        total_selection_ms += selection_ms;
        pending_selection_ms += selection_ms;

        // --- training on the subset (timed) ---
        let timer = Timer::start();
        let mut round_loss_weighted = 0.0;
        let mut batches_this_round = 0usize;
        let mut hit_step_limit = false;
        for chunk in subset.chunks(b) {
            let features = train.features().select_rows(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels()[i]).collect();
            let step = state.t;
            let step_result = match config.optimizer {
                OptimizerSpec::Sgd { momentum } => {
                    model.weights.copy_from_slice(&state.w);
                    lr_last = lr_at(&lr_schedule, step);
                    loss_and_grad(&model, &loss, &features, &labels).and_then(|(l, grad)| {
                        round_loss_weighted += l * chunk.len() as f64;
                        sgd_step(&mut state, &grad, lr_last, momentum)
                    })
                }
                OptimizerSpec::Nesterov { .. } => {
                    let params = accel.as_ref().unwrap();
                    let md = compute_md_point(&mut state, params).to_vec();
                    model.weights.copy_from_slice(&md);
                    lr_last = params.lambda(step);
                    loss_and_grad(&model, &loss, &features, &labels).and_then(|(l, grad)| {
                        round_loss_weighted += l * chunk.len() as f64;
                        nesterov_step(&mut state, &grad, params)
                    })
                }
            };
            match step_result {
                Ok(()) => {}
                Err(Error::Numeric(msg)) => {
                    abort = Some(msg);
                    break;
                }
                Err(other) => return Err(other),
            }
            steps += 1;
            batches_this_round += 1;
            if config.step_limit.is_some_and(|limit| steps >= limit) {
                hit_step_limit = true;
                break;
            }
        }
        let examples_this_round: usize = subset.len().min(batches_this_round * b);
        let last_round_loss = if examples_this_round > 0 {
            round_loss_weighted / examples_this_round as f64
        } else {
            f64::NAN
        };
        let train_ms = match config.timing {
            TimingMode::Measured => timer.ms(),
            TimingMode::Modeled { per_batch_ms, .. } => per_batch_ms * batches_this_round as f64,
        };
        total_train_ms += train_ms;
        pending_train_ms += train_ms;

        // No evaluation after an abort: the iterates may be non-finite.
        let is_last = round == config.rounds || hit_step_limit;
        if abort.is_none() && (round % config.eval_cadence == 0 || is_last) {
            model.weights.copy_from_slice(&state.w_md);
            let test_accuracy = model_accuracy(&model, &heldout)?;
            entries.push(RoundEntry {
                round,
                steps_so_far: steps,
                train_loss: last_round_loss,
                test_accuracy,
                lr_last,
                selection_ms: pending_selection_ms,
                train_ms: pending_train_ms,
                cum_time_ms: total_selection_ms + total_train_ms,
            });
            pending_selection_ms = 0.0;
            pending_train_ms = 0.0;
        }
        if is_last || abort.is_some() {
            break 'rounds;
        }
    }

    model.weights.copy_from_slice(&state.w_md);
    let complete = abort.is_none();
    let (final_train_loss, final_grad_norm_sq) = if complete {
        let (l, g) = loss_and_grad(&model, &loss, train.features(), train.labels())?;
        (l, g.iter().map(|x| x * x).sum())
    } else {
        (f64::NAN, f64::NAN)
    };
    let final_test_accuracy = entries.last().map_or(0.0, |e| e.test_accuracy);

    Ok(RunRecord {
        total_selection_ms,
        total_train_ms,
        steps,
        weights_digest: weights_digest(&state.w_md),
        final_weights: state.w_md,
        final_train_loss,
        final_test_accuracy,
        final_grad_norm_sq,
        complete,
        abort_reason: abort,
        entries,
    })
}
