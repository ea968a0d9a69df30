//! Line-oriented experiment configuration: `key = value` entries grouped
//! under `[dataset]`, `[model]`, `[train]`, `[sweep]` and `[report]`
//! sections. Unknown sections or keys are hard errors.

use crate::synth::{GeneratorKind, SyntheticSpec};
use rs2_core::harness::{LrKind, ModelSpec, OptimizerSpec, RunConfig, TimingMode};
use rs2_core::models::{Loss, LossKind, ModelKind};
use rs2_core::sampling::ScheduleKind;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Csv(PathBuf),
    Idx { images: PathBuf, labels: PathBuf },
}

/// Sweep axes; empty lists fall back to the `[train]` values / CLI seed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSettings {
    pub rs: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<ScheduleKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSettings {
    pub targets: Vec<f64>,
    pub plots: bool,
    pub timing: TimingMode,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            targets: Vec::new(),
            plots: false,
            timing: TimingMode::Measured,
        }
    }
}

/// Everything a `run`/`sweep` invocation needs: the dataset source, a
/// template run configuration, and the sweep/report options.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    pub template: RunConfig,
    pub sweep: SweepSettings,
    pub report: ReportSettings,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            dataset: DatasetSource::Synthetic(SyntheticSpec {
                kind: GeneratorKind::GaussianBlobs,
                n: 2000,
                d: 10,
                k: 5,
                separation: 3.0,
                noise: 1.0,
                seed: 0,
            }),
            template: RunConfig::new(
                ModelSpec {
                    kind: ModelKind::SoftmaxRegression,
                    hidden: None,
                    loss: Loss::new(LossKind::CrossEntropy),
                },
                ScheduleKind::Rs2WithoutReplacement,
                0.1,
                20,
            ),
            sweep: SweepSettings::default(),
            report: ReportSettings::default(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> ConfigResult<T> {
    value.trim().parse().map_err(|_| ConfigError::Syntax {
        line,
        message: format!("bad value '{value}' for key '{key}'"),
    })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> ConfigResult<Vec<T>> {
    value
        .split(',')
        .map(|item| parse_value(line, key, item))
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> ConfigResult<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(ConfigError::Syntax {
            line,
            message: format!("bad boolean '{other}' for key '{key}'"),
        }),
    }
}

/// Parse the config text into an experiment spec, starting from defaults.
pub fn parse_config(text: &str) -> ConfigResult<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    let mut synth = match &spec.dataset {
        DatasetSource::Synthetic(s) => *s,
        _ => unreachable!(),
    };
    let mut dataset_kind: Option<String> = None;
    let mut csv_path: Option<PathBuf> = None;
    let mut idx_images: Option<PathBuf> = None;
    let mut idx_labels: Option<PathBuf> = None;
    let mut momentum = 0.9;
    let mut optimizer_name = String::from("sgd");
    let mut nesterov = (1.0f64, 0.0f64, 1.0f64); // beta_smooth, sigma, d_tilde
    let mut timing_name = String::from("measured");
    let mut per_batch_ms = 1.0f64;
    let mut per_selection_ms = 0.0f64;

    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            if !matches!(
                section.as_str(),
                "dataset" | "model" | "train" | "sweep" | "report"
            ) {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("unknown section '[{section}]'"),
                });
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let unknown_key = || ConfigError::Syntax {
            line: line_no,
            message: format!("unknown key '{key}' in section '[{section}]'"),
        };
        match section.as_str() {
            "dataset" => match key {
                "kind" => dataset_kind = Some(value.to_string()),
                "path" => csv_path = Some(PathBuf::from(value)),
                "images" => idx_images = Some(PathBuf::from(value)),
                "labels" => idx_labels = Some(PathBuf::from(value)),
                "n" => synth.n = parse_value(line_no, key, value)?,
                "d" => synth.d = parse_value(line_no, key, value)?,
                "k" => synth.k = parse_value(line_no, key, value)?,
                "separation" => synth.separation = parse_value(line_no, key, value)?,
                "noise" => synth.noise = parse_value(line_no, key, value)?,
                "seed" => synth.seed = parse_value(line_no, key, value)?,
                _ => return Err(unknown_key()),
            },
            "model" => match key {
                "kind" => {
                    spec.template.model.kind =
                        ModelKind::parse(value).map_err(|e| ConfigError::Syntax {
                            line: line_no,
                            message: e.to_string(),
                        })?
                }
                "hidden" => spec.template.model.hidden = Some(parse_value(line_no, key, value)?),
                "loss" => {
                    spec.template.model.loss.kind =
                        LossKind::parse(value).map_err(|e| ConfigError::Syntax {
                            line: line_no,
                            message: e.to_string(),
                        })?
                }
                "l2" => spec.template.model.loss.l2 = parse_value(line_no, key, value)?,
                _ => return Err(unknown_key()),
            },
            "train" => match key {
                "method" => {
                    spec.template.schedule =
                        ScheduleKind::parse(value).map_err(|e| ConfigError::Syntax {
                            line: line_no,
                            message: e.to_string(),
                        })?
                }
                "r" => spec.template.r = parse_value(line_no, key, value)?,
                "rounds" => spec.template.rounds = parse_value(line_no, key, value)?,
                "batch_size" => spec.template.batch_size = parse_value(line_no, key, value)?,
                "lr" => {
                    spec.template.lr.kind =
                        LrKind::parse(value).map_err(|e| ConfigError::Syntax {
                            line: line_no,
                            message: e.to_string(),
                        })?
                }
                "eta0" => spec.template.lr.eta0 = parse_value(line_no, key, value)?,
                "eta_min" => spec.template.lr.eta_min = parse_value(line_no, key, value)?,
                "lr_c" => spec.template.lr.c = parse_value(line_no, key, value)?,
                "momentum" => momentum = parse_value(line_no, key, value)?,
                "optimizer" => optimizer_name = value.to_string(),
                "beta_smooth" => nesterov.0 = parse_value(line_no, key, value)?,
                "sigma" => nesterov.1 = parse_value(line_no, key, value)?,
                "d_tilde" => nesterov.2 = parse_value(line_no, key, value)?,
                "noise_p" => spec.template.noise_p = parse_value(line_no, key, value)?,
                "eval_cadence" => spec.template.eval_cadence = parse_value(line_no, key, value)?,
                "split_ratio" => spec.template.split_ratio = parse_value(line_no, key, value)?,
                "step_limit" => spec.template.step_limit = Some(parse_value(line_no, key, value)?),
                "seed" => spec.template.seed = parse_value(line_no, key, value)?,
                _ => return Err(unknown_key()),
            },
            "sweep" => match key {
                "r" => spec.sweep.rs = parse_list(line_no, key, value)?,
                "seeds" => spec.sweep.seeds = parse_list(line_no, key, value)?,
                "methods" => {
                    spec.sweep.methods = value
                        .split(',')
                        .map(|m| {
                            ScheduleKind::parse(m.trim()).map_err(|e| ConfigError::Syntax {
                                line: line_no,
                                message: e.to_string(),
                            })
                        })
                        .collect::<ConfigResult<Vec<_>>>()?
                }
                _ => return Err(unknown_key()),
            },
            "report" => match key {
                "targets" => spec.report.targets = parse_list(line_no, key, value)?,
                "plots" => spec.report.plots = parse_bool(line_no, key, value)?,
                "timing" => timing_name = value.to_string(),
                "per_batch_ms" => per_batch_ms = parse_value(line_no, key, value)?,
                "per_selection_ms" => per_selection_ms = parse_value(line_no, key, value)?,
                _ => return Err(unknown_key()),
            },
            "" => {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: "key outside of any section".into(),
                })
            }
            _ => unreachable!(),
        }
    }

    spec.template.optimizer = match optimizer_name.as_str() {
        "sgd" => OptimizerSpec::Sgd { momentum },
        "nesterov" => OptimizerSpec::Nesterov {
            beta_smooth: nesterov.0,
            sigma: nesterov.1,
            d_tilde: nesterov.2,
        },
        other => return Err(ConfigError::Invalid(format!("unknown optimizer '{other}'"))),
    };
    spec.report.timing = match timing_name.as_str() {
        "measured" => TimingMode::Measured,
        "modeled" => TimingMode::Modeled {
            per_batch_ms,
            per_selection_ms,
        },
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown timing mode '{other}'"
            )))
        }
    };
    spec.template.timing = spec.report.timing;

    spec.dataset = match dataset_kind.as_deref() {
        None | Some("gaussian_blobs") | Some("concentric") | Some("checkerboard") => {
            if let Some(kind) = dataset_kind.as_deref() {
                synth.kind =
                    GeneratorKind::parse(kind).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            DatasetSource::Synthetic(synth)
        }
        Some("csv") => DatasetSource::Csv(
            csv_path
                .ok_or_else(|| ConfigError::Invalid("dataset kind 'csv' needs 'path'".into()))?,
        ),
        Some("idx") => DatasetSource::Idx {
            images: idx_images
                .ok_or_else(|| ConfigError::Invalid("dataset kind 'idx' needs 'images'".into()))?,
            labels: idx_labels
                .ok_or_else(|| ConfigError::Invalid("dataset kind 'idx' needs 'labels'".into()))?,
        },
        Some(other) => {
            return Err(ConfigError::Invalid(format!(
                "unknown dataset kind '{other}'"
            )))
        }
    };
    Ok(spec)
}

/// Render a spec back to config text (section order fixed; used for the
/// metadata dump next to report files).
pub fn render_config(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    match &spec.dataset {
        DatasetSource::Synthetic(s) => {
            writeln!(out, "[dataset]").unwrap();
            writeln!(out, "kind = {}", s.kind.name()).unwrap();
            writeln!(out, "n = {}", s.n).unwrap();
            writeln!(out, "d = {}", s.d).unwrap();
            writeln!(out, "k = {}", s.k).unwrap();
            writeln!(out, "separation = {}", s.separation).unwrap();
            writeln!(out, "noise = {}", s.noise).unwrap();
            writeln!(out, "seed = {}", s.seed).unwrap();
        }
        DatasetSource::Csv(path) => {
            writeln!(out, "[dataset]").unwrap();
            writeln!(out, "kind = csv").unwrap();
            writeln!(out, "path = {}", path.display()).unwrap();
        }
        DatasetSource::Idx { images, labels } => {
            writeln!(out, "[dataset]").unwrap();
            writeln!(out, "kind = idx").unwrap();
            writeln!(out, "images = {}", images.display()).unwrap();
            writeln!(out, "labels = {}", labels.display()).unwrap();
        }
    }
    let t = &spec.template;
    writeln!(out, "[model]").unwrap();
    writeln!(out, "kind = {}", t.model.kind.name()).unwrap();
    if let Some(h) = t.model.hidden {
        writeln!(out, "hidden = {h}").unwrap();
    }
    writeln!(out, "loss = {}", t.model.loss.kind.name()).unwrap();
    writeln!(out, "l2 = {}", t.model.loss.l2).unwrap();
    writeln!(out, "[train]").unwrap();
    writeln!(out, "method = {}", t.schedule.name()).unwrap();
    writeln!(out, "r = {}", t.r).unwrap();
    writeln!(out, "rounds = {}", t.rounds).unwrap();
    writeln!(out, "batch_size = {}", t.batch_size).unwrap();
    writeln!(out, "lr = {}", t.lr.kind.name()).unwrap();
    writeln!(out, "eta0 = {}", t.lr.eta0).unwrap();
    writeln!(out, "eta_min = {}", t.lr.eta_min).unwrap();
    match t.optimizer {
        OptimizerSpec::Sgd { momentum } => {
            writeln!(out, "optimizer = sgd").unwrap();
            writeln!(out, "momentum = {momentum}").unwrap();
        }
        OptimizerSpec::Nesterov {
            beta_smooth,
            sigma,
            d_tilde,
        } => {
            writeln!(out, "optimizer = nesterov").unwrap();
            writeln!(out, "beta_smooth = {beta_smooth}").unwrap();
            writeln!(out, "sigma = {sigma}").unwrap();
            writeln!(out, "d_tilde = {d_tilde}").unwrap();
        }
    }
    writeln!(out, "noise_p = {}", t.noise_p).unwrap();
    writeln!(out, "eval_cadence = {}", t.eval_cadence).unwrap();
    writeln!(out, "split_ratio = {}", t.split_ratio).unwrap();
    writeln!(out, "seed = {}", t.seed).unwrap();
    if !spec.sweep.rs.is_empty() || !spec.sweep.seeds.is_empty() || !spec.sweep.methods.is_empty() {
        writeln!(out, "[sweep]").unwrap();
        if !spec.sweep.rs.is_empty() {
            let list: Vec<String> = spec.sweep.rs.iter().map(f64::to_string).collect();
            writeln!(out, "r = {}", list.join(", ")).unwrap();
        }
        if !spec.sweep.seeds.is_empty() {
            let list: Vec<String> = spec.sweep.seeds.iter().map(u64::to_string).collect();
            writeln!(out, "seeds = {}", list.join(", ")).unwrap();
        }
        if !spec.sweep.methods.is_empty() {
            let list: Vec<&str> = spec.sweep.methods.iter().map(|m| m.name()).collect();
            writeln!(out, "methods = {}", list.join(", ")).unwrap();
        }
    }
    writeln!(out, "[report]").unwrap();
    if !spec.report.targets.is_empty() {
        let list: Vec<String> = spec.report.targets.iter().map(f64::to_string).collect();
        writeln!(out, "targets = {}", list.join(", ")).unwrap();
    }
    writeln!(out, "plots = {}", spec.report.plots).unwrap();
    match spec.report.timing {
        TimingMode::Measured => writeln!(out, "timing = measured").unwrap(),
        TimingMode::Modeled {
            per_batch_ms,
            per_selection_ms,
        } => {
            writeln!(out, "timing = modeled").unwrap();
            writeln!(out, "per_batch_ms = {per_batch_ms}").unwrap();
            writeln!(out, "per_selection_ms = {per_selection_ms}").unwrap();
        }
    }
    out
}
