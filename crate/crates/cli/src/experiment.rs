//! Sweep orchestration: run every (method, r, seed) cell, write per-run
//! CSVs, aggregate the summary and time-to-accuracy tables, and optionally
//! emit SVG charts. Cells execute in parallel and are independent; report
//! assembly is single-threaded and deterministic.

use crate::config::{DatasetSource, ExperimentSpec};
use crate::io::{load_csv, load_idx};
use crate::report::{
    self, mean_and_sample_std, run_record_csv, summary_csv, tta_csv, Series, SummaryRow,
};
use crate::synth::generate_dataset;
use anyhow::{Context, Result};
use rayon::prelude::*;
use rs2_core::dataset::Dataset;
use rs2_core::harness::{run, time_to_accuracy, LrKind, RunConfig, RunRecord, TimeToAccuracy};
use rs2_core::sampling::ScheduleKind;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone)]
pub struct Cell {
    pub method: ScheduleKind,
    pub r: f64,
    pub seed: u64,
}

#[derive(Debug)]
pub struct CellOutcome {
    pub cell: Cell,
    pub result: std::result::Result<RunRecord, String>,
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub cells: Vec<CellOutcome>,
    pub summary: Vec<SummaryRow>,
    pub failed: usize,
    pub out_dir: PathBuf,
}

pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Synthetic(spec) => {
            generate_dataset(spec).context("generating synthetic dataset")
        }
        DatasetSource::Csv(path) => {
            Ok(load_csv(path).with_context(|| format!("loading {}", path.display()))?)
        }
        DatasetSource::Idx { images, labels } => Ok(load_idx(images, labels)
            .with_context(|| format!("loading {} / {}", images.display(), labels.display()))?),
    }
}

fn cell_config(template: &RunConfig, cell: &Cell) -> RunConfig {
    let mut config = template.clone();
    config.schedule = cell.method;
    config.r = cell.r;
    config.seed = cell.seed;
    config
}

fn cell_file_name(cell: &Cell) -> String {
    format!("{}_r{}_seed{}.csv", cell.method.name(), cell.r, cell.seed)
}

/// Cartesian sweep grid; empty axes fall back to the template values.
pub fn sweep_cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let methods = if spec.sweep.methods.is_empty() {
        vec![spec.template.schedule]
    } else {
        spec.sweep.methods.clone()
    };
    let rs = if spec.sweep.rs.is_empty() {
        vec![spec.template.r]
    } else {
        spec.sweep.rs.clone()
    };
    let seeds = if spec.sweep.seeds.is_empty() {
        vec![spec.template.seed]
    } else {
        spec.sweep.seeds.clone()
    };
    let mut cells = Vec::new();
    for &method in &methods {
        for &r in &rs {
            for &seed in &seeds {
                cells.push(Cell { method, r, seed });
            }
        }
    }
    cells
}

/// Execute the sweep and write all report files under `out_dir`.
///
/// Returns the outcomes; `failed > 0` means some cells errored or aborted
/// (their report rows are skipped and failures.csv lists them).
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<ExperimentReport> {
    let dataset = load_dataset(&spec.dataset)?;
    let cells = sweep_cells(spec);
    fs::create_dir_all(out_dir.join("runs"))?;

    let execute = |cell: &Cell| -> CellOutcome {
        let config = cell_config(&spec.template, cell);
        let result = match run(&config, &dataset) {
            Ok(record) if record.complete => Ok(record),
            Ok(record) => Err(record
                .abort_reason
                .unwrap_or_else(|| "run incomplete".into())),
            Err(e) => Err(e.to_string()),
        };
        CellOutcome {
            cell: cell.clone(),
            result,
        }
    };
    let outcomes: Vec<CellOutcome> = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .context("building worker pool")?
            .install(|| cells.par_iter().map(execute).collect()),
        None => cells.par_iter().map(execute).collect(),
    };

    // Per-run CSVs.
    for outcome in &outcomes {
        if let Ok(record) = &outcome.result {
            let path = out_dir.join("runs").join(cell_file_name(&outcome.cell));
            fs::write(&path, run_record_csv(record))?;
        }
    }

    // Summary grouped by (method, r) in sweep order.
    let mut summary: Vec<SummaryRow> = Vec::new();
    for outcome in &outcomes {
        let key = (outcome.cell.method, outcome.cell.r);
        if summary
            .iter()
            .any(|row| row.method == key.0.name() && row.r == key.1)
        {
            continue;
        }
        let group: Vec<&RunRecord> = outcomes
            .iter()
            .filter(|o| o.cell.method == key.0 && o.cell.r == key.1)
            .filter_map(|o| o.result.as_ref().ok())
            .collect();
        if group.is_empty() {
            continue;
        }
        let accs: Vec<f64> = group.iter().map(|r| r.final_test_accuracy).collect();
        let times: Vec<f64> = group
            .iter()
            .map(|r| r.total_selection_ms + r.total_train_ms)
            .collect();
        let (acc_mean, acc_std) = mean_and_sample_std(&accs);
        let (time_mean, _) = mean_and_sample_std(&times);
        summary.push(SummaryRow {
            method: key.0.name().to_string(),
            r: key.1,
            n_seeds: group.len(),
            acc_mean,
            acc_std,
            mean_total_ms: time_mean,
        });
    }
    fs::write(out_dir.join("summary.csv"), summary_csv(&summary))?;

    // Time-to-accuracy table.
    if !spec.report.targets.is_empty() {
        let mut rows: Vec<(String, f64, u64, TimeToAccuracy)> = Vec::new();
        for outcome in &outcomes {
            if let Ok(record) = &outcome.result {
                let tta = time_to_accuracy(record, &spec.report.targets)?;
                rows.push((
                    outcome.cell.method.name().to_string(),
                    outcome.cell.r,
                    outcome.cell.seed,
                    tta,
                ));
            }
        }
        fs::write(out_dir.join("tta.csv"), tta_csv(&rows))?;
    }

    // Failures list.
    let failures: Vec<&CellOutcome> = outcomes.iter().filter(|o| o.result.is_err()).collect();
    if !failures.is_empty() {
        let mut text = String::from("method,r,seed,error\n");
        for f in &failures {
            text.push_str(&format!(
                "{},{},{},{}\n",
                f.cell.method.name(),
                f.cell.r,
                f.cell.seed,
                f.result.as_ref().unwrap_err().replace(',', ";")
            ));
        }
        fs::write(out_dir.join("failures.csv"), text)?;
    }

    if spec.report.plots {
        write_plots(spec, &dataset, &outcomes, out_dir)?;
    }

    // Wall-clock metadata lives here, away from the deterministic tables.
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    fs::write(
        out_dir.join("metadata.txt"),
        format!(
            "unix_time = {stamp}\ncells = {}\nfailed = {}\n\n{}",
            outcomes.len(),
            failures.len(),
            crate::config::render_config(spec)
        ),
    )?;

    Ok(ExperimentReport {
        failed: failures.len(),
        summary,
        cells: outcomes,
        out_dir: out_dir.to_path_buf(),
    })
}

fn write_plots(
    spec: &ExperimentSpec,
    dataset: &Dataset,
    outcomes: &[CellOutcome],
    out_dir: &Path,
) -> Result<()> {
    let plot_dir = out_dir.join("plots");
    fs::create_dir_all(&plot_dir)?;

    // Accuracy vs cumulative time, first seed of each (method, r) cell.
    let mut acc_series: Vec<Series> = Vec::new();
    for outcome in outcomes {
        let label = format!("{} r={}", outcome.cell.method.name(), outcome.cell.r);
        if acc_series.iter().any(|s| s.label == label) {
            continue;
        }
        if let Ok(record) = &outcome.result {
            acc_series.push(Series {
                label,
                points: record
                    .entries
                    .iter()
                    .map(|e| (e.cum_time_ms, e.test_accuracy))
                    .collect(),
            });
        }
    }
    fs::write(
        plot_dir.join("accuracy_vs_time.svg"),
        report::svg_line_chart(
            "Test accuracy vs time",
            "cumulative time (ms)",
            "test accuracy",
            &acc_series,
        ),
    )?;

    // Learning-rate schedules over the full horizon, like the usual
    // full-vs-compressed decay comparison.
    let train_n = rs2_core::sampling::ratio_floor(spec.template.split_ratio, dataset.len()).max(1);
    let t = train_n.div_ceil(spec.template.batch_size);
    let horizon = t * spec.template.rounds;
    let r = spec.template.r;
    let kinds = [
        (LrKind::CosineFull, 1.0),
        (LrKind::CosineRScaled, r),
        (LrKind::NaiveEarlyStop, r),
    ];
    let mut lr_series = Vec::new();
    for (kind, kr) in kinds {
        let mut lr_spec = spec.template.lr;
        lr_spec.kind = kind;
        let schedule = lr_spec.build(horizon, kr);
        let limit = match kind {
            LrKind::CosineFull => horizon,
            _ => rs2_core::sampling::ratio_floor(kr, horizon).max(1),
        };
        let stride = (limit / 400).max(1);
        let mut points: Vec<(f64, f64)> = (1..=limit)
            .step_by(stride)
            .map(|s| (s as f64, schedule.lr_at(s)))
            .collect();
        if points.last().map(|p| p.0 as usize) != Some(limit) {
            points.push((limit as f64, schedule.lr_at(limit)));
        }
        lr_series.push(Series {
            label: format!("{} (r={kr})", kind.name()),
            points,
        });
    }
    fs::write(
        plot_dir.join("lr_vs_step.svg"),
        report::svg_line_chart(
            "Learning-rate schedules",
            "global step",
            "learning rate",
            &lr_series,
        ),
    )?;
    Ok(())
}
