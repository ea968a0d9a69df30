use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rs2_cli::config::{parse_config, ExperimentSpec};
use rs2_cli::experiment::{load_dataset, run_experiment};
use rs2_cli::io::write_csv;
use rs2_cli::synth::{generate_dataset, GeneratorKind, SyntheticSpec};
use rs2_cli::theory_cmd::{
    convergence_table, generalization_table, ConvergenceArgs, GeneralizationArgs,
};
use rs2_core::harness::LrKind;
use rs2_core::models::ModelKind;
use rs2_core::sampling::ScheduleKind;
use rs2_core::theory::nn_label_disagreement;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

/// Training benchmark driver for per-round data subset selection.
#[derive(Parser)]
#[command(name = "rs2", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single training run and write its round log.
    Run(RunCmd),
    /// Execute a (method x r x seed) sweep and write report files.
    Sweep(SweepCmd),
    /// Print convergence / generalization bound tables.
    Theory(TheoryCmd),
    /// Nearest-neighbor label-disagreement fraction of a dataset.
    NnProxy(NnProxyCmd),
    /// Generate a synthetic dataset and write it as CSV.
    GenData(GenDataCmd),
}

#[derive(Args)]
struct SpecOverrides {
    /// Experiment config file (`key = value` sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Subset selection strategy.
    #[arg(long)]
    method: Option<String>,
    /// Selection ratio in (0, 1].
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Learning-rate schedule kind.
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    /// Fraction of training labels to flip.
    #[arg(long)]
    noise_p: Option<f64>,
    /// Model kind.
    #[arg(long)]
    model: Option<String>,
}

impl SpecOverrides {
    fn build(&self, seed: u64) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentSpec::default(),
        };
        spec.template.seed = seed;
        if let Some(method) = &self.method {
            spec.template.schedule = ScheduleKind::parse(method)?;
        }
        if let Some(r) = self.r {
            spec.template.r = r;
        }
        if let Some(rounds) = self.rounds {
            spec.template.rounds = rounds;
        }
        if let Some(b) = self.batch_size {
            spec.template.batch_size = b;
        }
        if let Some(lr) = &self.lr {
            spec.template.lr.kind = LrKind::parse(lr)?;
        }
        if let Some(eta0) = self.eta0 {
            spec.template.lr.eta0 = eta0;
        }
        if let Some(m) = self.momentum {
            spec.template.optimizer = rs2_core::harness::OptimizerSpec::Sgd { momentum: m };
        }
        if let Some(p) = self.noise_p {
            spec.template.noise_p = p;
        }
        if let Some(model) = &self.model {
            spec.template.model.kind = ModelKind::parse(model)?;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct RunCmd {
    #[command(flatten)]
    overrides: SpecOverrides,
    /// Base seed for the run.
    #[arg(long)]
    seed: u64,
    /// Output directory for the round log and metadata.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    overrides: SpecOverrides,
    /// Base seed (used when the config gives no seed list).
    #[arg(long)]
    seed: u64,
    /// Output directory for run logs and report files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Cap on parallel sweep workers.
    #[arg(long)]
    workers: Option<usize>,
    /// Emit SVG charts next to the CSV reports.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct TheoryCmd {
    /// Which bound to tabulate: `convergence` or `generalization`.
    #[arg(long, default_value = "convergence")]
    kind: String,
    /// Smoothness constant (beta for convergence, beta_f for generalization).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Gradient-noise level sigma.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Initial optimality gap l(w0) - l(w*).
    #[arg(long, default_value_t = 1.0)]
    delta0: f64,
    /// Starting distance to the optimum; adds the convex-case column.
    #[arg(long)]
    w0_dist: Option<f64>,
    /// Lipschitz constant L_f.
    #[arg(long, default_value_t = 1.0)]
    l_f: f64,
    /// Step constant C of eta_t = C/t (requires C < 1/beta_f).
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    /// Training-set size N.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Extra N values to sweep.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 32)]
    b: usize,
    /// Batches per full-data round, T.
    #[arg(long, default_value_t = 100)]
    t_batches: usize,
    #[arg(long, default_value_t = 20)]
    rounds: usize,
    /// Selection ratios to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,1.0")]
    r_list: Vec<f64>,
    /// Selection strategy the bound is asked about.
    #[arg(long, default_value = "rs2_without_replacement")]
    method: String,
    /// Also run the desk-scale testbed and print measured values.
    #[arg(long)]
    measure: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct NnProxyCmd {
    #[command(flatten)]
    overrides: SpecOverrides,
}

#[derive(Args)]
struct GenDataCmd {
    /// Generator kind: gaussian_blobs, concentric, or checkerboard.
    #[arg(long, default_value = "gaussian_blobs")]
    kind: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_run(cmd: &RunCmd) -> Result<ExitCode> {
    let mut spec = cmd.overrides.build(cmd.seed)?;
    // A single run ignores any sweep axes from the config.
    spec.sweep = Default::default();
    let report = run_experiment(&spec, &cmd.out_dir, None)?;
    let outcome = &report.cells[0];
    match &outcome.result {
        Ok(record) => {
            println!(
                "{} r={} seed={}: accuracy {:.4}, {} steps, selection {:.1} ms, train {:.1} ms",
                outcome.cell.method.name(),
                outcome.cell.r,
                outcome.cell.seed,
                record.final_test_accuracy,
                record.steps,
                record.total_selection_ms,
                record.total_train_ms
            );
            println!("round log: {}", report.out_dir.join("runs").display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn cmd_sweep(cmd: &SweepCmd) -> Result<ExitCode> {
    let mut spec = cmd.overrides.build(cmd.seed)?;
    if cmd.plots {
        spec.report.plots = true;
    }
    let report = run_experiment(&spec, &cmd.out_dir, cmd.workers)?;
    println!(
        "{} cells, {} failed; reports in {}",
        report.cells.len(),
        report.failed,
        report.out_dir.display()
    );
    for row in &report.summary {
        println!("  {:<34} r={:<6} acc {}", row.method, row.r, row.display());
    }
    Ok(if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_theory(cmd: &TheoryCmd) -> Result<ExitCode> {
    let table = match cmd.kind.as_str() {
        "convergence" => convergence_table(&ConvergenceArgs {
            beta: cmd.beta,
            sigma: cmd.sigma,
            b: cmd.b,
            t_batches: cmd.t_batches,
            rounds: cmd.rounds,
            delta0: cmd.delta0,
            rs: cmd.r_list.clone(),
            w0_dist: cmd.w0_dist,
            measure: cmd.measure,
            seed: cmd.seed,
        })?,
        "generalization" => generalization_table(&GeneralizationArgs {
            n: cmd.n,
            c: cmd.c,
            beta_f: cmd.beta,
            l_f: cmd.l_f,
            t_batches: cmd.t_batches,
            rounds: cmd.rounds,
            rs: cmd.r_list.clone(),
            ns: cmd.n_list.clone(),
            method: ScheduleKind::parse(&cmd.method)?,
            measure: cmd.measure,
            seed: cmd.seed,
        })?,
        other => bail!("unknown bound kind '{other}' (use convergence or generalization)"),
    };
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_nn_proxy(cmd: &NnProxyCmd) -> Result<ExitCode> {
    let spec = cmd.overrides.build(0)?;
    let dataset = load_dataset(&spec.dataset)?;
    let fraction = nn_label_disagreement(&dataset)?;
    println!("examples: {}", dataset.len());
    println!("nn_label_disagreement: {fraction}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_data(cmd: &GenDataCmd) -> Result<ExitCode> {
    let spec = SyntheticSpec {
        kind: GeneratorKind::parse(&cmd.kind)?,
        n: cmd.n,
        d: cmd.d,
        k: cmd.k,
        separation: cmd.separation,
        noise: cmd.noise,
        seed: cmd.seed,
    };
    let dataset = generate_dataset(&spec)?;
    write_csv(&dataset, &cmd.out)?;
    println!(
        "wrote {} examples ({} features, {} classes) to {}",
        dataset.len(),
        dataset.dim(),
        dataset.num_classes(),
        cmd.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(cmd) => cmd_run(cmd),
        Command::Sweep(cmd) => cmd_sweep(cmd),
        Command::Theory(cmd) => cmd_theory(cmd),
        Command::NnProxy(cmd) => cmd_nn_proxy(cmd),
        Command::GenData(cmd) => cmd_gen_data(cmd),
    }
}
