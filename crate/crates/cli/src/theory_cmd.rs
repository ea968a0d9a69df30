//! Bound tables for the `theory` subcommand, optionally paired with a
//! desk-scale measured run for side-by-side comparison.

use crate::synth::{generate_dataset, GeneratorKind, SyntheticSpec};
use anyhow::{bail, Context, Result};
use rs2_core::dataset::Dataset;
use rs2_core::harness::{
    generalization_gap, run, split_dataset, LrKind, LrSpec, ModelSpec, OptimizerSpec, RunConfig,
};
use rs2_core::models::{
    estimate_smoothness_and_noise, loss_and_grad, loss_value, Loss, LossKind, Model, ModelKind,
};
use rs2_core::rng::{Rng, Stream};
use rs2_core::sampling::ScheduleKind;
use rs2_core::theory::{
    convergence_bound, convex_bound, generalization_bound, ConvergenceInputs, GeneralizationInputs,
};
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct ConvergenceArgs {
    pub beta: f64,
    pub sigma: f64,
    pub b: usize,
    pub t_batches: usize,
    pub rounds: usize,
    pub delta0: f64,
    pub rs: Vec<f64>,
    /// Also evaluate the convex-case bound at this starting distance.
    pub w0_dist: Option<f64>,
    /// Run the quadratic testbed per r and print the measured gradient norm
    /// (replaces beta/sigma/delta0 with estimates from the testbed).
    pub measure: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GeneralizationArgs {
    pub n: usize,
    pub c: f64,
    pub beta_f: f64,
    pub l_f: f64,
    pub t_batches: usize,
    pub rounds: usize,
    pub rs: Vec<f64>,
    /// Extra N values to sweep (the base `n` is always included).
    pub ns: Vec<usize>,
    /// Batch-selection strategy of the run the bound describes.
    pub method: ScheduleKind,
    pub measure: bool,
    pub seed: u64,
}

/// Small dataset whose MSE objective is an exact quadratic:
/// standard-normal features with binary labels from a random hyperplane.
pub fn quadratic_testbed(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    let mut rng = Rng::new(seed, Stream::DataGen, 1);
    let w_true: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let score: f64 = x.iter().zip(&w_true).map(|(a, b)| a * b).sum();
        labels.push(usize::from(score > 0.0));
        data.extend_from_slice(&x);
    }
    Ok(Dataset::new(
        rs2_core::matrix::Matrix::new(n, d, data)?,
        labels,
        2,
    )?)
}

/// Exact least-squares optimum of the linear-regression MSE objective,
/// obtained by solving the normal equations with Gaussian elimination.
pub fn least_squares_optimum(dataset: &Dataset) -> Result<Model> {
    let n = dataset.len();
    let d = dataset.dim();
    let p = d + 1;
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for i in 0..n {
        let mut row = dataset.features().row(i).to_vec();
        row.push(1.0);
        let y = dataset.labels()[i] as f64;
        for a in 0..p {
            rhs[a] += row[a] * y / n as f64;
            for b in 0..p {
                gram[a * p + b] += row[a] * row[b] / n as f64;
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    let mut aug = vec![0.0; p * (p + 1)];
    for a in 0..p {
        aug[a * (p + 1)..a * (p + 1) + p].copy_from_slice(&gram[a * p..(a + 1) * p]);
        aug[a * (p + 1) + p] = rhs[a];
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&x, &y| {
                aug[x * (p + 1) + col]
                    .abs()
                    .partial_cmp(&aug[y * (p + 1) + col].abs())
                    .unwrap()
            })
            .unwrap();
        if aug[pivot * (p + 1) + col].abs() < 1e-12 {
            bail!("normal equations are singular");
        }
        for k in 0..=p {
            aug.swap(col * (p + 1) + k, pivot * (p + 1) + k);
        }
        let diag = aug[col * (p + 1) + col];
        for row in 0..p {
            if row == col {
                continue;
            }
            let factor = aug[row * (p + 1) + col] / diag;
            for k in col..=p {
                aug[row * (p + 1) + k] -= factor * aug[col * (p + 1) + k];
            }
        }
    }
    let weights: Vec<f64> = (0..p)
        .map(|a| aug[a * (p + 1) + p] / aug[a * (p + 1) + a])
        .collect();
    Ok(Model::with_weights(
        ModelKind::LinearRegression,
        d,
        None,
        2,
        weights,
    )?)
}

pub struct QuadraticMeasurement {
    pub beta_hat: f64,
    pub sigma_hat: f64,
    pub delta0_hat: f64,
    pub measured_grad_norm_sq: f64,
    pub steps: usize,
}

/// Train the quadratic testbed with the accelerated optimizer at ratio `r`
/// and measure the final full-data squared gradient norm.
pub fn measure_quadratic(
    r: f64,
    t_batches: usize,
    rounds: usize,
    b: usize,
    seed: u64,
) -> Result<QuadraticMeasurement> {
    let n = t_batches * b;
    let dataset = quadratic_testbed(n, 6, seed)?;
    let loss = Loss::new(LossKind::Mse);
    let init = Model::initialized(ModelKind::LinearRegression, 6, None, 2, seed)?;
    let mut est_rng = Rng::new(seed, Stream::Estimate, 0);
    let (beta_hat, sigma_hat) =
        estimate_smoothness_and_noise(&init, &loss, &dataset, &mut est_rng, 64, b)?;
    let optimum = least_squares_optimum(&dataset)?;
    let l_star = loss_value(&optimum, &loss, dataset.features(), dataset.labels())?;
    let l_0 = loss_value(&init, &loss, dataset.features(), dataset.labels())?;
    let delta0_hat = (l_0 - l_star).max(f64::EPSILON);

    let mut config = RunConfig::new(
        ModelSpec {
            kind: ModelKind::LinearRegression,
            hidden: None,
            loss,
        },
        ScheduleKind::Rs2WithoutReplacement,
        r,
        rounds,
    );
    config.batch_size = b;
    config.split_ratio = 1.0;
    config.seed = seed;
    config.optimizer = OptimizerSpec::Nesterov {
        beta_smooth: beta_hat,
        sigma: sigma_hat,
        d_tilde: (delta0_hat / beta_hat).sqrt(),
    };
    let record = run(&config, &dataset)?;
    if !record.complete {
        bail!(
            "quadratic run aborted: {}",
            record.abort_reason.unwrap_or_default()
        );
    }
    Ok(QuadraticMeasurement {
        beta_hat,
        sigma_hat,
        delta0_hat,
        measured_grad_norm_sq: record.final_grad_norm_sq,
        steps: record.steps,
    })
}

/// Bound table across the r sweep; one line per r value.
pub fn convergence_table(args: &ConvergenceArgs) -> Result<String> {
    if args.rs.is_empty() {
        bail!("need at least one r value");
    }
    let mut out = String::new();
    let header = if args.w0_dist.is_some() {
        "r,steps,grad_norm_bound,convex_gap_bound"
    } else {
        "r,steps,grad_norm_bound"
    };
    writeln!(
        out,
        "{header}{}",
        if args.measure {
            ",measured_grad_norm_sq"
        } else {
            ""
        }
    )?;
    for &r in &args.rs {
        let measurement = if args.measure {
            Some(
                measure_quadratic(r, args.t_batches, args.rounds, args.b, args.seed)
                    .context("measuring quadratic testbed")?,
            )
        } else {
            None
        };
        let (beta, sigma, delta0) = match &measurement {
            Some(m) => (m.beta_hat, m.sigma_hat, m.delta0_hat),
            None => (args.beta, args.sigma, args.delta0),
        };
        let inputs = ConvergenceInputs {
            beta,
            sigma,
            b: args.b,
            r,
            t_batches: args.t_batches,
            rounds: args.rounds,
            delta0,
        };
        let bound = convergence_bound(&inputs)?;
        let steps = rs2_core::sampling::ratio_floor(r, args.t_batches * args.rounds);
        write!(out, "{r},{steps},{bound}")?;
        if let Some(dist) = args.w0_dist {
            write!(out, ",{}", convex_bound(&inputs, dist)?)?;
        }
        if let Some(m) = &measurement {
            write!(out, ",{}", m.measured_grad_norm_sq)?;
        }
        writeln!(out)?;
    }
    Ok(out)
}

pub struct GapMeasurement {
    pub gap: f64,
    pub beta_f_hat: f64,
    pub l_f_hat: f64,
}

/// Inverse-t-step run on the smooth classification testbed; returns the
/// measured generalization gap together with estimated loss constants.
pub fn measure_generalization(
    r: f64,
    t_batches: usize,
    rounds: usize,
    b: usize,
    c: f64,
    seed: u64,
) -> Result<GapMeasurement> {
    let n = (t_batches * b) * 5 / 4; // 80% goes to training
    let dataset = generate_dataset(&SyntheticSpec {
        kind: GeneratorKind::GaussianBlobs,
        n,
        d: 5,
        k: 3,
        separation: 2.0,
        noise: 1.0,
        seed,
    })?;
    let loss = Loss::new(LossKind::CrossEntropy);
    let spec = ModelSpec {
        kind: ModelKind::SoftmaxRegression,
        hidden: None,
        loss,
    };
    let mut config = RunConfig::new(spec, ScheduleKind::Rs2WithoutReplacement, r, rounds);
    config.batch_size = b;
    config.lr = LrSpec {
        kind: LrKind::InverseT,
        eta0: c,
        eta_min: 0.0,
        c,
    };
    config.optimizer = OptimizerSpec::Sgd { momentum: 0.0 };
    config.seed = seed;
    let record = run(&config, &dataset)?;
    if !record.complete {
        bail!(
            "generalization run aborted: {}",
            record.abort_reason.unwrap_or_default()
        );
    }

    let (train, heldout) = split_dataset(&dataset, config.split_ratio, seed)?;
    let model = Model::with_weights(
        ModelKind::SoftmaxRegression,
        dataset.dim(),
        None,
        dataset.num_classes(),
        record.final_weights.clone(),
    )?;
    let gap = generalization_gap(&model, &loss, &train, &heldout)?;

    // Estimate the per-example loss constants around the visited region:
    // beta_f from gradient differences, L_f as the max per-example gradient
    // norm at the final weights.
    let mut est_rng = Rng::new(seed, Stream::Estimate, 1);
    let (beta_f_hat, _) =
        estimate_smoothness_and_noise(&model, &loss, &train, &mut est_rng, 32, 1)?;
    let mut l_f_hat: f64 = 0.0;
    for i in 0..train.len() {
        let row = rs2_core::matrix::Matrix::new(1, train.dim(), train.features().row(i).to_vec())?;
        let (_, g) = loss_and_grad(&model, &loss, &row, &train.labels()[i..i + 1])?;
        l_f_hat = l_f_hat.max(g.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(GapMeasurement {
        gap,
        beta_f_hat,
        l_f_hat,
    })
}

/// Bound table across r (and optionally N) sweeps. Refuses data-dependent
/// selection strategies, for which the bound does not apply.
pub fn generalization_table(args: &GeneralizationArgs) -> Result<String> {
    if args.method.is_data_dependent() {
        bail!(
            "the generalization bound assumes data-independent batch selection; \
             '{}' adapts to the data",
            args.method.name()
        );
    }
    if args.rs.is_empty() {
        bail!("need at least one r value");
    }
    let mut ns = vec![args.n];
    ns.extend(args.ns.iter().copied().filter(|n| *n != args.n));
    let mut out = String::new();
    writeln!(
        out,
        "n,r,steps,gen_bound{}",
        if args.measure { ",measured_gap" } else { "" }
    )?;
    for &n in &ns {
        for &r in &args.rs {
            let inputs = GeneralizationInputs {
                n,
                c: args.c,
                beta_f: args.beta_f,
                l_f: args.l_f,
                r,
                t_batches: args.t_batches,
                rounds: args.rounds,
            };
            let bound = generalization_bound(&inputs)?;
            let steps = rs2_core::sampling::ratio_floor(r, args.t_batches * args.rounds);
            write!(out, "{n},{r},{steps},{bound}")?;
            if args.measure {
                let m = measure_generalization(
                    r,
                    args.t_batches,
                    args.rounds,
                    args.b_for_measure(),
                    args.c,
                    args.seed,
                )?;
                write!(out, ",{}", m.gap)?;
            }
            writeln!(out)?;
        }
    }
    Ok(out)
}

impl GeneralizationArgs {
    fn b_for_measure(&self) -> usize {
        8
    }
}
