//! Closed-form convergence and generalization bound evaluators, plus the
//! nearest-neighbor label-disagreement proxy.
//!
//! The bounds use the explicit constants from the accelerated-SGD analysis
//! (21/4 and 4 for the nonconvex case, 48 and 24 for the convex case) rather
//! than O-notation, so each value is exactly testable. `r * T * X` is always
//! evaluated as `r * (T * X)` so that trading selection ratio for rounds,
//! `(r, X) -> (r/2, 2X)`, leaves every bound bit-identical.

use crate::dataset::Dataset;
use crate::{Error, Result};

/// Symbols of the convergence analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceInputs {
    /// Gradient-Lipschitz constant of the loss.
    pub beta: f64,
    /// Single-example gradient noise level.
    pub sigma: f64,
    /// Mini-batch size.
    pub b: usize,
    /// Selection ratio.
    pub r: f64,
    /// Batches per full-data round, T = ceil(N/b).
    pub t_batches: usize,
    /// Rounds X.
    pub rounds: usize,
    /// Initial optimality gap l(w0) - l(w*).
    pub delta0: f64,
}

impl ConvergenceInputs {
    fn validate(&self) -> Result<f64> {
        if self.beta <= 0.0 || self.delta0 <= 0.0 || self.sigma < 0.0 {
            return Err(Error::InvalidArgument(
                "need beta > 0, delta0 > 0, sigma >= 0".into(),
            ));
        }
        if self.b == 0 || self.t_batches == 0 || self.rounds == 0 {
            return Err(Error::InvalidArgument(
                "b, T and X must all be positive".into(),
            ));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "r must be in (0, 1], got {}",
                self.r
            )));
        }
        Ok(self.r * (self.t_batches * self.rounds) as f64)
    }
}

/// Nonconvex guarantee on the expected squared gradient norm:
/// `21 beta delta0 / (4 rTX) + 4 sigma sqrt(beta delta0) / sqrt(b rTX)`.
pub fn convergence_bound(inputs: &ConvergenceInputs) -> Result<f64> {
    let rtx = inputs.validate()?;
    let lead = 21.0 * inputs.beta * inputs.delta0 / (4.0 * rtx);
    let noise =
        4.0 * inputs.sigma * (inputs.beta * inputs.delta0).sqrt() / (inputs.b as f64 * rtx).sqrt();
    Ok(lead + noise)
}

/// Convex-case guarantee on the expected optimality gap:
/// `48 beta ||w0 - w*||^2 / (rTX)^2 + 24 ||w0 - w*|| sigma / sqrt(b rTX)`.
pub fn convex_bound(inputs: &ConvergenceInputs, w0_dist: f64) -> Result<f64> {
    if w0_dist < 0.0 {
        return Err(Error::InvalidArgument(
            "distance to the optimum cannot be negative".into(),
        ));
    }
    let rtx = inputs.validate()?;
    let lead = 48.0 * inputs.beta * w0_dist * w0_dist / (rtx * rtx);
    let noise = 24.0 * w0_dist * inputs.sigma / (inputs.b as f64 * rtx).sqrt();
    Ok(lead + noise)
}

/// Symbols of the generalization analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizationInputs {
    /// Training set size.
    pub n: usize,
    /// Step constant of eta_t = C / t; requires C < 1 / beta_f.
    pub c: f64,
    /// Smoothness constant of the per-example loss.
    pub beta_f: f64,
    /// Lipschitz constant of the per-example loss.
    pub l_f: f64,
    pub r: f64,
    pub t_batches: usize,
    pub rounds: usize,
}

impl GeneralizationInputs {
    fn validate(&self) -> Result<f64> {
        if self.n == 0 || self.t_batches == 0 || self.rounds == 0 {
            return Err(Error::InvalidArgument(
                "N, T and X must all be positive".into(),
            ));
        }
        if self.c <= 0.0 || self.beta_f <= 0.0 || self.l_f <= 0.0 {
            return Err(Error::InvalidArgument(
                "C, beta_f and L_f must be positive".into(),
            ));
        }
        if self.c * self.beta_f >= 1.0 {
            return Err(Error::Config(format!(
                "step constant too large: C * beta_f = {} must be < 1",
                self.c * self.beta_f
            )));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "r must be in (0, 1], got {}",
                self.r
            )));
        }
        let rtx = self.r * (self.t_batches * self.rounds) as f64;
        if rtx < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "r * T * X = {rtx} is below one gradient step"
            )));
        }
        Ok(rtx)
    }
}

/// Generalization-error bound for inverse-t step sizes:
/// `(1/N) 2C e^(C beta_f) L_f^2 (rTX)^(C beta_f)
///  min{1 + 1/(C beta_f), ln(e rTX)}`.
pub fn generalization_bound(inputs: &GeneralizationInputs) -> Result<f64> {
    let rtx = inputs.validate()?;
    let cb = inputs.c * inputs.beta_f;
    let log_term = (std::f64::consts::E * rtx).ln();
    let min_term = (1.0 + 1.0 / cb).min(log_term);
    Ok(
        2.0 * inputs.c * cb.exp() * inputs.l_f * inputs.l_f * rtx.powf(cb) * min_term
            / inputs.n as f64,
    )
}

/// Fraction of examples whose L2-nearest neighbor (excluding self, distance
/// ties broken by lower id) carries a different label. Exact O(N^2) scan.
pub fn nn_label_disagreement(dataset: &Dataset) -> Result<f64> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "nearest-neighbor proxy needs at least 2 examples".into(),
        ));
    }
    let features = dataset.features();
    let labels = dataset.labels();
    let mut disagreements = 0usize;
    for i in 0..n {
        let xi = features.row(i);
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for j in 0..n {
            if j == i {
                continue;
            }
            let xj = features.row(j);
            let mut dist = 0.0;
            for (a, b) in xi.iter().zip(xj) {
                let diff = a - b;
                dist += diff * diff;
            }
            if dist < best_dist || (dist == best_dist && j < best) {
                best_dist = dist;
                best = j;
            }
        }
        if labels[best] != labels[i] {
            disagreements += 1;
        }
    }
    Ok(disagreements as f64 / n as f64)
}
