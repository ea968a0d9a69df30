//! Mini-batch SGD, Nesterov-accelerated updates, and learning-rate schedules.
//!
//! The accelerated update keeps three iterates per step t:
//!
//! ```text
//! w_md <- (1 - alpha_t) * w_ag + alpha_t * w
//! w    <- w - lambda_t * g(w_md)
//! w_ag <- w_md - beta_t * g(w_md)
//! ```
//!
//! The gradient is always evaluated at `w_md`, so the API is two-phase: ask
//! for the md point, compute the gradient there, then apply the step.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Pure map from 1-based global step index to step size.
///
/// `total_full_steps` is the full-data horizon `T * X`; the r-scaled kind
/// compresses the same decay shape into `floor(r * T * X)` steps so that its
/// final value coincides with the full schedule's final value. Steps beyond a
/// schedule's horizon clamp to the final value.
#[derive(Debug, Clone, PartialEq)]
pub enum LrSchedule {
    Constant {
        eta0: f64,
    },
    CosineFull {
        eta0: f64,
        eta_min: f64,
        total_full_steps: usize,
    },
    CosineRScaled {
        eta0: f64,
        eta_min: f64,
        total_full_steps: usize,
        r: f64,
    },
    /// The full-horizon cosine shape evaluated at the raw step; a run stopped
    /// at `r * T * X` steps never reaches the decayed tail.
    NaiveEarlyStop {
        eta0: f64,
        eta_min: f64,
        total_full_steps: usize,
    },
    /// Decreasing step eta_t = c / t.
    InverseT {
        c: f64,
    },
}

fn cosine_value(eta0: f64, eta_min: f64, horizon: usize, step: usize) -> f64 {
    if horizon <= 1 {
        return if step <= 1 { eta0 } else { eta_min };
    }
    let s = step.min(horizon);
    let progress = (s - 1) as f64 / (horizon - 1) as f64;
    eta_min + 0.5 * (eta0 - eta_min) * (1.0 + (PI * progress).cos())
}

impl LrSchedule {
    pub fn lr_at(&self, step: usize) -> f64 {
        assert!(step >= 1, "steps are 1-based");
        match *self {
            LrSchedule::Constant { eta0 } => eta0,
            LrSchedule::CosineFull {
                eta0,
                eta_min,
                total_full_steps,
            }
            | LrSchedule::NaiveEarlyStop {
                eta0,
                eta_min,
                total_full_steps,
            } => cosine_value(eta0, eta_min, total_full_steps, step),
            LrSchedule::CosineRScaled {
                eta0,
                eta_min,
                total_full_steps,
                r,
            } => {
                let horizon = crate::sampling::ratio_floor(r, total_full_steps).max(1);
                cosine_value(eta0, eta_min, horizon, step)
            }
            LrSchedule::InverseT { c } => c / step as f64,
        }
    }
}

/// Step-size map for one schedule and step (free-function form of
/// [`LrSchedule::lr_at`]).
pub fn lr_at(schedule: &LrSchedule, step: usize) -> f64 {
    schedule.lr_at(step)
}

/// Model weights plus the auxiliary accelerated iterates and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub w: Vec<f64>,
    pub w_ag: Vec<f64>,
    pub w_md: Vec<f64>,
    pub velocity: Vec<f64>,
    /// 1-based global step counter; the next step applied is step `t`.
    pub t: usize,
}

impl OptimizerState {
    pub fn new(w0: Vec<f64>) -> Self {
        let velocity = vec![0.0; w0.len()];
        OptimizerState {
            w_ag: w0.clone(),
            w_md: w0.clone(),
            velocity,
            w: w0,
            t: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

fn check_grad(state: &OptimizerState, grad: &[f64]) -> Result<()> {
    if grad.len() != state.w.len() {
        return Err(Error::Shape(format!(
            "gradient length {} vs {} weights",
            grad.len(),
            state.w.len()
        )));
    }
    if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite gradient component at index {pos} (step {})",
            state.t
        )));
    }
    Ok(())
}

fn check_finite_state(state: &OptimizerState) -> Result<()> {
    for (name, v) in [("w", &state.w), ("w_ag", &state.w_ag)] {
        if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "iterate {name}[{pos}] became non-finite at step {}",
                state.t
            )));
        }
    }
    Ok(())
}

/// Classical momentum SGD step; `momentum = 0` gives plain SGD.
///
/// The auxiliary iterates are kept in lockstep with `w` so a state driven by
/// this function satisfies the same invariants as an accelerated one.
pub fn sgd_step(state: &mut OptimizerState, grad: &[f64], lr: f64, momentum: f64) -> Result<()> {
    check_grad(state, grad)?;
    for ((w, v), &g) in state.w.iter_mut().zip(&mut state.velocity).zip(grad) {
        *v = momentum * *v + g;
        *w -= lr * *v;
    }
    state.w_ag.copy_from_slice(&state.w);
    state.w_md.copy_from_slice(&state.w);
    state.t += 1;
    check_finite_state(state)
}

/// Rule for the per-step mixing coefficient alpha_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaRule {
    /// alpha_t = 2 / (t + 1); alpha_1 = 1 as the algorithm requires.
    Harmonic,
    /// Fixed alpha in (0, 1]; alpha = 1 degenerates to plain SGD.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StepRule {
    /// User-chosen constants, lambda checked against the validity window.
    Fixed { beta_t: f64, lambda_t: f64 },
    /// beta_t = min{ 8 / (21 beta), d_tilde / (sigma sqrt(steps)) },
    /// lambda_t = lambda_scale * beta_t.
    Nonconvex {
        beta_smooth: f64,
        sigma: f64,
        d_tilde: f64,
        total_steps: usize,
        lambda_scale: f64,
    },
    /// beta_t = min{ 1 / (2 beta), (d_tilde^2 / (beta^2 sigma^2 steps^3))^(1/4) },
    /// lambda_t = t * beta * beta_t^2 / 2.
    Convex {
        beta_smooth: f64,
        sigma: f64,
        d_tilde: f64,
        total_steps: usize,
    },
}

/// Per-step parameter sequences for the accelerated update.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceleratedParams {
    alpha: AlphaRule,
    steps: StepRule,
}

impl AcceleratedParams {
    /// Fixed beta_t/lambda_t with the harmonic alpha sequence.
    pub fn fixed(beta_t: f64, lambda_t: f64) -> Self {
        AcceleratedParams {
            alpha: AlphaRule::Harmonic,
            steps: StepRule::Fixed { beta_t, lambda_t },
        }
    }

    pub fn with_alpha(mut self, alpha: AlphaRule) -> Self {
        self.alpha = alpha;
        self
    }

    /// Scale lambda_t relative to beta_t (nonconvex rule only).
    pub fn with_lambda_scale(mut self, scale: f64) -> Self {
        if let StepRule::Nonconvex { lambda_scale, .. } = &mut self.steps {
            *lambda_scale = scale;
        }
        self
    }

    pub fn alpha(&self, t: usize) -> f64 {
        match self.alpha {
            AlphaRule::Harmonic => 2.0 / (t as f64 + 1.0),
            AlphaRule::Constant(a) => a,
        }
    }

    /// beta_t; constant in t for every rule implemented here.
    pub fn beta_step(&self) -> f64 {
        match self.steps {
            StepRule::Fixed { beta_t, .. } => beta_t,
            StepRule::Nonconvex {
                beta_smooth,
                sigma,
                d_tilde,
                total_steps,
                ..
            } => {
                let cap = 8.0 / (21.0 * beta_smooth);
                if sigma == 0.0 {
                    cap
                } else {
                    cap.min(d_tilde / (sigma * (total_steps as f64).sqrt()))
                }
            }
            StepRule::Convex {
                beta_smooth,
                sigma,
                d_tilde,
                total_steps,
            } => {
                let cap = 1.0 / (2.0 * beta_smooth);
                if sigma == 0.0 {
                    cap
                } else {
                    let s = total_steps as f64;
                    cap.min(
                        (d_tilde * d_tilde
                            / (beta_smooth * beta_smooth * sigma * sigma * s * s * s))
                            .powf(0.25),
                    )
                }
            }
        }
    }

    pub fn lambda(&self, t: usize) -> f64 {
        match self.steps {
            StepRule::Fixed { lambda_t, .. } => lambda_t,
            StepRule::Nonconvex { lambda_scale, .. } => lambda_scale * self.beta_step(),
            StepRule::Convex { beta_smooth, .. } => {
                let b = self.beta_step();
                t as f64 * beta_smooth * b * b / 2.0
            }
        }
    }

    fn enforce_lambda_window(&self) -> bool {
        // The convex rule obeys its own conditions (alpha_t * lambda_t <=
        // beta * beta_t^2 and beta_t < 1/beta, both guaranteed at
        // construction); the window below is the nonconvex requirement.
        !matches!(self.steps, StepRule::Convex { .. })
    }
}

fn checked_total_steps(r: f64, t_batches: usize, rounds: usize) -> Result<usize> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "selection ratio must be in (0, 1], got {r}"
        )));
    }
    let total = crate::sampling::ratio_floor(r, t_batches * rounds);
    if total == 0 {
        return Err(Error::InvalidArgument(
            "r * T * X rounds to zero steps".into(),
        ));
    }
    Ok(total)
}

/// Parameter sequences for the nonconvex accelerated analysis:
/// alpha_t = 2/(t+1), beta_t = min{8/(21 beta), d_tilde/(sigma sqrt(rTX))},
/// lambda_t = beta_t.
pub fn appendix_d_params(
    beta_smooth: f64,
    sigma: f64,
    r: f64,
    t_batches: usize,
    rounds: usize,
    d_tilde: f64,
) -> Result<AcceleratedParams> {
    if beta_smooth <= 0.0 || sigma < 0.0 || d_tilde <= 0.0 {
        return Err(Error::InvalidArgument(
            "need beta > 0, sigma >= 0, d_tilde > 0".into(),
        ));
    }
    let total_steps = checked_total_steps(r, t_batches, rounds)?;
    Ok(AcceleratedParams {
        alpha: AlphaRule::Harmonic,
        steps: StepRule::Nonconvex {
            beta_smooth,
            sigma,
            d_tilde,
            total_steps,
            lambda_scale: 1.0,
        },
    })
}

/// Convex-case parameter sequences: beta_t per the quartic-root rule and
/// lambda_t = t * beta * beta_t^2 / 2.
pub fn appendix_d_convex_params(
    beta_smooth: f64,
    sigma: f64,
    r: f64,
    t_batches: usize,
    rounds: usize,
    d_tilde: f64,
) -> Result<AcceleratedParams> {
    if beta_smooth <= 0.0 || sigma < 0.0 || d_tilde <= 0.0 {
        return Err(Error::InvalidArgument(
            "need beta > 0, sigma >= 0, d_tilde > 0".into(),
        ));
    }
    let total_steps = checked_total_steps(r, t_batches, rounds)?;
    Ok(AcceleratedParams {
        alpha: AlphaRule::Harmonic,
        steps: StepRule::Convex {
            beta_smooth,
            sigma,
            d_tilde,
            total_steps,
        },
    })
}

/// Phase one: refresh `w_md` for the upcoming step and return it. The caller
/// evaluates the mini-batch gradient at this point.
pub fn compute_md_point<'a>(
    state: &'a mut OptimizerState,
    params: &AcceleratedParams,
) -> &'a [f64] {
    let alpha = params.alpha(state.t);
    for i in 0..state.w.len() {
        state.w_md[i] = (1.0 - alpha) * state.w_ag[i] + alpha * state.w[i];
    }
    &state.w_md
}

/// Phase two: apply the accelerated update with the gradient taken at the
/// `w_md` produced by [`compute_md_point`] for this step.
pub fn nesterov_step(
    state: &mut OptimizerState,
    grad_at_md: &[f64],
    params: &AcceleratedParams,
) -> Result<()> {
    check_grad(state, grad_at_md)?;
    let t = state.t;
    let alpha = params.alpha(t);
    let beta_t = params.beta_step();
    let lambda_t = params.lambda(t);
    if params.enforce_lambda_window() {
        let hi = (1.0 + alpha / 4.0) * beta_t;
        if lambda_t < beta_t || lambda_t > hi {
            return Err(Error::Config(format!(
                "lambda_t = {lambda_t} outside [{beta_t}, {hi}] at step {t}"
            )));
        }
    }
    let iterates = state
        .w
        .iter_mut()
        .zip(state.w_ag.iter_mut())
        .zip(&state.w_md);
    for (((w, ag), &md), &g) in iterates.zip(grad_at_md) {
        *w -= lambda_t * g;
        *ag = md - beta_t * g;
    }
    state.t += 1;
    check_finite_state(state)
}
