//! Small differentiable models with hand-coded exact gradients.
//!
//! Weights live in one flat vector so the optimizers stay model-agnostic.
//! Layouts (row-major throughout):
//!
//! - `LinearRegression` (d -> 1): `[w(d), b]`
//! - `SoftmaxRegression` (d -> K): `[W(K x d), b(K)]`
//! - `Mlp1` (d -> h -> K, tanh hidden): `[W1(h x d), b1(h), W2(K x h), b2(K)]`
//!
//! The hidden activation is tanh so the smoothness assumptions behind the
//! convergence bounds actually hold for these models.

use crate::dataset::Dataset;
use crate::matrix::Matrix;
use crate::rng::{uniform_indices, Rng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LinearRegression,
    SoftmaxRegression,
    Mlp1,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LinearRegression => "linear_regression",
            ModelKind::SoftmaxRegression => "softmax_regression",
            ModelKind::Mlp1 => "mlp1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear_regression" => Ok(ModelKind::LinearRegression),
            "softmax_regression" => Ok(ModelKind::SoftmaxRegression),
            "mlp1" => Ok(ModelKind::Mlp1),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::CrossEntropy => "cross_entropy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "cross_entropy" => Ok(LossKind::CrossEntropy),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss kind '{other}'"
            ))),
        }
    }
}

/// Loss specification; `l2` adds `0.5 * l2 * ||w||^2` over all parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    pub kind: LossKind,
    pub l2: f64,
}

impl Loss {
    pub fn new(kind: LossKind) -> Self {
        Loss { kind, l2: 0.0 }
    }

    pub fn with_l2(kind: LossKind, l2: f64) -> Self {
        Loss { kind, l2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    kind: ModelKind,
    d_in: usize,
    hidden: usize,
    out: usize,
    pub weights: Vec<f64>,
}

impl Model {
    /// Zero-initialized model. `hidden` is required for `Mlp1` only.
    pub fn new(
        kind: ModelKind,
        d_in: usize,
        hidden: Option<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if d_in == 0 {
            return Err(Error::InvalidArgument("d_in must be positive".into()));
        }
        let (hidden, out) = match kind {
            ModelKind::LinearRegression => (0, 1),
            ModelKind::SoftmaxRegression => {
                if num_classes < 2 {
                    return Err(Error::InvalidArgument(
                        "softmax_regression needs at least 2 classes".into(),
                    ));
                }
                (0, num_classes)
            }
            ModelKind::Mlp1 => {
                let h = hidden
                    .ok_or_else(|| Error::InvalidArgument("mlp1 needs a hidden width".into()))?;
                if h == 0 || num_classes < 2 {
                    return Err(Error::InvalidArgument(
                        "mlp1 needs hidden >= 1 and at least 2 classes".into(),
                    ));
                }
                (h, num_classes)
            }
        };
        let mut model = Model {
            kind,
            d_in,
            hidden,
            out,
            weights: Vec::new(),
        };
        model.weights = vec![0.0; model.param_count()];
        Ok(model)
    }

    /// Fresh model with weights uniform in (-a, a), a = 1 / sqrt(d_in), from
    /// the dedicated init stream of `seed`.
    pub fn initialized(
        kind: ModelKind,
        d_in: usize,
        hidden: Option<usize>,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut model = Model::new(kind, d_in, hidden, num_classes)?;
        let mut rng = Rng::new(seed, Stream::Init, 0);
        let a = 1.0 / (d_in as f64).sqrt();
        for w in &mut model.weights {
            *w = (2.0 * rng.next_f64() - 1.0) * a;
        }
        Ok(model)
    }

    pub fn with_weights(
        kind: ModelKind,
        d_in: usize,
        hidden: Option<usize>,
        num_classes: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let mut model = Model::new(kind, d_in, hidden, num_classes)?;
        if weights.len() != model.param_count() {
            return Err(Error::Shape(format!(
                "{} weights for a layout of {}",
                weights.len(),
                model.param_count()
            )));
        }
        model.weights = weights;
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Output width: K for classifiers, 1 for regression.
    pub fn out_dim(&self) -> usize {
        self.out
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            ModelKind::LinearRegression => self.d_in + 1,
            ModelKind::SoftmaxRegression => self.out * self.d_in + self.out,
            ModelKind::Mlp1 => {
                self.hidden * self.d_in + self.hidden + self.out * self.hidden + self.out
            }
        }
    }

    /// Logits (or the scalar prediction) for one input row, written to `z`.
    /// For `Mlp1`, `hidden_buf` receives the tanh activations.
    fn forward_row(&self, x: &[f64], z: &mut [f64], hidden_buf: &mut [f64]) {
        let w = &self.weights;
        match self.kind {
            ModelKind::LinearRegression => {
                let mut acc = w[self.d_in]; // bias
                for j in 0..self.d_in {
                    acc += w[j] * x[j];
                }
                z[0] = acc;
            }
            ModelKind::SoftmaxRegression => {
                let bias_off = self.out * self.d_in;
                for c in 0..self.out {
                    let row = &w[c * self.d_in..(c + 1) * self.d_in];
                    let mut acc = w[bias_off + c];
                    for j in 0..self.d_in {
                        acc += row[j] * x[j];
                    }
                    z[c] = acc;
                }
            }
            ModelKind::Mlp1 => {
                let (h, d) = (self.hidden, self.d_in);
                let b1_off = h * d;
                let w2_off = b1_off + h;
                let b2_off = w2_off + self.out * h;
                for u in 0..h {
                    let row = &w[u * d..(u + 1) * d];
                    let mut acc = w[b1_off + u];
                    for j in 0..d {
                        acc += row[j] * x[j];
                    }
                    hidden_buf[u] = acc.tanh();
                }
                for c in 0..self.out {
                    let row = &w[w2_off + c * h..w2_off + (c + 1) * h];
                    let mut acc = w[b2_off + c];
                    for u in 0..h {
                        acc += row[u] * hidden_buf[u];
                    }
                    z[c] = acc;
                }
            }
        }
    }
}

/// Batch forward pass: logits for classifiers, predictions for regression.
/// Softmax is applied inside the loss, never here.
pub fn forward(model: &Model, batch: &Matrix) -> Result<Matrix> {
    if batch.cols() != model.d_in {
        return Err(Error::Shape(format!(
            "batch has {} columns, model expects {}",
            batch.cols(),
            model.d_in
        )));
    }
    let mut out = vec![0.0; batch.rows() * model.out];
    let mut hidden_buf = vec![0.0; model.hidden];
    for i in 0..batch.rows() {
        let row = batch.row(i);
        model.forward_row(
            row,
            &mut out[i * model.out..(i + 1) * model.out],
            &mut hidden_buf,
        );
    }
    Matrix::new(batch.rows(), model.out, out)
}

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

fn check_labels(model: &Model, batch: &Matrix, labels: &[usize]) -> Result<()> {
    if batch.cols() != model.d_in {
        return Err(Error::Shape(format!(
            "batch has {} columns, model expects {}",
            batch.cols(),
            model.d_in
        )));
    }
    if labels.len() != batch.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            batch.rows()
        )));
    }
    if model.out > 1 {
        if let Some(&bad) = labels.iter().find(|&&l| l >= model.out) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {} outputs",
                model.out
            )));
        }
    }
    Ok(())
}

/// Per-example loss and gradient with respect to the logits.
/// For MSE the target is the label itself (1-output models) or its one-hot
/// encoding; cross-entropy needs at least two outputs.
fn loss_grad_output(loss: LossKind, z: &[f64], label: usize, dz: &mut [f64]) -> Result<f64> {
    match loss {
        LossKind::Mse => {
            let mut l = 0.0;
            for c in 0..z.len() {
                let target = if z.len() == 1 {
                    label as f64
                } else if c == label {
                    1.0
                } else {
                    0.0
                };
                let diff = z[c] - target;
                l += 0.5 * diff * diff;
                dz[c] = diff;
            }
            Ok(l)
        }
        LossKind::CrossEntropy => {
            if z.len() < 2 {
                return Err(Error::Config(
                    "cross_entropy needs a model with at least 2 outputs".into(),
                ));
            }
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for &v in z {
                total += (v - m).exp();
            }
            let lse = total.ln();
            let l = lse + m - z[label];
            for c in 0..z.len() {
                let p = (z[c] - m).exp() / total;
                dz[c] = p - if c == label { 1.0 } else { 0.0 };
            }
            Ok(l)
        }
    }
}

/// Mean per-example loss over the batch (plus the L2 term). Shares the
/// forward pass with [`loss_and_grad`] but none of the backward code, so it
/// doubles as the function being differentiated by [`finite_diff_grad`].
pub fn loss_value(model: &Model, loss: &Loss, batch: &Matrix, labels: &[usize]) -> Result<f64> {
    let per = per_example_losses(model, loss, batch, labels)?;
    let mut total = 0.0;
    for l in per {
        total += l;
    }
    let mut v = total / batch.rows() as f64;
    if loss.l2 != 0.0 {
        let sq: f64 = model.weights.iter().map(|w| w * w).sum();
        v += 0.5 * loss.l2 * sq;
    }
    Ok(v)
}

/// Loss of each example in the batch (no L2 term; that is a property of the
/// weights, not of any single example).
pub fn per_example_losses(
    model: &Model,
    loss: &Loss,
    batch: &Matrix,
    labels: &[usize],
) -> Result<Vec<f64>> {
    check_labels(model, batch, labels)?;
    let mut z = vec![0.0; model.out];
    let mut dz = vec![0.0; model.out];
    let mut hidden_buf = vec![0.0; model.hidden];
    let mut out = Vec::with_capacity(batch.rows());
    for (i, &label) in labels.iter().enumerate() {
        model.forward_row(batch.row(i), &mut z, &mut hidden_buf);
        let l = loss_grad_output(loss.kind, &z, label, &mut dz)?;
        if !l.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss at example {i}")));
        }
        out.push(l);
    }
    Ok(out)
}

/// Mean batch loss and its exact gradient with respect to the flat weights.
pub fn loss_and_grad(
    model: &Model,
    loss: &Loss,
    batch: &Matrix,
    labels: &[usize],
) -> Result<(f64, Vec<f64>)> {
    check_labels(model, batch, labels)?;
    let n = batch.rows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let p = model.param_count();
    let mut grad = vec![0.0; p];
    let mut total_loss = 0.0;
    let mut z = vec![0.0; model.out];
    let mut dz = vec![0.0; model.out];
    let mut hidden_buf = vec![0.0; model.hidden];

    for (i, &label) in labels.iter().enumerate() {
        let x = batch.row(i);
        model.forward_row(x, &mut z, &mut hidden_buf);
        let l = loss_grad_output(loss.kind, &z, label, &mut dz)?;
        if !l.is_finite() || dz.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite intermediate at example {i}"
            )));
        }
        total_loss += l;
        accumulate_backward(model, x, &hidden_buf, &dz, &mut grad);
    }

    let inv_n = 1.0 / n as f64;
    let mut mean_loss = total_loss * inv_n;
    for g in &mut grad {
        *g *= inv_n;
    }
    if loss.l2 != 0.0 {
        let mut sq = 0.0;
        for (g, w) in grad.iter_mut().zip(&model.weights) {
            *g += loss.l2 * w;
            sq += w * w;
        }
        mean_loss += 0.5 * loss.l2 * sq;
    }
    Ok((mean_loss, grad))
}

/// Add one example's parameter gradient (given dL/dz) into `grad`.
fn accumulate_backward(model: &Model, x: &[f64], hidden: &[f64], dz: &[f64], grad: &mut [f64]) {
    let d = model.d_in;
    match model.kind {
        ModelKind::LinearRegression => {
            for j in 0..d {
                grad[j] += dz[0] * x[j];
            }
            grad[d] += dz[0];
        }
        ModelKind::SoftmaxRegression => {
            let bias_off = model.out * d;
            for c in 0..model.out {
                let gc = dz[c];
                if gc == 0.0 {
                    continue;
                }
                let row = &mut grad[c * d..(c + 1) * d];
                for j in 0..d {
                    row[j] += gc * x[j];
                }
            }
            for c in 0..model.out {
                grad[bias_off + c] += dz[c];
            }
        }
        ModelKind::Mlp1 => {
            let h = model.hidden;
            let b1_off = h * d;
            let w2_off = b1_off + h;
            let b2_off = w2_off + model.out * h;
            // Output layer.
            for c in 0..model.out {
                let gc = dz[c];
                let row = &mut grad[w2_off + c * h..w2_off + (c + 1) * h];
                for u in 0..h {
                    row[u] += gc * hidden[u];
                }
                grad[b2_off + c] += gc;
            }
            // Backprop through tanh: da = W2^T dz, dpre = da * (1 - a^2).
            for u in 0..h {
                let mut da = 0.0;
                for (c, &g) in dz.iter().enumerate() {
                    da += model.weights[w2_off + c * h + u] * g;
                }
                let dpre = da * (1.0 - hidden[u] * hidden[u]);
                let row = &mut grad[u * d..(u + 1) * d];
                for j in 0..d {
                    row[j] += dpre * x[j];
                }
                grad[b1_off + u] += dpre;
            }
        }
    }
}

/// Central-difference gradient of [`loss_value`]: (f(w + h e_i) - f(w - h e_i)) / 2h.
pub fn finite_diff_grad(
    model: &Model,
    loss: &Loss,
    batch: &Matrix,
    labels: &[usize],
    h: f64,
) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return Err(Error::InvalidArgument("step h must be positive".into()));
    }
    let mut probe = model.clone();
    let mut grad = vec![0.0; model.param_count()];
    for (i, slot) in grad.iter_mut().enumerate() {
        let orig = probe.weights[i];
        probe.weights[i] = orig + h;
        let plus = loss_value(&probe, loss, batch, labels)?;
        probe.weights[i] = orig - h;
        let minus = loss_value(&probe, loss, batch, labels)?;
        probe.weights[i] = orig;
        *slot = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Fraction of examples whose argmax logit matches the label (ties go to the
/// lower class index). Regression models and empty datasets report 0.
pub fn accuracy(model: &Model, dataset: &Dataset) -> Result<f64> {
    if model.out_dim() < 2 || dataset.is_empty() {
        return Ok(0.0);
    }
    let logits = forward(model, dataset.features())?;
    let mut correct = 0usize;
    for (i, &label) in dataset.labels().iter().enumerate() {
        let row = logits.row(i);
        let mut best = 0usize;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Running (Welford) mean of per-example gradient vectors. For identical
/// inputs the mean is bit-exactly the common value, so a dataset of repeated
/// examples measures exactly zero subsampling noise.
fn mean_of_grads<'a>(mut grads: impl Iterator<Item = &'a [f64]>, p: usize) -> Vec<f64> {
    let mut mean = vec![0.0; p];
    let first = grads.next().expect("at least one gradient");
    mean.copy_from_slice(first);
    let mut count = 1.0;
    for g in grads {
        count += 1.0;
        for (m, &v) in mean.iter_mut().zip(g) {
            *m += (v - *m) / count;
        }
    }
    mean
}

/// Empirical estimates of the gradient-Lipschitz constant and the
/// single-example gradient noise level.
///
/// `beta_hat` is the max of `||grad l(u) - grad l(v)|| / ||u - v||` over
/// `samples` random weight pairs drawn at the initialization scale.
/// `sigma_hat^2` is the mean over sampled weights of `b * E||g_b - grad l||^2`
/// with `g_b` a size-`b` mini-batch gradient, i.e. the single-example
/// equivalent variance.
pub fn estimate_smoothness_and_noise(
    model: &Model,
    loss: &Loss,
    dataset: &Dataset,
    rng: &mut Rng,
    samples: usize,
    b: usize,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let n = dataset.len();
    if b == 0 || b > n {
        return Err(Error::InvalidArgument(format!(
            "batch size {b} must be in [1, {n}]"
        )));
    }
    const BATCHES_PER_POINT: usize = 8;
    let p = model.param_count();
    let scale = 1.0 / (model.d_in as f64).sqrt();
    let draw = |rng: &mut Rng| -> Vec<f64> { (0..p).map(|_| rng.normal() * scale).collect() };

    let features = dataset.features();
    let labels = dataset.labels();
    let mut probe = model.clone();
    let mut beta_hat: f64 = 0.0;
    let mut used_pairs = 0usize;
    let mut var_total = 0.0;

    for _ in 0..samples {
        let u = draw(rng);
        let v = draw(rng);
        let dist_sq: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist_sq > 0.0 {
            probe.weights.copy_from_slice(&u);
            let (_, gu) = loss_and_grad(&probe, loss, features, labels)?;
            probe.weights.copy_from_slice(&v);
            let (_, gv) = loss_and_grad(&probe, loss, features, labels)?;
            let diff_sq: f64 = gu.iter().zip(&gv).map(|(a, b)| (a - b) * (a - b)).sum();
            beta_hat = beta_hat.max((diff_sq / dist_sq).sqrt());
            used_pairs += 1;
        }

        // Noise estimate at u (also valid when the pair was degenerate):
        // cache every per-example gradient, then compare batch means with the
        // full mean.
        probe.weights.copy_from_slice(&u);
        let mut example_grads: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let row = Matrix::new(1, features.cols(), features.row(i).to_vec())?;
            let (_, g) = loss_and_grad(&probe, loss, &row, &labels[i..i + 1])?;
            example_grads.push(g);
        }
        let full = mean_of_grads(example_grads.iter().map(Vec::as_slice), p);
        let mut accum = 0.0;
        for _ in 0..BATCHES_PER_POINT {
            let idx = uniform_indices(rng, n, b, true)?;
            let gb = mean_of_grads(idx.iter().map(|&i| example_grads[i].as_slice()), p);
            accum += gb
                .iter()
                .zip(&full)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        var_total += accum / BATCHES_PER_POINT as f64;
    }

    if used_pairs == 0 {
        return Err(Error::InvalidArgument(
            "all sampled weight pairs were degenerate".into(),
        ));
    }
    let sigma_sq = b as f64 * var_total / samples as f64;
    Ok((beta_hat, sigma_sq.sqrt()))
}
