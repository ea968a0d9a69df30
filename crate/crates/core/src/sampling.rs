//! Per-round subset selection strategies.
//!
//! A [`SubsetSchedule`] emits one index list per training round. The repeated
//! random kinds resample every round; `StaticRandom` fixes the subset once;
//! the importance kinds select from a per-example weight vector. Every kind
//! emits `floor(r * N)` distinct in-round indices.

use crate::dataset::Dataset;
use crate::rng::{shuffle, uniform_indices, Rng, Stream};
use crate::{Error, Result};

/// `floor(r * n)` as used for subset sizes and step budgets everywhere.
pub fn ratio_floor(r: f64, n: usize) -> usize {
    (r * n as f64).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    StaticRandom,
    Rs2WithReplacement,
    Rs2WithReplacementStratified,
    Rs2WithoutReplacement,
    ImportanceResample,
    ImportanceRecompute,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::StaticRandom => "static_random",
            ScheduleKind::Rs2WithReplacement => "rs2_with_replacement",
            ScheduleKind::Rs2WithReplacementStratified => "rs2_with_replacement_stratified",
            ScheduleKind::Rs2WithoutReplacement => "rs2_without_replacement",
            ScheduleKind::ImportanceResample => "importance_resample",
            ScheduleKind::ImportanceRecompute => "importance_recompute",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "static_random" => Ok(ScheduleKind::StaticRandom),
            "rs2_with_replacement" => Ok(ScheduleKind::Rs2WithReplacement),
            "rs2_with_replacement_stratified" => Ok(ScheduleKind::Rs2WithReplacementStratified),
            "rs2_without_replacement" => Ok(ScheduleKind::Rs2WithoutReplacement),
            "importance_resample" => Ok(ScheduleKind::ImportanceResample),
            "importance_recompute" => Ok(ScheduleKind::ImportanceRecompute),
            other => Err(Error::InvalidArgument(format!(
                "unknown schedule kind '{other}'"
            ))),
        }
    }

    /// The selection strategies whose draws depend on the data (labels or
    /// model state), as opposed to purely index-level randomness.
    pub fn is_data_dependent(self) -> bool {
        matches!(
            self,
            ScheduleKind::ImportanceResample | ScheduleKind::ImportanceRecompute
        )
    }
}

/// Nonnegative per-example weights with positive total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights {
    weights: Vec<f64>,
}

impl ImportanceWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight at index {pos} is negative or non-finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        Ok(ImportanceWeights { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// Per-example losses normalized into a probability vector; an all-zero loss
/// vector falls back to the uniform distribution.
pub fn loss_based_weights(model_losses: &[f64]) -> Result<ImportanceWeights> {
    if model_losses.is_empty() {
        return Err(Error::InvalidArgument("empty loss vector".into()));
    }
    if let Some(pos) = model_losses.iter().position(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loss at index {pos} is negative or non-finite"
        )));
    }
    let total: f64 = model_losses.iter().sum();
    let n = model_losses.len();
    let weights = if total == 0.0 {
        vec![1.0 / n as f64; n]
    } else {
        model_losses.iter().map(|l| l / total).collect()
    };
    ImportanceWeights::new(weights)
}

#[derive(Debug, Clone)]
enum ScheduleState {
    Static {
        cached: Option<Vec<usize>>,
    },
    WithReplacement,
    Stratified {
        class_members: Vec<Vec<usize>>,
    },
    WithoutReplacement {
        perm: Vec<usize>,
        cursor: usize,
        next_pass: u64,
    },
    Importance {
        weights: Option<ImportanceWeights>,
        fresh: bool,
        top_k: bool,
    },
}

/// Stateful per-round index generator for one selection strategy.
///
/// Rounds are numbered from 1 and must be requested in order; each round's
/// randomness comes from a stream derived from `(seed, round)`, so the subset
/// for round `j` does not depend on unrelated draws.
#[derive(Debug, Clone)]
pub struct SubsetSchedule {
    kind: ScheduleKind,
    r: f64,
    seed: u64,
    n: usize,
    subset_size: usize,
    expected_round: usize,
    state: ScheduleState,
}

impl SubsetSchedule {
    pub fn new(kind: ScheduleKind, r: f64, seed: u64, dataset: &Dataset) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "selection ratio must be in (0, 1], got {r}"
            )));
        }
        let n = dataset.len();
        let subset_size = ratio_floor(r, n);
        if subset_size == 0 {
            return Err(Error::InvalidArgument(
                "selection ratio too small for dataset".into(),
            ));
        }
        let state = match kind {
            ScheduleKind::StaticRandom => ScheduleState::Static { cached: None },
            ScheduleKind::Rs2WithReplacement => ScheduleState::WithReplacement,
            ScheduleKind::Rs2WithReplacementStratified => {
                let mut class_members = vec![Vec::new(); dataset.num_classes()];
                for (i, &l) in dataset.labels().iter().enumerate() {
                    class_members[l].push(i);
                }
                ScheduleState::Stratified { class_members }
            }
            ScheduleKind::Rs2WithoutReplacement => {
                let mut perm: Vec<usize> = (0..n).collect();
                let mut rng = Rng::new(seed, Stream::Shuffle, 0);
                shuffle(&mut rng, &mut perm);
                ScheduleState::WithoutReplacement {
                    perm,
                    cursor: 0,
                    next_pass: 1,
                }
            }
            ScheduleKind::ImportanceResample => ScheduleState::Importance {
                weights: None,
                fresh: false,
                top_k: false,
            },
            ScheduleKind::ImportanceRecompute => ScheduleState::Importance {
                weights: None,
                fresh: false,
                top_k: true,
            },
        };
        Ok(SubsetSchedule {
            kind,
            r,
            seed,
            n,
            subset_size,
            expected_round: 1,
            state,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `floor(r * N)`, the size of every emitted subset.
    pub fn subset_size(&self) -> usize {
        self.subset_size
    }

    /// Install importance weights. Required before round 1 for
    /// `ImportanceResample` and before every round for `ImportanceRecompute`.
    pub fn update_weights(&mut self, weights: ImportanceWeights) -> Result<()> {
        match &mut self.state {
            ScheduleState::Importance {
                weights: slot,
                fresh,
                ..
            } => {
                if weights.len() != self.n {
                    return Err(Error::Shape(format!(
                        "{} weights for {} examples",
                        weights.len(),
                        self.n
                    )));
                }
                *slot = Some(weights);
                *fresh = true;
                Ok(())
            }
            _ => Err(Error::Config(format!(
                "schedule kind {} does not take importance weights",
                self.kind.name()
            ))),
        }
    }

    /// Emit the index subset for `round` (1-based, consecutive).
    pub fn next_round_subset(&mut self, round: usize, dataset: &Dataset) -> Result<Vec<usize>> {
        if round != self.expected_round {
            return Err(Error::InvalidArgument(format!(
                "expected round {}, got {round}",
                self.expected_round
            )));
        }
        if dataset.len() != self.n {
            return Err(Error::Shape(format!(
                "schedule built for {} examples, dataset has {}",
                self.n,
                dataset.len()
            )));
        }
        let k = self.subset_size;
        let subset = match &mut self.state {
            ScheduleState::Static { cached } => {
                if cached.is_none() {
                    let mut rng = Rng::new(self.seed, Stream::StaticSubset, 0);
                    *cached = Some(uniform_indices(&mut rng, self.n, k, true)?);
                }
                cached.clone().unwrap()
            }
            ScheduleState::WithReplacement => {
                let mut rng = Rng::new(self.seed, Stream::Subset, round as u64);
                uniform_indices(&mut rng, self.n, k, true)?
            }
            ScheduleState::Stratified { class_members } => {
                let mut rng = Rng::new(self.seed, Stream::Subset, round as u64);
                let quotas = stratified_quotas(class_members, self.r, k);
                let mut out = Vec::with_capacity(k);
                for (members, quota) in class_members.iter().zip(quotas) {
                    let within = uniform_indices(&mut rng, members.len(), quota, true)?;
                    out.extend(within.into_iter().map(|i| members[i]));
                }
                out
            }
            ScheduleState::WithoutReplacement {
                perm,
                cursor,
                next_pass,
            } => take_without_replacement(perm, cursor, next_pass, self.seed, k),
            ScheduleState::Importance {
                weights,
                fresh,
                top_k,
            } => {
                let w = weights.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "{} requires importance weights before round {round}",
                        self.kind.name()
                    ))
                })?;
                if *top_k {
                    if !*fresh {
                        return Err(Error::Config(format!(
                            "importance_recompute requires fresh weights for round {round}"
                        )));
                    }
                    *fresh = false;
                    top_k_by_weight(w.as_slice(), k)
                } else {
                    let mut rng = Rng::new(self.seed, Stream::Subset, round as u64);
                    weighted_without_replacement(&mut rng, w.as_slice(), k)?
                }
            }
        };
        debug_assert_eq!(subset.len(), k);
        debug_assert!(subset.iter().all(|&i| i < self.n));
        self.expected_round += 1;
        Ok(subset)
    }
}

/// Largest-remainder quotas per class for a total of `k` slots. Residual slots
/// go by descending fractional remainder, then larger class, then lower index.
fn stratified_quotas(class_members: &[Vec<usize>], r: f64, k: usize) -> Vec<usize> {
    let mut quotas: Vec<usize> = Vec::with_capacity(class_members.len());
    let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(class_members.len());
    let mut assigned = 0usize;
    for (c, members) in class_members.iter().enumerate() {
        let target = r * members.len() as f64;
        let base = target.floor() as usize;
        quotas.push(base);
        assigned += base;
        order.push((target - base as f64, members.len(), c));
    }
    order.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    let mut residual = k.saturating_sub(assigned);
    for &(_, size, c) in &order {
        if residual == 0 {
            break;
        }
        if quotas[c] < size {
            quotas[c] += 1;
            residual -= 1;
        }
    }
    quotas
}

/// Consume the next `k` entries of the maintained permutation, reshuffling
/// when the pool runs out. A round that spans a reshuffle skips entries it
/// already holds (swapping them deeper into the new pass) so in-round indices
/// stay distinct.
fn take_without_replacement(
    perm: &mut Vec<usize>,
    cursor: &mut usize,
    next_pass: &mut u64,
    seed: u64,
    k: usize,
) -> Vec<usize> {
    let n = perm.len();
    let mut out = Vec::with_capacity(k);
    let mut taken: Option<Vec<bool>> = None;
    while out.len() < k {
        if *cursor == n {
            let mut rng = Rng::new(seed, Stream::Shuffle, *next_pass);
            *next_pass += 1;
            *perm = (0..n).collect();
            shuffle(&mut rng, perm);
            *cursor = 0;
            if !out.is_empty() {
                let mut flags = vec![false; n];
                for &i in &out {
                    flags[i] = true;
                }
                taken = Some(flags);
            }
        }
        if let Some(flags) = &taken {
            if flags[perm[*cursor]] {
                let mut p = *cursor + 1;
                while flags[perm[p]] {
                    p += 1;
                }
                perm.swap(*cursor, p);
            }
        }
        out.push(perm[*cursor]);
        *cursor += 1;
    }
    out
}

/// Sequential weighted draws with renormalization; exact for the frequency
/// property tests at desk scale.
fn weighted_without_replacement(rng: &mut Rng, weights: &[f64], k: usize) -> Result<Vec<usize>> {
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive < k {
        return Err(Error::InvalidArgument(format!(
            "importance weights have {positive} positive entries, need {k}"
        )));
    }
    let mut remaining = weights.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = remaining.iter().sum();
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &w) in remaining.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            if target < acc {
                chosen = Some(i);
                break;
            }
        }
        // Rounding can push `target` past the last cumulative value.
        let idx = match chosen {
            Some(i) => i,
            None => remaining.iter().rposition(|&w| w > 0.0).unwrap(),
        };
        out.push(idx);
        remaining[idx] = 0.0;
    }
    Ok(out)
}

/// The `k` highest-weight indices, ties broken by lower index.
fn top_k_by_weight(weights: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Mini-batch index stream equivalent to early-stopped full-dataset training.
///
/// Slices a maintained permutation into `T = ceil(N/b)` batches per pass
/// (final batch short when `b` does not divide `N`), reshuffles after each
/// full pass, and stops after `floor(r * T * X)` batches. With the same `rng`,
/// the emitted batches are a prefix of the `r = 1` stream.
#[derive(Debug, Clone)]
pub struct BatchStream {
    rng: Rng,
    perm: Vec<usize>,
    pos: usize,
    batch_size: usize,
    remaining: usize,
}

impl BatchStream {
    pub fn total_batches(n: usize, b: usize, r: f64, rounds: usize) -> usize {
        let t = n.div_ceil(b);
        ratio_floor(r, t * rounds)
    }
}

/// Build the early-stopping-equivalent batch stream.
pub fn early_stop_equivalent_stream(
    mut rng: Rng,
    n: usize,
    b: usize,
    r: f64,
    rounds: usize,
) -> Result<BatchStream> {
    if b == 0 || b > n {
        return Err(Error::InvalidArgument(format!(
            "batch size {b} must be in [1, {n}]"
        )));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "selection ratio must be in (0, 1], got {r}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    shuffle(&mut rng, &mut perm);
    Ok(BatchStream {
        rng,
        perm,
        pos: 0,
        batch_size: b,
        remaining: BatchStream::total_batches(n, b, r, rounds),
    })
}

impl Iterator for BatchStream {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let n = self.perm.len();
        let end = (self.pos + self.batch_size).min(n);
        let batch = self.perm[self.pos..end].to_vec();
        self.pos = end;
        if self.pos == n {
            shuffle(&mut self.rng, &mut self.perm);
            self.pos = 0;
        }
        Some(batch)
    }
}
