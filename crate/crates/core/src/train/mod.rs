//! Mini-batch maximum likelihood with Adam and an optional control-variate
//! (SVRG) gradient estimator.
//!
//! The loss is the average negative log-likelihood over every recorded shot.
//! With control variates the batch gradient at the current parameters is
//! corrected by the same batch evaluated at an anchor plus the exact
//! full-dataset gradient at that anchor. The anchor is refreshed every
//! `cv_period` updates.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::measure::Dataset;
use crate::model::{Ansatz, Model, Objective, WeightedNll};
use crate::seed::rng_from_seed;
use crate::{Error, Result};

mod adam;

pub use adam::{adam_step, AdamParams, AdamState};

/// Minimum decrease of the best full-dataset loss that counts as progress.
pub const IMPROVEMENT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_iter: usize,
    /// Updates between anchor refreshes.
    pub cv_period: usize,
    pub cv: bool,
    /// Iterations without improvement before stopping; 0 disables early stopping.
    pub patience: usize,
    /// Iterations between full-dataset loss evaluations.
    pub eval_every: usize,
    pub seed: u64,
    /// Record wall-clock time in the history (breaks byte-identical output).
    pub timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 100,
            max_iter: 100_000,
            cv_period: 50,
            cv: true,
            patience: 2000,
            eval_every: 50,
            seed: 0,
            timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.cv_period == 0 || self.eval_every == 0 {
            return bad("batch_size, cv_period and eval_every must be positive");
        }
        if self.batch_size > dataset_len {
            return Err(Error::Config(format!(
                "batch_size {} exceeds the dataset size {dataset_len}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// One full-dataset loss evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub loss: f64,
    pub wall_seconds: f64,
    pub anchor_refreshes: usize,
    pub clip_events: usize,
}

pub fn write_history_csv<W: Write>(history: &[HistoryRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in history {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| Error::Config(e.to_string()))?;
    Ok(())
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    Patience,
    /// A gradient had non-finite entries; the step was not applied.
    NonFinite,
}

/// Shots of a dataset prepared for likelihood evaluation.
#[derive(Debug, Clone)]
pub struct TrainData {
    records: Vec<(usize, usize)>,
    full: Vec<(usize, usize, f64)>,
}

impl TrainData {
    pub fn new(dataset: &Dataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::InvalidArgument("dataset has no shots".into()));
        }
        let records: Vec<_> = (0..dataset.len()).map(|i| dataset.record(i)).collect();
        let total = records.len() as f64;
        let full = dataset
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(b, c)| {
                c.iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(move |(s, &k)| (b, s, k as f64 / total))
            })
            .collect();
        Ok(Self { records, full })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(basis, outcome)` of flat shot index `i`.
    pub fn record(&self, i: usize) -> (usize, usize) {
        self.records[i]
    }

    /// Equally weighted items for a batch of flat indices, duplicates merged
    /// in `(basis, outcome)` order.
    fn batch_items(&self, batch: &[usize]) -> Result<Vec<(usize, usize, f64)>> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &i in batch {
            let rec = *self
                .records
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("batch index {i} out of range")))?;
            *counts.entry(rec).or_default() += 1;
        }
        let total = batch.len() as f64;
        Ok(counts
            .into_iter()
            .map(|((b, s), k)| (b, s, k as f64 / total))
            .collect())
    }
}

/// Average negative log-likelihood over every shot.
pub fn dataset_loss(ansatz: &impl Ansatz, theta: &[f64], data: &TrainData) -> Result<f64> {
    Ok(full_gradient(ansatz, theta, data)?.value)
}

/// Loss and exact gradient over the full dataset.
pub fn full_gradient(ansatz: &impl Ansatz, theta: &[f64], data: &TrainData) -> Result<WeightedNll> {
    ansatz.weighted_nll(theta, &data.full)
}

/// Batch-average loss and gradient.
pub fn minibatch_gradient(
    ansatz: &impl Ansatz,
    theta: &[f64],
    data: &TrainData,
    batch: &[usize],
) -> Result<WeightedNll> {
    ansatz.weighted_nll(theta, &data.batch_items(batch)?)
}

/// Control-variate anchor: parameters and the exact gradient there.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub theta: Vec<f64>,
    pub full_grad: Vec<f64>,
}

impl Anchor {
    pub fn new(ansatz: &impl Ansatz, theta: &[f64], data: &TrainData) -> Result<Self> {
        Ok(Self {
            theta: theta.to_vec(),
            full_grad: full_gradient(ansatz, theta, data)?.grad,
        })
    }
}

/// `g_B(theta) - g_B(anchor) + grad L(anchor)`, plus the clip count.
pub fn cv_gradient(
    ansatz: &impl Ansatz,
    theta: &[f64],
    anchor: &Anchor,
    data: &TrainData,
    batch: &[usize],
) -> Result<(Vec<f64>, usize)> {
    let items = data.batch_items(batch)?;
    let now = ansatz.weighted_nll(theta, &items)?;
    let then = ansatz.weighted_nll(&anchor.theta, &items)?;
    let g = now
        .grad
        .iter()
        .zip(&then.grad)
        .zip(&anchor.full_grad)
        .map(|((a, b), c)| a - b + c)
        .collect();
    Ok((g, now.clipped + then.clipped))
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters with the lowest full-dataset loss seen.
    pub best_theta: Vec<f64>,
    pub best_loss: f64,
    pub best_iteration: usize,
    pub final_theta: Vec<f64>,
    /// Parameter updates applied.
    pub iterations: usize,
    pub anchor_refreshes: usize,
    pub clip_events: usize,
    pub stop: StopReason,
    pub adam: AdamParams,
    pub history: Vec<HistoryRecord>,
}

/// Draws `size` flat indices uniformly with replacement.
pub fn sample_batch(rng: &mut impl Rng, dataset_len: usize, size: usize) -> Vec<usize> {
    (0..size)
        .map(|_| rng.random_range(0..dataset_len))
        .collect()
}

/// Run the optimizer from `init`.
///
/// A batch size equal to the dataset size means exact full-batch gradients
/// (no sampling, no control variates).
///
/// The full-dataset loss is evaluated at iteration 0, every `eval_every`
/// updates and after the last update. Early stopping triggers once the best
/// loss has not improved for `patience` iterations.
pub fn train(
    ansatz: &impl Ansatz,
    init: Vec<f64>,
    data: &TrainData,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate(data.len())?;
    if init.len() != ansatz.n_params() {
        return Err(Error::DimensionMismatch {
            expected: ansatz.n_params(),
            found: init.len(),
        });
    }
    let start = Instant::now();
    let clock = || {
        if config.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };
    let mut rng = rng_from_seed(config.seed);
    let adam = AdamParams::default();
    let mut opt = AdamState::new(init.len());
    let mut theta = init;

    let mut anchor_refreshes = 0;
    let mut clip_events = 0;
    let initial = full_gradient(ansatz, &theta, data)?;
    clip_events += initial.clipped;
    let mut best = (initial.value, 0usize, theta.clone());
    let mut history = vec![HistoryRecord {
        iteration: 0,
        loss: initial.value,
        wall_seconds: clock(),
        anchor_refreshes,
        clip_events,
    }];
    let mut anchor: Option<Anchor> = None;
    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;

    // a batch as large as the dataset is the dataset itself
    let full_batch = config.batch_size == data.len();
    for t in 0..config.max_iter {
        if full_batch {
            let g = full_gradient(ansatz, &theta, data)?;
            clip_events += g.clipped;
            if !apply(
                &adam,
                &mut opt,
                &mut theta,
                &g.grad,
                config,
                t,
                &mut stop,
                &mut history,
                clock(),
                anchor_refreshes,
                clip_events,
            ) {
                break;
            }
        } else {
            if config.cv && t % config.cv_period == 0 {
                anchor = Some(Anchor::new(ansatz, &theta, data)?);
                anchor_refreshes += 1;
            }
            let batch = sample_batch(&mut rng, data.len(), config.batch_size);
            let grad = match &anchor {
                Some(a) if config.cv => {
                    let (g, c) = cv_gradient(ansatz, &theta, a, data, &batch)?;
                    clip_events += c;
                    g
                }
                _ => {
                    let g = minibatch_gradient(ansatz, &theta, data, &batch)?;
                    clip_events += g.clipped;
                    g.grad
                }
            };
            if !apply(
                &adam,
                &mut opt,
                &mut theta,
                &grad,
                config,
                t,
                &mut stop,
                &mut history,
                clock(),
                anchor_refreshes,
                clip_events,
            ) {
                break;
            }
        }
        iterations = t + 1;
        if iterations % config.eval_every == 0 || iterations == config.max_iter {
            let eval = full_gradient(ansatz, &theta, data)?;
            clip_events += eval.clipped;
            history.push(HistoryRecord {
                iteration: iterations,
                loss: eval.value,
                wall_seconds: clock(),
                anchor_refreshes,
                clip_events,
            });
            if eval.value < best.0 - IMPROVEMENT_THRESHOLD {
                best = (eval.value, iterations, theta.clone());
            } else if config.patience > 0 && iterations - best.1 >= config.patience {
                stop = StopReason::Patience;
                break;
            }
        }
    }

    let (best_loss, best_iteration, best_theta) = best;
    Ok(TrainOutcome {
        best_theta,
        best_loss,
        best_iteration,
        final_theta: theta,
        iterations,
        anchor_refreshes,
        clip_events,
        stop,
        adam,
        history,
    })
}

/// Adam update; on a non-finite gradient records the failure and returns false.
#[allow(clippy::too_many_arguments)]
fn apply(
    adam: &AdamParams,
    opt: &mut AdamState,
    theta: &mut [f64],
    grad: &[f64],
    config: &TrainConfig,
    t: usize,
    stop: &mut StopReason,
    history: &mut Vec<HistoryRecord>,
    wall_seconds: f64,
    anchor_refreshes: usize,
    clip_events: usize,
) -> bool {
    if adam::step(adam, opt, theta, grad, config.learning_rate).is_ok() {
        return true;
    }
    log::warn!("non-finite gradient at iteration {}; stopping", t + 1);
    *stop = StopReason::NonFinite;
    history.push(HistoryRecord {
        iteration: t + 1,
        loss: f64::NAN,
        wall_seconds,
        anchor_refreshes,
        clip_events,
    });
    false
}

/// Train `init` on `dataset` and return the best model.
pub fn train_model(
    init: &Model,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(Model, TrainOutcome)> {
    let objective = Objective::new(
        init.clone(),
        crate::model::Measurement::for_dataset(dataset)?,
    )?;
    let data = TrainData::new(dataset)?;
    let outcome = train(&objective, init.theta().to_vec(), &data, config)?;
    Ok((objective.model(outcome.best_theta.clone())?, outcome))
}
