//! Mini-batch Adam training loop shared by the baseline objective, the
//! continue-training rounds between mining iterations, and the final
//! supervised retraining. Item order is shuffled per epoch from the seeded
//! stream and gradients are reduced in item order, so a run is a pure
//! function of (items, initial parameters, options).

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Gradients, Mode, ModelParams};
use crate::nn::AdamState;
use crate::objective::{self, SupervisedItem};

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    /// Weight of the attention regularizer; 0 disables it.
    pub gamma: f64,
    /// When false the three embedding matrices are frozen.
    pub trainable_embeddings: bool,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.001,
            dropout: 0.2,
            gamma: 0.0,
            trainable_embeddings: true,
            seed: 0,
        }
    }
}

/// One line of the training log (per epoch and split).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub epoch: usize,
    pub split: String,
    pub nll: f64,
    pub penalty: f64,
    pub total: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub params: ModelParams,
    /// Best-on-heldout snapshot, when a held-out set was given.
    pub best: Option<BestSnapshot>,
    pub log: Vec<LogRow>,
}

#[derive(Debug, Clone)]
pub struct BestSnapshot {
    pub epoch: usize,
    pub accuracy: f64,
    pub params: ModelParams,
}

impl TrainOutcome {
    /// The checkpoint to keep: the best held-out snapshot when tracked,
    /// otherwise the final parameters.
    pub fn selected_params(&self) -> &ModelParams {
        self.best
            .as_ref()
            .map(|b| &b.params)
            .unwrap_or(&self.params)
    }
}

struct Optimizer {
    states: Vec<AdamState>,
    trainable_embeddings: bool,
}

impl Optimizer {
    fn new(params: &ModelParams, opts: &TrainOptions) -> Self {
        let states = params
            .tensors()
            .iter()
            .map(|t| AdamState::new(t.shape(), opts.learning_rate))
            .collect();
        Optimizer {
            states,
            trainable_embeddings: opts.trainable_embeddings,
        }
    }

    fn apply(&mut self, params: &mut ModelParams, grads: &Gradients) -> Result<()> {
        for (i, (p, g)) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .enumerate()
        {
            // indices 0..2 are the embedding matrices
            if i < 3 && !self.trainable_embeddings {
                continue;
            }
            self.states[i].step(p, g)?;
        }
        Ok(())
    }
}

/// Run the training loop, starting from `params`. When `heldout` is given,
/// accuracy on it is evaluated after every epoch and the best snapshot is
/// recorded alongside the final parameters.
pub fn train(
    params: ModelParams,
    items: &[SupervisedItem],
    heldout: Option<&[SupervisedItem]>,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    if items.is_empty() {
        return Err(Error::InvalidInput("training corpus is empty".into()));
    }
    if opts.batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be >= 1".into()));
    }
    let mut params = params;
    let mut optimizer = Optimizer::new(&params, opts);
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut grads = Gradients::zeros_like(&params);
    let mut log = Vec::new();
    let mut best: Option<BestSnapshot> = None;

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut nll_sum = 0.0;
        let mut penalty_sum = 0.0;
        let mut total_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(opts.batch_size) {
            grads.fill_zero();
            for &idx in batch {
                let item = &items[idx];
                let (breakdown, outcome) = objective::supervised_loss_into(
                    &params,
                    item,
                    opts.gamma,
                    Mode::Train {
                        rate: opts.dropout,
                        rng: &mut rng,
                    },
                    &mut grads,
                )?;
                if !breakdown.total.is_finite() {
                    return Err(Error::Numeric(format!(
                        "training diverged at epoch {epoch}: loss {} on instance {}",
                        breakdown.total, item.id
                    )));
                }
                nll_sum += breakdown.nll;
                penalty_sum += breakdown.penalty;
                total_sum += breakdown.total;
                if outcome.predicted_label == item.gold {
                    correct += 1;
                }
            }
            grads.scale(1.0 / batch.len() as f64);
            optimizer.apply(&mut params, &grads)?;
        }
        if !params.is_finite() {
            return Err(Error::Numeric(format!(
                "training diverged at epoch {epoch}: non-finite parameters"
            )));
        }
        let n = items.len() as f64;
        log.push(LogRow {
            epoch,
            split: "train".into(),
            nll: nll_sum / n,
            penalty: penalty_sum / n,
            total: total_sum / n,
            accuracy: correct as f64 / n,
        });

        if let Some(heldout) = heldout {
            let row = evaluate_split(&params, heldout, opts.gamma, epoch, "heldout")?;
            // ties keep the later epoch: extra training that does not hurt
            // held-out accuracy still refines the attention weights
            let improved = best
                .as_ref()
                .map(|b| row.accuracy >= b.accuracy)
                .unwrap_or(true);
            if improved {
                best = Some(BestSnapshot {
                    epoch,
                    accuracy: row.accuracy,
                    params: params.clone(),
                });
            }
            log.push(row);
        }
    }
    Ok(TrainOutcome { params, best, log })
}

/// Evaluation-mode pass over a split, producing one log row.
pub fn evaluate_split(
    params: &ModelParams,
    items: &[SupervisedItem],
    gamma: f64,
    epoch: usize,
    split: &str,
) -> Result<LogRow> {
    let mut nll_sum = 0.0;
    let mut penalty_sum = 0.0;
    let mut total_sum = 0.0;
    let mut correct = 0usize;
    for item in items {
        let (breakdown, outcome) = objective::evaluate_loss(params, item, gamma)?;
        nll_sum += breakdown.nll;
        penalty_sum += breakdown.penalty;
        total_sum += breakdown.total;
        if outcome.predicted_label == item.gold {
            correct += 1;
        }
    }
    let n = items.len().max(1) as f64;
    Ok(LogRow {
        epoch,
        split: split.into(),
        nll: nll_sum / n,
        penalty: penalty_sum / n,
        total: total_sum / n,
        accuracy: correct as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sampled_embeddings, Instance, Label, Vocabulary};
    use crate::nn::derive_seed;

    fn toy_task(seed: u64) -> (Vec<SupervisedItem>, ModelParams) {
        // Simple separable task: "good" marks positive, "bad" negative,
        // plain filler neutral.
        let mut instances = Vec::new();
        let words = ["good", "bad", "meh", "thing", "one", "two", "item"];
        for i in 0..24 {
            let (cue, label) = match i % 3 {
                0 => ("good", Label::Positive),
                1 => ("bad", Label::Negative),
                _ => ("meh", Label::Neutral),
            };
            let filler = words[3 + (i % 4)];
            instances.push(Instance {
                id: i,
                tokens: vec![
                    "item".into(),
                    filler.into(),
                    cue.into(),
                    words[3 + ((i + 1) % 4)].into(),
                ],
                aspect_span: (0, 1),
                label,
            });
        }
        let vocab = Vocabulary::build(&instances, 1).unwrap();
        let store = sampled_embeddings(&vocab, 8, seed);
        let params = ModelParams::init(
            &store,
            &mut rand::SeedableRng::seed_from_u64(derive_seed(seed, 1)),
        );
        let items = instances
            .iter()
            .map(|inst| SupervisedItem::from_instance(&vocab.encode(inst)))
            .collect();
        (items, params)
    }

    #[test]
    fn training_is_deterministic() {
        let (items, params) = toy_task(3);
        let opts = TrainOptions {
            epochs: 3,
            seed: 11,
            ..TrainOptions::default()
        };
        let a = train(params.clone(), &items, None, &opts).unwrap();
        let b = train(params, &items, None, &opts).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn training_loss_mostly_decreases() {
        // Aggregated over 5 seeds: at least 4 of 5 epoch transitions
        // non-increasing on average.
        let mut non_increasing = 0usize;
        let mut transitions = 0usize;
        for seed in 0..5u64 {
            let (items, params) = toy_task(seed);
            let opts = TrainOptions {
                epochs: 6,
                dropout: 0.1,
                seed,
                ..TrainOptions::default()
            };
            let outcome = train(params, &items, None, &opts).unwrap();
            let losses: Vec<f64> = outcome
                .log
                .iter()
                .filter(|r| r.split == "train")
                .map(|r| r.total)
                .collect();
            for w in losses.windows(2) {
                transitions += 1;
                if w[1] <= w[0] + 1e-9 {
                    non_increasing += 1;
                }
            }
        }
        assert!(
            non_increasing as f64 / transitions as f64 >= 0.8,
            "{non_increasing}/{transitions} transitions non-increasing"
        );
    }

    #[test]
    fn heldout_tracking_keeps_best_snapshot() {
        let (items, params) = toy_task(5);
        let (train_items, heldout_items) = items.split_at(18);
        let opts = TrainOptions {
            epochs: 8,
            seed: 5,
            ..TrainOptions::default()
        };
        let outcome = train(params, train_items, Some(heldout_items), &opts).unwrap();
        let best = outcome.best.as_ref().unwrap();
        let heldout_acc: Vec<f64> = outcome
            .log
            .iter()
            .filter(|r| r.split == "heldout")
            .map(|r| r.accuracy)
            .collect();
        let max = heldout_acc.iter().cloned().fold(0.0, f64::max);
        assert_eq!(best.accuracy, max);
        assert_eq!(heldout_acc[best.epoch], max);
    }

    #[test]
    fn frozen_embeddings_stay_put() {
        let (items, params) = toy_task(7);
        let opts = TrainOptions {
            epochs: 2,
            trainable_embeddings: false,
            seed: 7,
            ..TrainOptions::default()
        };
        let before = params.clone();
        let outcome = train(params, &items, None, &opts).unwrap();
        assert_eq!(outcome.params.aspect_embedding, before.aspect_embedding);
        assert_eq!(outcome.params.context_embedding, before.context_embedding);
        assert_eq!(outcome.params.output_embedding, before.output_embedding);
        assert_ne!(outcome.params.attention_matrix, before.attention_matrix);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let (_, params) = toy_task(1);
        assert!(train(params, &[], None, &TrainOptions::default()).is_err());
    }
}
