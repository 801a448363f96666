//! Iterative extraction of influential context words. Each round runs an
//! evaluation-mode prediction on every training instance with its already
//! extracted positions masked out, gates on the entropy of the attention
//! distribution, and routes the argmax position into the active set (correct
//! prediction) or the misleading set (incorrect prediction). Between rounds
//! the model is retrained on the masked views so later rounds can surface
//! different words.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{IndexedInstance, Label, MASK_INDEX};
use crate::error::{Error, Result};
use crate::model::{self, Mode, ModelParams};
use crate::nn;
use crate::objective::SupervisedItem;

/// Per-instance mining state: the two position sets and a log of every
/// iteration's decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisionRecord {
    pub id: usize,
    /// Positions whose extraction coincided with a correct prediction.
    pub s_a: Vec<usize>,
    /// Positions whose extraction coincided with an incorrect prediction.
    pub s_m: Vec<usize>,
    #[serde(rename = "log")]
    pub extraction_log: Vec<ExtractionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionEntry {
    /// Mining iteration, starting at 1.
    pub k: usize,
    pub entropy: f64,
    /// Extracted position, or None when the entropy gate stayed closed (or
    /// every position was already masked).
    pub picked: Option<usize>,
    /// Whether the masked-view prediction matched the gold label.
    pub correct: bool,
}

impl SupervisionRecord {
    pub fn empty(id: usize) -> Self {
        SupervisionRecord {
            id,
            s_a: Vec::new(),
            s_m: Vec::new(),
            extraction_log: Vec::new(),
        }
    }

    /// Positions masked so far, in extraction order.
    pub fn masked_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.s_a.iter().chain(self.s_m.iter()).copied()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.s_a.contains(&pos) || self.s_m.contains(&pos)
    }
}

#[derive(Debug, Clone)]
pub struct MiningConfig {
    /// Maximum number of mining iterations K.
    pub max_iterations: usize,
    /// Entropy gate: extraction only happens while the attention entropy is
    /// below this threshold.
    pub entropy_threshold: f64,
    /// Epochs of continue-training on the masked corpus between iterations.
    pub epochs_per_iteration: usize,
    /// When set, positions inside the aspect span are never extracted.
    pub exclude_aspect: bool,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            max_iterations: 5,
            entropy_threshold: 3.0,
            epochs_per_iteration: 1,
            exclude_aspect: false,
            seed: 0,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidInput(
                "mining needs at least 1 iteration".into(),
            ));
        }
        if self.entropy_threshold <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "entropy threshold {} must be > 0",
                self.entropy_threshold
            )));
        }
        Ok(())
    }
}

/// Anything that can produce an evaluation-mode sentiment prediction with an
/// attention distribution over the view's positions. Implemented by
/// `ModelParams`; tests substitute scripted classifiers.
pub trait Classifier {
    fn predict(&self, view: &[usize], aspect_tokens: &[usize]) -> Result<(Label, Vec<f64>)>;
}

impl Classifier for ModelParams {
    fn predict(&self, view: &[usize], aspect_tokens: &[usize]) -> Result<(Label, Vec<f64>)> {
        let v_t = model::aspect_rep(self, aspect_tokens)?;
        let (outcome, _) = model::forward(self, view, aspect_tokens, &v_t, Mode::Eval)?;
        Ok((outcome.predicted_label, outcome.alpha))
    }
}

/// Copy of the instance's token indices with every extracted position
/// replaced by the mask index. Length is preserved.
pub fn mask_view(instance: &IndexedInstance, record: &SupervisionRecord) -> Result<Vec<usize>> {
    if record.id != instance.id {
        return Err(Error::InvalidInput(format!(
            "record {} does not belong to instance {}",
            record.id, instance.id
        )));
    }
    let mut view = instance.tokens.clone();
    for pos in record.masked_positions() {
        if pos >= view.len() {
            return Err(Error::InvalidInput(format!(
                "masked position {pos} outside instance {} of length {}",
                instance.id,
                view.len()
            )));
        }
        view[pos] = MASK_INDEX;
    }
    Ok(view)
}

/// One mining iteration (iteration counter `k` starts at 1): evaluate every
/// instance on its masked view, extract at most one position each, then
/// assemble the masked training corpus for the follow-up training round.
/// Returned views reflect the sets *after* this iteration's extraction.
/// Instances are processed in slice order against read-only parameters, so
/// the outcome does not depend on evaluation scheduling.
pub fn mine_iteration<C: Classifier>(
    classifier: &C,
    instances: &[IndexedInstance],
    records: &mut [SupervisionRecord],
    k: usize,
    config: &MiningConfig,
) -> Result<Vec<SupervisedItem>> {
    if instances.len() != records.len() {
        return Err(Error::InvalidInput(format!(
            "{} instances but {} records",
            instances.len(),
            records.len()
        )));
    }
    for (instance, record) in instances.iter().zip(records.iter_mut()) {
        let view = mask_view(instance, record)?;
        let (predicted, alpha) = classifier.predict(&view, &instance.aspect_tokens)?;
        if alpha.len() != view.len() {
            return Err(Error::Shape(format!(
                "classifier returned {} attention weights for {} positions",
                alpha.len(),
                view.len()
            )));
        }
        let entropy = nn::entropy(&alpha)?;
        let correct = predicted == instance.label;
        let mut picked = None;
        if entropy < config.entropy_threshold {
            // Already masked positions are excluded from candidacy; aspect
            // positions too when configured.
            let candidates = (0..view.len()).filter(|&i| {
                !record.contains(i)
                    && !(config.exclude_aspect
                        && i >= instance.aspect_span.0
                        && i < instance.aspect_span.1)
            });
            let mut best: Option<usize> = None;
            for i in candidates {
                if best.map(|b| alpha[i] > alpha[b]).unwrap_or(true) {
                    best = Some(i);
                }
            }
            if let Some(pos) = best {
                if correct {
                    record.s_a.push(pos);
                } else {
                    record.s_m.push(pos);
                }
                picked = Some(pos);
            }
        }
        record.extraction_log.push(ExtractionEntry {
            k,
            entropy,
            picked,
            correct,
        });
    }
    instances
        .iter()
        .zip(records.iter())
        .map(|(instance, record)| {
            Ok(SupervisedItem {
                id: instance.id,
                tokens: mask_view(instance, record)?,
                aspect_tokens: instance.aspect_tokens.clone(),
                gold: instance.label,
                s_a: Vec::new(),
                s_m: Vec::new(),
            })
        })
        .collect()
}

/// The result of a full mining run: per-instance records plus the
/// supervised corpus over the original, unmasked sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct MiningOutcome {
    pub records: Vec<SupervisionRecord>,
    pub supervised: Vec<SupervisedItem>,
}

/// Run the full mining loop starting from an already trained classifier.
/// After each iteration, `continue_train` is called with the iteration's
/// masked corpus and a seed derived from the mining seed and the iteration
/// counter; it should run `epochs_per_iteration` epochs of plain training.
pub fn run_mining<C, F>(
    classifier: &mut C,
    instances: &[IndexedInstance],
    config: &MiningConfig,
    mut continue_train: F,
) -> Result<MiningOutcome>
where
    C: Classifier,
    F: FnMut(&mut C, &[SupervisedItem], u64) -> Result<()>,
{
    config.validate()?;
    if instances.is_empty() {
        return Err(Error::InvalidInput("mining corpus is empty".into()));
    }
    let mut records: Vec<SupervisionRecord> = instances
        .iter()
        .map(|inst| SupervisionRecord::empty(inst.id))
        .collect();
    for k in 1..=config.max_iterations {
        let masked = mine_iteration(&*classifier, instances, &mut records, k, config)?;
        continue_train(classifier, &masked, nn::derive_seed(config.seed, k as u64)).map_err(
            |e| match e {
                Error::Numeric(msg) => Error::Numeric(format!(
                    "continue-training diverged at iteration {k}: {msg}"
                )),
                other => other,
            },
        )?;
    }
    let supervised = instances
        .iter()
        .zip(records.iter())
        .map(|(instance, record)| SupervisedItem {
            id: instance.id,
            tokens: instance.tokens.clone(),
            aspect_tokens: instance.aspect_tokens.clone(),
            gold: instance.label,
            s_a: record.s_a.clone(),
            s_m: record.s_m.clone(),
        })
        .collect();
    Ok(MiningOutcome {
        records,
        supervised,
    })
}

/// Write supervision records as JSON lines.
pub fn write_supervision<W: Write>(records: &[SupervisionRecord], mut w: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a supervision dump written by `write_supervision`.
pub fn read_supervision<R: BufRead>(r: R) -> Result<Vec<SupervisionRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SupervisionRecord = serde_json::from_str(&line).map_err(|e| Error::Corpus {
            path: "<supervision>".into(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
