//! Evaluation: confusion-matrix accuracy, macro-averaged F1 with explicit
//! zero-denominator conventions, and the paired bootstrap significance test.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::corpus::{Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::derive_seed;

/// 3x3 counts, rows = gold, columns = predicted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(golds: &[Label], preds: &[Label]) -> Result<Self> {
        if golds.len() != preds.len() {
            return Err(Error::InvalidInput(format!(
                "{} gold labels but {} predictions",
                golds.len(),
                preds.len()
            )));
        }
        let mut cm = ConfusionMatrix::new();
        for (&g, &p) in golds.iter().zip(preds.iter()) {
            cm.add(g, p);
        }
        Ok(cm)
    }

    pub fn add(&mut self, gold: Label, pred: Label) {
        self.counts[gold.index()][pred.index()] += 1;
    }

    pub fn count(&self, gold: Label, pred: Label) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Trace over total.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::InvalidInput(
                "accuracy of an empty confusion matrix".into(),
            ));
        }
        let trace: u64 = (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum();
        Ok(trace as f64 / total as f64)
    }

    /// Unweighted mean of per-class F1. Precision, recall, and F1 are each
    /// taken as 0 whenever their denominator is 0, and the mean is always
    /// over all three classes.
    pub fn macro_f1(&self) -> f64 {
        let mut sum = 0.0;
        for c in 0..NUM_CLASSES {
            let tp = self.counts[c][c] as f64;
            let fp: f64 = (0..NUM_CLASSES)
                .filter(|&g| g != c)
                .map(|g| self.counts[g][c] as f64)
                .sum();
            let fn_: f64 = (0..NUM_CLASSES)
                .filter(|&p| p != c)
                .map(|p| self.counts[c][p] as f64)
                .sum();
            let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            sum += f1;
        }
        sum / NUM_CLASSES as f64
    }

    /// Construct from raw counts (rows = gold).
    pub fn from_counts(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    MacroF1,
}

impl Metric {
    fn score(&self, cm: &ConfusionMatrix) -> f64 {
        match self {
            // resamples are never empty here (n >= 1 enforced upstream)
            Metric::Accuracy => cm.accuracy().unwrap(),
            Metric::MacroF1 => cm.macro_f1(),
        }
    }
}

/// Paired bootstrap test: resample test indices with replacement `trials`
/// times and report the fraction of trials in which the baseline's metric is
/// at least the system's (ties count as baseline wins, the conservative
/// convention). Per-trial seeds are derived by counter from the master seed
/// so the result does not depend on evaluation order.
pub fn bootstrap_test(
    system_preds: &[Label],
    baseline_preds: &[Label],
    golds: &[Label],
    metric: Metric,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let n = golds.len();
    if system_preds.len() != n || baseline_preds.len() != n {
        return Err(Error::InvalidInput(format!(
            "bootstrap inputs disagree: system {}, baseline {}, gold {n}",
            system_preds.len(),
            baseline_preds.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput(
            "bootstrap over an empty test set".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidInput(
            "bootstrap needs at least 1 trial".into(),
        ));
    }
    let mut baseline_wins = 0usize;
    for trial in 0..trials {
        let mut rng = StdRng::seed_from_u64(derive_seed(seed, trial as u64));
        let mut sys_cm = ConfusionMatrix::new();
        let mut base_cm = ConfusionMatrix::new();
        for _ in 0..n {
            let idx = rng.gen_range(0..n);
            sys_cm.add(golds[idx], system_preds[idx]);
            base_cm.add(golds[idx], baseline_preds[idx]);
        }
        if metric.score(&base_cm) >= metric.score(&sys_cm) {
            baseline_wins += 1;
        }
    }
    Ok(baseline_wins as f64 / trials as f64)
}
