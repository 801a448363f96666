//! Training objectives: plain negative log-likelihood and the
//! supervision-augmented variant that adds a squared-difference penalty
//! between the model's attention weights and expected targets on mined
//! positions. Active positions share the target 1/|s_a|; misleading
//! positions get target 0.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::model::{self, AttentionOutcome, Gradients, Mode, ModelParams, PROB_CLAMP};

/// -ln p(gold), with the probability clamped at 1e-12.
pub fn nll_loss(dist: &[f64], gold: Label) -> f64 {
    -dist[gold.index()].max(PROB_CLAMP).ln()
}

/// Expected attention targets on the supervised positions only:
/// 1/|s_a| on each active position, 0 on each misleading one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedAttention {
    targets: Vec<(usize, f64)>,
}

impl ExpectedAttention {
    pub fn from_sets(s_a: &[usize], s_m: &[usize]) -> Result<Self> {
        if s_a.iter().any(|p| s_m.contains(p)) {
            return Err(Error::InvalidInput(
                "active and misleading sets overlap".into(),
            ));
        }
        let share = if s_a.is_empty() {
            0.0
        } else {
            1.0 / s_a.len() as f64
        };
        let mut targets: Vec<(usize, f64)> = s_a
            .iter()
            .map(|&p| (p, share))
            .chain(s_m.iter().map(|&p| (p, 0.0)))
            .collect();
        targets.sort_by_key(|&(p, _)| p);
        Ok(ExpectedAttention { targets })
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.targets
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Sum of squared differences between attention and its expected targets,
/// restricted to the supervised positions.
pub fn attention_penalty(alpha: &[f64], expected: &ExpectedAttention) -> Result<f64> {
    let mut penalty = 0.0;
    for &(pos, target) in expected.pairs() {
        let a = alpha.get(pos).ok_or_else(|| {
            Error::InvalidInput(format!(
                "supervised position {pos} outside attention vector of length {}",
                alpha.len()
            ))
        })?;
        penalty += (a - target) * (a - target);
    }
    Ok(penalty)
}

/// The components of one loss evaluation: total = nll + gamma * penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub nll: f64,
    pub penalty: f64,
    pub gamma: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(nll: f64, penalty: f64, gamma: f64) -> Self {
        let total = if gamma == 0.0 || penalty == 0.0 {
            nll
        } else {
            nll + gamma * penalty
        };
        LossBreakdown {
            nll,
            penalty,
            gamma,
            total,
        }
    }
}

/// One element of a training corpus: a token view (original or masked), the
/// aspect word indices, the gold label, and any mined supervision sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupervisedItem {
    pub id: usize,
    pub tokens: Vec<usize>,
    pub aspect_tokens: Vec<usize>,
    pub gold: Label,
    pub s_a: Vec<usize>,
    pub s_m: Vec<usize>,
}

impl SupervisedItem {
    pub fn from_instance(instance: &crate::corpus::IndexedInstance) -> Self {
        SupervisedItem {
            id: instance.id,
            tokens: instance.tokens.clone(),
            aspect_tokens: instance.aspect_tokens.clone(),
            gold: instance.label,
            s_a: Vec::new(),
            s_m: Vec::new(),
        }
    }

    pub fn has_supervision(&self) -> bool {
        !self.s_a.is_empty() || !self.s_m.is_empty()
    }
}

/// Evaluate the supervised objective on one item and accumulate its
/// parameter gradients into `grads`. With gamma = 0 or empty sets this is
/// bit-identical to plain negative log-likelihood training.
pub fn supervised_loss_into(
    params: &ModelParams,
    item: &SupervisedItem,
    gamma: f64,
    mode: Mode,
    grads: &mut Gradients,
) -> Result<(LossBreakdown, AttentionOutcome)> {
    let v_t = model::aspect_rep(params, &item.aspect_tokens)?;
    let (outcome, cache) = model::forward(params, &item.tokens, &item.aspect_tokens, &v_t, mode)?;
    let nll = nll_loss(&outcome.predicted_distribution, item.gold);
    let breakdown = if gamma != 0.0 && item.has_supervision() {
        let expected = ExpectedAttention::from_sets(&item.s_a, &item.s_m)?;
        let penalty = attention_penalty(&outcome.alpha, &expected)?;
        model::backward(params, &cache, item.gold, expected.pairs(), gamma, grads)?;
        LossBreakdown::new(nll, penalty, gamma)
    } else {
        model::backward(params, &cache, item.gold, &[], 0.0, grads)?;
        LossBreakdown::new(nll, 0.0, gamma)
    };
    Ok((breakdown, outcome))
}

/// Allocating convenience wrapper around `supervised_loss_into`.
pub fn supervised_loss(
    params: &ModelParams,
    item: &SupervisedItem,
    gamma: f64,
    mode: Mode,
) -> Result<(LossBreakdown, AttentionOutcome, Gradients)> {
    let mut grads = Gradients::zeros_like(params);
    let (breakdown, outcome) = supervised_loss_into(params, item, gamma, mode, &mut grads)?;
    Ok((breakdown, outcome, grads))
}

/// Loss components of an item without touching gradients (evaluation mode).
pub fn evaluate_loss(
    params: &ModelParams,
    item: &SupervisedItem,
    gamma: f64,
) -> Result<(LossBreakdown, AttentionOutcome)> {
    let v_t = model::aspect_rep(params, &item.aspect_tokens)?;
    let (outcome, _) = model::forward(params, &item.tokens, &item.aspect_tokens, &v_t, Mode::Eval)?;
    let nll = nll_loss(&outcome.predicted_distribution, item.gold);
    let penalty = if item.has_supervision() {
        let expected = ExpectedAttention::from_sets(&item.s_a, &item.s_m)?;
        attention_penalty(&outcome.alpha, &expected)?
    } else {
        0.0
    };
    Ok((LossBreakdown::new(nll, penalty, gamma), outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn nll_perfect_prediction_is_zero() {
        assert_eq!(nll_loss(&[0.0, 1.0, 0.0], Label::Negative), 0.0);
    }

    #[test]
    fn nll_uniform_is_ln3() {
        let third = 1.0 / 3.0;
        assert_abs_diff_eq!(
            nll_loss(&[third, third, third], Label::Positive),
            3.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn nll_exp_minus_two() {
        let p = (-2.0f64).exp();
        let rest = (1.0 - p) / 2.0;
        assert_abs_diff_eq!(
            nll_loss(&[p, rest, rest], Label::Positive),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn nll_clamps_tiny_probabilities() {
        let loss = nll_loss(&[0.0, 0.5, 0.5], Label::Positive);
        assert_abs_diff_eq!(loss, -(1e-12f64).ln(), epsilon = 1e-9);
    }

    #[test]
    fn expected_attention_targets() {
        let expected = ExpectedAttention::from_sets(&[3, 5], &[10]).unwrap();
        assert_eq!(expected.pairs(), &[(3, 0.5), (5, 0.5), (10, 0.0)]);
    }

    #[test]
    fn expected_attention_rejects_overlap() {
        assert!(ExpectedAttention::from_sets(&[3], &[3]).is_err());
    }

    #[test]
    fn misleading_only_supervision_is_legal() {
        let expected = ExpectedAttention::from_sets(&[], &[2, 6]).unwrap();
        assert_eq!(expected.pairs(), &[(2, 0.0), (6, 0.0)]);
        let alpha = vec![0.1, 0.1, 0.2, 0.1, 0.1, 0.1, 0.3];
        let penalty = attention_penalty(&alpha, &expected).unwrap();
        assert_abs_diff_eq!(penalty, 0.04 + 0.09, epsilon = 1e-12);
    }

    #[test]
    fn penalty_zero_on_agreement() {
        let expected = ExpectedAttention::from_sets(&[1, 2], &[4]).unwrap();
        let alpha = vec![0.0, 0.5, 0.5, 0.0, 0.0];
        assert_eq!(attention_penalty(&alpha, &expected).unwrap(), 0.0);
    }

    #[test]
    fn penalty_counts_only_supervised_positions() {
        // misleading position carrying weight 0.3 contributes 0.09; everything
        // else matches its target or is unsupervised.
        let expected = ExpectedAttention::from_sets(&[0, 1], &[3]).unwrap();
        let alpha = vec![0.5, 0.5, 0.7, 0.3];
        assert_abs_diff_eq!(
            attention_penalty(&alpha, &expected).unwrap(),
            0.09,
            epsilon = 1e-12
        );
    }

    #[test]
    fn penalty_index_out_of_range_is_an_error() {
        let expected = ExpectedAttention::from_sets(&[9], &[]).unwrap();
        assert!(attention_penalty(&[0.5, 0.5], &expected).is_err());
    }

    #[test]
    fn breakdown_reduces_to_nll_when_unsupervised() {
        let b = LossBreakdown::new(1.25, 0.0, 0.5);
        assert_eq!(b.total, 1.25);
        let b = LossBreakdown::new(1.25, 0.7, 0.0);
        assert_eq!(b.total, 1.25);
        let b = LossBreakdown::new(1.0, 0.5, 0.1);
        assert_abs_diff_eq!(b.total, 1.05, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn penalty_invariant_under_active_set_permutation(
            rotation in 0usize..6,
            alpha_seed in proptest::collection::vec(0.01f64..1.0, 8),
        ) {
            let sum: f64 = alpha_seed.iter().sum();
            let alpha: Vec<f64> = alpha_seed.iter().map(|a| a / sum).collect();
            let s_a = [1usize, 3, 5];
            let rotated: Vec<usize> = (0..3).map(|i| s_a[(i + rotation) % 3]).collect();
            let base = attention_penalty(&alpha, &ExpectedAttention::from_sets(&s_a, &[7]).unwrap()).unwrap();
            let perm = attention_penalty(&alpha, &ExpectedAttention::from_sets(&rotated, &[7]).unwrap()).unwrap();
            prop_assert!((base - perm).abs() < 1e-15);
        }

        #[test]
        fn total_is_monotone_in_penalty(
            nll in 0.0f64..5.0,
            gamma in 0.001f64..2.0,
            p1 in 0.0f64..2.0,
            p2 in 0.0f64..2.0,
        ) {
            let (low, high) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let a = LossBreakdown::new(nll, low, gamma);
            let b = LossBreakdown::new(nll, high, gamma);
            prop_assert!(b.total >= a.total);
        }
    }
}
