//! Finite-difference verification of every analytic gradient: the plain
//! objective, the supervision-augmented objective, and the dropout path
//! (with masks replayed from a fixed seed so the loss stays deterministic
//! under perturbation).

use attnmine::corpus::{sampled_embeddings, Instance, Label, Vocabulary};
use attnmine::model::{Gradients, Mode, ModelParams, PARAM_NAMES};
use attnmine::nn::{derive_seed, grad_check, Tensor};
use attnmine::objective::{supervised_loss, supervised_loss_into, SupervisedItem};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const VOCAB: usize = 20;
const DIM: usize = 8;
const TOKENS: usize = 6;

fn random_setup(seed: u64) -> (ModelParams, SupervisedItem) {
    let words: Vec<String> = (0..VOCAB - 2).map(|i| format!("w{i}")).collect();
    let instances = vec![Instance {
        id: 0,
        tokens: words,
        aspect_span: (0, 1),
        label: Label::Neutral,
    }];
    let vocab = Vocabulary::build(&instances, 1).unwrap();
    let store = sampled_embeddings(&vocab, DIM, seed);
    let mut rng = StdRng::seed_from_u64(derive_seed(seed, 42));
    let params = ModelParams::init(&store, &mut rng);
    let tokens: Vec<usize> = (0..TOKENS).map(|_| rng.gen_range(2..VOCAB)).collect();
    let aspect_tokens = vec![tokens[1], tokens[2]];
    let item = SupervisedItem {
        id: 0,
        tokens,
        aspect_tokens,
        gold: Label::from_index(rng.gen_range(0..3)),
        s_a: Vec::new(),
        s_m: Vec::new(),
    };
    (params, item)
}

/// Loss under the given mode, with dropout masks replayed from a fixed seed
/// so repeated evaluations see the same masks.
fn loss_of(
    params: &ModelParams,
    item: &SupervisedItem,
    gamma: f64,
    dropout: Option<(f64, u64)>,
) -> attnmine::Result<f64> {
    let (breakdown, _, _) = match dropout {
        None => supervised_loss(params, item, gamma, Mode::Eval)?,
        Some((rate, seed)) => {
            let mut rng = StdRng::seed_from_u64(seed);
            supervised_loss(
                params,
                item,
                gamma,
                Mode::Train {
                    rate,
                    rng: &mut rng,
                },
            )?
        }
    };
    Ok(breakdown.total)
}

/// Check every parameter tensor's analytic gradient against central
/// differences; returns the worst relative error over all six tensors.
fn max_gradient_error(
    params: &ModelParams,
    item: &SupervisedItem,
    gamma: f64,
    dropout: Option<(f64, u64)>,
) -> f64 {
    let mut grads = Gradients::zeros_like(params);
    match dropout {
        None => {
            supervised_loss_into(params, item, gamma, Mode::Eval, &mut grads).unwrap();
        }
        Some((rate, seed)) => {
            let mut rng = StdRng::seed_from_u64(seed);
            supervised_loss_into(
                params,
                item,
                gamma,
                Mode::Train {
                    rate,
                    rng: &mut rng,
                },
                &mut grads,
            )
            .unwrap();
        }
    }
    let mut worst = 0.0f64;
    for field in 0..6 {
        let f = |t: &Tensor| {
            let mut perturbed = params.clone();
            *perturbed.tensors_mut()[field] = t.clone();
            loss_of(&perturbed, item, gamma, dropout)
        };
        // h = 1e-3: repeated tokens leave some embedding rows with nearly
        // cancelling score-path gradients (~1e-8); a smaller step lets
        // subtraction roundoff swamp those coordinates.
        let err = grad_check(f, params.tensors()[field], grads.tensors()[field], 1e-3).unwrap();
        assert!(
            err <= 1e-4,
            "{} gradient off by {err} (gamma {gamma}, dropout {dropout:?})",
            PARAM_NAMES[field]
        );
        worst = worst.max(err);
    }
    worst
}

#[test]
fn plain_objective_gradients_match_finite_differences() {
    for seed in 0..5 {
        let (params, item) = random_setup(seed);
        max_gradient_error(&params, &item, 0.0, None);
    }
}

#[test]
fn supervised_objective_gradients_match_finite_differences() {
    for seed in 0..5 {
        let (params, mut item) = random_setup(seed);
        item.s_a = vec![0, 3];
        item.s_m = vec![4];
        max_gradient_error(&params, &item, 0.5, None);
    }
}

#[test]
fn dropout_path_gradients_match_finite_differences() {
    for seed in 0..3 {
        let (params, mut item) = random_setup(seed);
        item.s_a = vec![1];
        item.s_m = vec![5];
        max_gradient_error(&params, &item, 0.25, Some((0.4, derive_seed(seed, 7))));
    }
}

#[test]
fn attention_matrix_gradient_is_an_outer_product() {
    // Each instance contributes outer(v_t, sum_i c_i m_i), so every column
    // of the gradient is a multiple of v_t.
    let (params, item) = random_setup(11);
    let mut grads = Gradients::zeros_like(&params);
    supervised_loss_into(&params, &item, 0.0, Mode::Eval, &mut grads).unwrap();
    let g = &grads.attention_matrix;
    let v_t = attnmine::model::aspect_rep(&params, &item.aspect_tokens).unwrap();
    for c in 0..DIM {
        for r in 0..DIM {
            // g[r][c] * v_t[r'] == g[r'][c] * v_t[r] for all r, r'
            let lhs = g.at(r, c) * v_t[(r + 1) % DIM];
            let rhs = g.at((r + 1) % DIM, c) * v_t[r];
            assert!(
                (lhs - rhs).abs() < 1e-12,
                "column {c} not proportional to v_t"
            );
        }
    }
}

#[test]
fn saturated_prediction_has_near_zero_output_gradient() {
    let (mut params, item) = random_setup(13);
    // Drive the bias so the gold class is predicted with probability ~1.
    params.output_bias.data_mut()[item.gold.index()] = 50.0;
    let mut grads = Gradients::zeros_like(&params);
    supervised_loss_into(&params, &item, 0.0, Mode::Eval, &mut grads).unwrap();
    for &g in grads.output_weights.data() {
        assert!(g.abs() < 1e-8, "saturated W gradient {g}");
    }
    for &g in grads.output_bias.data() {
        assert!(g.abs() < 1e-8, "saturated b gradient {g}");
    }
}

#[test]
fn gamma_zero_gradients_equal_plain_gradients_bitwise() {
    let (params, mut item) = random_setup(17);
    let mut plain = Gradients::zeros_like(&params);
    supervised_loss_into(&params, &item, 0.0, Mode::Eval, &mut plain).unwrap();
    item.s_a = vec![0, 2];
    item.s_m = vec![3];
    let mut supervised = Gradients::zeros_like(&params);
    supervised_loss_into(&params, &item, 0.0, Mode::Eval, &mut supervised).unwrap();
    assert_eq!(plain, supervised);
}

#[test]
fn one_penalty_step_decreases_the_penalty() {
    // Isolate the penalty gradient as grads(gamma=1) - grads(gamma=0) and
    // take a small step against it.
    let (params, mut item) = random_setup(19);
    item.s_a = vec![0, 3];
    item.s_m = vec![4];
    let (with_penalty, _, g1) = supervised_loss(&params, &item, 1.0, Mode::Eval).unwrap();
    let (_, _, g0) = supervised_loss(&params, &item, 0.0, Mode::Eval).unwrap();
    let mut stepped = params.clone();
    for ((p, a), b) in stepped
        .tensors_mut()
        .into_iter()
        .zip(g1.tensors())
        .zip(g0.tensors())
    {
        for i in 0..p.len() {
            p.data_mut()[i] -= 1e-3 * (a.data()[i] - b.data()[i]);
        }
    }
    let (after, _, _) = supervised_loss(&stepped, &item, 1.0, Mode::Eval).unwrap();
    assert!(
        after.penalty < with_penalty.penalty,
        "penalty {} did not decrease (now {})",
        with_penalty.penalty,
        after.penalty
    );
}
