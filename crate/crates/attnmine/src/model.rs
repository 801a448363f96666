//! Memory-network sentiment classifier: averaged aspect embedding, one
//! attention hop over context memory, and a fully connected output layer
//! over the concatenation of the attended representation and the aspect
//! vector. The backward pass produces analytic gradients for every
//! parameter tensor; all of them are covered by finite-difference checks in
//! the test suite.
//!
//! Parameters are read-shared for evaluation-mode forwards and mutated only
//! by an exclusive writer during training, which the borrow rules enforce.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::rngs::StdRng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, IndexedInstance, Label, Vocabulary, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::{dropout_mask, softmax, Tensor};

const INIT_RANGE: (f64, f64) = (-0.01, 0.01);
/// Predicted probabilities below this are clamped before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// All trainable tensors of the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// V x d, rows feeding the averaged aspect representation.
    pub aspect_embedding: Tensor,
    /// V x d, rows stored in memory and scored by the attention matrix.
    pub context_embedding: Tensor,
    /// V x d, rows combined by attention weights into the sentence
    /// representation.
    pub output_embedding: Tensor,
    /// d x d attention bilinear form.
    pub attention_matrix: Tensor,
    /// 3 x 2d output layer over concat(o, v_t).
    pub output_weights: Tensor,
    /// 3-way output bias.
    pub output_bias: Tensor,
}

impl ModelParams {
    /// Embedding matrices copy the store; the attention matrix, output
    /// weights and bias are drawn uniformly from [-0.01, 0.01].
    pub fn init(store: &EmbeddingStore, rng: &mut StdRng) -> Self {
        let d = store.dim();
        ModelParams {
            aspect_embedding: store.matrix.clone(),
            context_embedding: store.matrix.clone(),
            output_embedding: store.matrix.clone(),
            attention_matrix: Tensor::uniform(vec![d, d], INIT_RANGE.0, INIT_RANGE.1, rng),
            output_weights: Tensor::uniform(
                vec![NUM_CLASSES, 2 * d],
                INIT_RANGE.0,
                INIT_RANGE.1,
                rng,
            ),
            output_bias: Tensor::uniform(vec![NUM_CLASSES], INIT_RANGE.0, INIT_RANGE.1, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.aspect_embedding.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.aspect_embedding.rows()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn tensors(&self) -> [&Tensor; 6] {
        [
            &self.aspect_embedding,
            &self.context_embedding,
            &self.output_embedding,
            &self.attention_matrix,
            &self.output_weights,
            &self.output_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 6] {
        [
            &mut self.aspect_embedding,
            &mut self.context_embedding,
            &mut self.output_embedding,
            &mut self.attention_matrix,
            &mut self.output_weights,
            &mut self.output_bias,
        ]
    }
}

/// Names of the parameter tensors, aligned with `tensors()` order.
pub const PARAM_NAMES: [&str; 6] = [
    "aspect_embedding",
    "context_embedding",
    "output_embedding",
    "attention_matrix",
    "output_weights",
    "output_bias",
];

/// Result of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutcome {
    /// Attention weight per token position; sums to 1.
    pub alpha: Vec<f64>,
    /// Attended sentence representation o (before output dropout).
    pub sentence_rep: Vec<f64>,
    /// Softmax distribution over the three classes.
    pub predicted_distribution: [f64; NUM_CLASSES],
    /// Argmax of the distribution, ties resolved to the lowest class index.
    pub predicted_label: Label,
}

/// Forward-pass mode. Training applies inverted dropout to the memory rows
/// and to the sentence representation, drawing masks from the given stream;
/// evaluation applies none, so repeated eval calls agree exactly.
pub enum Mode<'r> {
    Eval,
    Train { rate: f64, rng: &'r mut StdRng },
}

/// Intermediate values retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub view: Vec<usize>,
    pub aspect_tokens: Vec<usize>,
    pub v_t: Vec<f64>,
    mem_mask: Option<Tensor>,
    out_mask: Option<Tensor>,
    /// N x d memory rows after dropout.
    m_eff: Tensor,
    pub scores: Vec<f64>,
    pub alpha: Vec<f64>,
    o_eff: Vec<f64>,
    pub dist: [f64; NUM_CLASSES],
}

/// Averaged aspect embedding of the given aspect word indices.
pub fn aspect_rep(params: &ModelParams, aspect_tokens: &[usize]) -> Result<Vec<f64>> {
    if aspect_tokens.is_empty() {
        return Err(Error::InvalidInput("aspect has no tokens".into()));
    }
    let d = params.dim();
    let mut v = vec![0.0; d];
    for &tok in aspect_tokens {
        let row = params.aspect_embedding.row(tok);
        for j in 0..d {
            v[j] += row[j];
        }
    }
    let inv = 1.0 / aspect_tokens.len() as f64;
    v.iter_mut().for_each(|x| *x *= inv);
    Ok(v)
}

/// Convenience wrapper taking a whole instance.
pub fn aspect_rep_of(params: &ModelParams, instance: &IndexedInstance) -> Result<Vec<f64>> {
    aspect_rep(params, &instance.aspect_tokens)
}

/// One forward pass over a token-index view:
/// score_i = v_t' M m_i, alpha = softmax(scores), o = sum alpha_i h_i,
/// class distribution = softmax(W concat(o, v_t) + b).
///
/// The aspect token indices are only recorded in the cache so `backward`
/// can route the v_t gradient into the aspect embedding; passing an empty
/// slice skips that path.
pub fn forward(
    params: &ModelParams,
    view: &[usize],
    aspect_tokens: &[usize],
    v_t: &[f64],
    mode: Mode,
) -> Result<(AttentionOutcome, ForwardCache)> {
    let n = view.len();
    let d = params.dim();
    if n == 0 {
        return Err(Error::InvalidInput("forward on an empty token view".into()));
    }
    if v_t.len() != d {
        return Err(Error::Shape(format!(
            "aspect vector has {} entries, model dimension is {d}",
            v_t.len()
        )));
    }
    if let Some(&bad) = view
        .iter()
        .chain(aspect_tokens.iter())
        .find(|&&t| t >= params.vocab_size())
    {
        return Err(Error::InvalidInput(format!(
            "token index {bad} outside vocabulary of size {}",
            params.vocab_size()
        )));
    }

    let (mem_mask, out_mask) = match mode {
        Mode::Eval => (None, None),
        Mode::Train { rate, rng } => {
            if rate == 0.0 {
                (None, None)
            } else {
                (
                    Some(dropout_mask(&[n, d], rate, rng)?),
                    Some(dropout_mask(&[d], rate, rng)?),
                )
            }
        }
    };

    // Effective memory rows (dropout applied in training mode).
    let mut m_eff = Tensor::zeros(vec![n, d]);
    for i in 0..n {
        let src = params.context_embedding.row(view[i]);
        let dst = m_eff.row_mut(i);
        match &mem_mask {
            Some(mask) => {
                let mrow = mask.row(i);
                for j in 0..d {
                    dst[j] = src[j] * mrow[j];
                }
            }
            None => dst.copy_from_slice(src),
        }
    }

    // v_t' M, then scores.
    let m_mat = &params.attention_matrix;
    let mut vt_m = vec![0.0; d];
    for r in 0..d {
        let row = m_mat.row(r);
        let vr = v_t[r];
        for c in 0..d {
            vt_m[c] += vr * row[c];
        }
    }
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            let m = m_eff.row(i);
            (0..d).map(|j| vt_m[j] * m[j]).sum()
        })
        .collect();
    let alpha = softmax(&scores)?;

    // o = sum_i alpha_i h_i
    let mut o = vec![0.0; d];
    for i in 0..n {
        let h = params.output_embedding.row(view[i]);
        let a = alpha[i];
        for j in 0..d {
            o[j] += a * h[j];
        }
    }
    let o_eff: Vec<f64> = match &out_mask {
        Some(mask) => o.iter().zip(mask.data()).map(|(v, m)| v * m).collect(),
        None => o.clone(),
    };

    // logits = W concat(o_eff, v_t) + b
    let mut logits = [0.0; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        let w = params.output_weights.row(c);
        let mut acc = params.output_bias.data()[c];
        for j in 0..d {
            acc += w[j] * o_eff[j] + w[d + j] * v_t[j];
        }
        logits[c] = acc;
    }
    let dist_vec = softmax(&logits)?;
    let mut dist = [0.0; NUM_CLASSES];
    dist.copy_from_slice(&dist_vec);

    // argmax, ties resolved to the lowest class index
    let mut predicted = 0;
    for c in 1..NUM_CLASSES {
        if dist[c] > dist[predicted] {
            predicted = c;
        }
    }

    let outcome = AttentionOutcome {
        alpha: alpha.clone(),
        sentence_rep: o,
        predicted_distribution: dist,
        predicted_label: Label::from_index(predicted),
    };
    let cache = ForwardCache {
        view: view.to_vec(),
        aspect_tokens: aspect_tokens.to_vec(),
        v_t: v_t.to_vec(),
        mem_mask,
        out_mask,
        m_eff,
        scores,
        alpha,
        o_eff,
        dist,
    };
    Ok((outcome, cache))
}

/// Gradient accumulator shaped like `ModelParams`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub aspect_embedding: Tensor,
    pub context_embedding: Tensor,
    pub output_embedding: Tensor,
    pub attention_matrix: Tensor,
    pub output_weights: Tensor,
    pub output_bias: Tensor,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            aspect_embedding: Tensor::zeros(params.aspect_embedding.shape().to_vec()),
            context_embedding: Tensor::zeros(params.context_embedding.shape().to_vec()),
            output_embedding: Tensor::zeros(params.output_embedding.shape().to_vec()),
            attention_matrix: Tensor::zeros(params.attention_matrix.shape().to_vec()),
            output_weights: Tensor::zeros(params.output_weights.shape().to_vec()),
            output_bias: Tensor::zeros(params.output_bias.shape().to_vec()),
        }
    }

    pub fn tensors(&self) -> [&Tensor; 6] {
        [
            &self.aspect_embedding,
            &self.context_embedding,
            &self.output_embedding,
            &self.attention_matrix,
            &self.output_weights,
            &self.output_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 6] {
        [
            &mut self.aspect_embedding,
            &mut self.context_embedding,
            &mut self.output_embedding,
            &mut self.attention_matrix,
            &mut self.output_weights,
            &mut self.output_bias,
        ]
    }

    pub fn scale(&mut self, c: f64) {
        for t in self.tensors_mut() {
            t.scale(c);
        }
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }
}

/// Accumulate gradients of
///   nll(gold) + gamma * sum_{(pos, target)} (alpha_pos - target)^2
/// into `grads`. The penalty term is skipped entirely when gamma is 0 or no
/// targets are given, so supervision-free training is bit-identical to the
/// plain objective. Must be called with the cache produced by the matching
/// forward pass (same inputs, same dropout masks).
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    gold: Label,
    attention_targets: &[(usize, f64)],
    gamma: f64,
    grads: &mut Gradients,
) -> Result<()> {
    let n = cache.view.len();
    let d = params.dim();
    let gold_idx = gold.index();

    // d nll / d logits; the clamped region of the loss is locally constant.
    let mut g_logits = [0.0; NUM_CLASSES];
    if cache.dist[gold_idx] > PROB_CLAMP {
        for c in 0..NUM_CLASSES {
            g_logits[c] = cache.dist[c] - if c == gold_idx { 1.0 } else { 0.0 };
        }
    }

    // Output layer.
    let mut g_z = vec![0.0; 2 * d];
    for c in 0..NUM_CLASSES {
        let gl = g_logits[c];
        grads.output_bias.data_mut()[c] += gl;
        let w = params.output_weights.row(c);
        let gw = grads.output_weights.row_mut(c);
        for j in 0..d {
            gw[j] += gl * cache.o_eff[j];
            gw[d + j] += gl * cache.v_t[j];
            g_z[j] += w[j] * gl;
            g_z[d + j] += w[d + j] * gl;
        }
    }
    let mut g_o: Vec<f64> = g_z[..d].to_vec();
    if let Some(mask) = &cache.out_mask {
        for j in 0..d {
            g_o[j] *= mask.data()[j];
        }
    }
    let mut g_vt: Vec<f64> = g_z[d..].to_vec();

    // Through o = sum_i alpha_i h_i.
    let mut g_alpha = vec![0.0; n];
    for i in 0..n {
        let h = params.output_embedding.row(cache.view[i]);
        let mut dot = 0.0;
        for j in 0..d {
            dot += g_o[j] * h[j];
        }
        g_alpha[i] = dot;
        let gh = grads.output_embedding.row_mut(cache.view[i]);
        let a = cache.alpha[i];
        for j in 0..d {
            gh[j] += a * g_o[j];
        }
    }

    // Attention regularizer contribution, injected at alpha.
    if gamma != 0.0 && !attention_targets.is_empty() {
        for &(pos, target) in attention_targets {
            if pos >= n {
                return Err(Error::InvalidInput(format!(
                    "attention target position {pos} outside view of length {n}"
                )));
            }
            g_alpha[pos] += gamma * 2.0 * (cache.alpha[pos] - target);
        }
    }

    // Softmax backward.
    let dot: f64 = (0..n).map(|i| g_alpha[i] * cache.alpha[i]).sum();
    let g_scores: Vec<f64> = (0..n)
        .map(|i| cache.alpha[i] * (g_alpha[i] - dot))
        .collect();

    // score_i = v_t' M m_i. Collect w = sum_i g_score_i m_i once; then
    // g_M = outer(v_t, w), g_vt += M w, g_m_i = g_score_i M' v_t.
    let mut w_vec = vec![0.0; d];
    for i in 0..n {
        let m = cache.m_eff.row(i);
        let gs = g_scores[i];
        for j in 0..d {
            w_vec[j] += gs * m[j];
        }
    }
    let m_mat = &params.attention_matrix;
    let mut mt_vt = vec![0.0; d]; // M' v_t
    for r in 0..d {
        let row = m_mat.row(r);
        let vr = cache.v_t[r];
        let gm = grads.attention_matrix.row_mut(r);
        for c in 0..d {
            gm[c] += vr * w_vec[c];
            g_vt[r] += row[c] * w_vec[c];
            mt_vt[c] += row[c] * vr;
        }
    }
    for i in 0..n {
        let gs = g_scores[i];
        if gs == 0.0 {
            continue;
        }
        let gc = grads.context_embedding.row_mut(cache.view[i]);
        match &cache.mem_mask {
            Some(mask) => {
                let mrow = mask.row(i);
                for j in 0..d {
                    gc[j] += gs * mt_vt[j] * mrow[j];
                }
            }
            None => {
                for j in 0..d {
                    gc[j] += gs * mt_vt[j];
                }
            }
        }
    }

    // v_t is the mean of the aspect embedding rows.
    if !cache.aspect_tokens.is_empty() {
        let inv = 1.0 / cache.aspect_tokens.len() as f64;
        for &tok in &cache.aspect_tokens {
            let ga = grads.aspect_embedding.row_mut(tok);
            for j in 0..d {
                ga[j] += inv * g_vt[j];
            }
        }
    }
    Ok(())
}

/// Self-describing checkpoint: shapes and row-major values of all six
/// parameter tensors plus the hash of the vocabulary they were trained
/// against.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub dim: usize,
    pub vocab_size: usize,
    pub vocab_hash: String,
    pub params: ModelParams,
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, vocab: &Vocabulary) -> Result<()> {
    let checkpoint = Checkpoint {
        dim: params.dim(),
        vocab_size: params.vocab_size(),
        vocab_hash: vocab.hash(),
        params: params.clone(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &checkpoint)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Load a checkpoint, verifying the stored vocabulary hash and tensor
/// shapes against the given vocabulary.
pub fn load_checkpoint(path: &Path, vocab: &Vocabulary) -> Result<ModelParams> {
    let reader = BufReader::new(
        File::open(path)
            .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))?,
    );
    let checkpoint: Checkpoint = serde_json::from_reader(reader)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    if checkpoint.vocab_hash != vocab.hash() {
        return Err(Error::Checkpoint(format!(
            "{}: vocabulary hash mismatch (checkpoint {}, corpus {})",
            path.display(),
            checkpoint.vocab_hash,
            vocab.hash()
        )));
    }
    let p = &checkpoint.params;
    let (v, d) = (checkpoint.vocab_size, checkpoint.dim);
    let expected: [(&Tensor, Vec<usize>); 6] = [
        (&p.aspect_embedding, vec![v, d]),
        (&p.context_embedding, vec![v, d]),
        (&p.output_embedding, vec![v, d]),
        (&p.attention_matrix, vec![d, d]),
        (&p.output_weights, vec![NUM_CLASSES, 2 * d]),
        (&p.output_bias, vec![NUM_CLASSES]),
    ];
    for (i, (tensor, shape)) in expected.iter().enumerate() {
        if tensor.shape() != shape.as_slice() {
            return Err(Error::Checkpoint(format!(
                "{}: {} has shape {:?}, expected {:?}",
                path.display(),
                PARAM_NAMES[i],
                tensor.shape(),
                shape
            )));
        }
        if !tensor.is_finite() {
            return Err(Error::Checkpoint(format!(
                "{}: {} contains non-finite values",
                path.display(),
                PARAM_NAMES[i]
            )));
        }
    }
    Ok(checkpoint.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sampled_embeddings, Instance, Vocabulary};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    pub(crate) fn tiny_model(vocab_size: usize, dim: usize, seed: u64) -> ModelParams {
        let words: Vec<String> = (0..vocab_size.saturating_sub(2))
            .map(|i| format!("w{i}"))
            .collect();
        let instances = vec![Instance {
            id: 0,
            tokens: words,
            aspect_span: (0, 1),
            label: Label::Neutral,
        }];
        let vocab = Vocabulary::build(&instances, 1).unwrap();
        assert_eq!(vocab.size(), vocab_size);
        let store = sampled_embeddings(&vocab, dim, seed);
        ModelParams::init(&store, &mut StdRng::seed_from_u64(seed))
    }

    #[test]
    fn aspect_rep_averages_rows() {
        let params = tiny_model(10, 4, 1);
        let single = aspect_rep(&params, &[3]).unwrap();
        assert_eq!(single, params.aspect_embedding.row(3));

        let duplicated = aspect_rep(&params, &[3, 3]).unwrap();
        assert_eq!(duplicated, single);

        let pair = aspect_rep(&params, &[3, 7]).unwrap();
        for j in 0..4 {
            let expect =
                (params.aspect_embedding.at(3, j) + params.aspect_embedding.at(7, j)) / 2.0;
            assert_abs_diff_eq!(pair[j], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_attention_matrix_gives_uniform_alpha() {
        let mut params = tiny_model(10, 4, 2);
        params.attention_matrix.fill(0.0);
        let v_t = aspect_rep(&params, &[2]).unwrap();
        let (outcome, _) = forward(&params, &[3, 4, 5, 6, 7], &[2], &v_t, Mode::Eval).unwrap();
        for a in &outcome.alpha {
            assert_abs_diff_eq!(*a, 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_token_view() {
        let params = tiny_model(10, 4, 3);
        let v_t = aspect_rep(&params, &[2]).unwrap();
        let (outcome, _) = forward(&params, &[5], &[2], &v_t, Mode::Eval).unwrap();
        assert_eq!(outcome.alpha, vec![1.0]);
        assert_eq!(outcome.sentence_rep, params.output_embedding.row(5));
    }

    #[test]
    fn class_distribution_sums_to_one() {
        let params = tiny_model(12, 6, 4);
        let v_t = aspect_rep(&params, &[4, 5]).unwrap();
        let (outcome, _) = forward(&params, &[1, 2, 3, 8, 9], &[4, 5], &v_t, Mode::Eval).unwrap();
        let sum: f64 = outcome.predicted_distribution.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(outcome.alpha.iter().all(|a| *a >= 0.0));
    }

    #[test]
    fn empty_view_is_an_error() {
        let params = tiny_model(10, 4, 5);
        let v_t = aspect_rep(&params, &[2]).unwrap();
        assert!(forward(&params, &[], &[2], &v_t, Mode::Eval).is_err());
    }

    #[test]
    fn eval_forward_is_reproducible() {
        let params = tiny_model(14, 5, 6);
        let v_t = aspect_rep(&params, &[2, 3]).unwrap();
        let (a, _) = forward(&params, &[4, 5, 6, 7], &[2, 3], &v_t, Mode::Eval).unwrap();
        let (b, _) = forward(&params, &[4, 5, 6, 7], &[2, 3], &v_t, Mode::Eval).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn masking_a_token_changes_only_its_score() {
        let params = tiny_model(14, 5, 7);
        let v_t = aspect_rep(&params, &[2]).unwrap();
        let view = vec![4, 5, 6, 7, 8];
        let (_, cache) = forward(&params, &view, &[2], &v_t, Mode::Eval).unwrap();
        let mut masked = view.clone();
        masked[2] = crate::corpus::MASK_INDEX;
        let (_, cache_masked) = forward(&params, &masked, &[2], &v_t, Mode::Eval).unwrap();
        for i in 0..view.len() {
            if i == 2 {
                continue;
            }
            assert_eq!(cache.scores[i], cache_masked.scores[i]);
        }
    }

    #[test]
    fn train_mode_uses_the_rng_stream() {
        let params = tiny_model(14, 5, 8);
        let v_t = aspect_rep(&params, &[2]).unwrap();
        let run = |seed: u64| {
            let mut rng = StdRng::seed_from_u64(seed);
            let (outcome, _) = forward(
                &params,
                &[4, 5, 6],
                &[2],
                &v_t,
                Mode::Train {
                    rate: 0.5,
                    rng: &mut rng,
                },
            )
            .unwrap();
            outcome
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1), run(2));
    }

    #[test]
    fn checkpoint_round_trip_verifies_hash() {
        let instances = vec![Instance {
            id: 0,
            tokens: vec!["alpha".into(), "beta".into()],
            aspect_span: (0, 1),
            label: Label::Neutral,
        }];
        let vocab = Vocabulary::build(&instances, 1).unwrap();
        let store = sampled_embeddings(&vocab, 3, 9);
        let params = ModelParams::init(&store, &mut StdRng::seed_from_u64(9));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        save_checkpoint(&path, &params, &vocab).unwrap();
        let loaded = load_checkpoint(&path, &vocab).unwrap();
        assert_eq!(loaded, params);

        // a different vocabulary must be rejected
        let other = vec![Instance {
            id: 0,
            tokens: vec!["gamma".into(), "delta".into()],
            aspect_span: (0, 1),
            label: Label::Neutral,
        }];
        let other_vocab = Vocabulary::build(&other, 1).unwrap();
        assert!(load_checkpoint(&path, &other_vocab).is_err());
    }
}
