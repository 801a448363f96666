//! End-to-end pipeline runs on a small synthetic corpus with the real
//! model, asserting the mining invariants that unit tests cover only with
//! scripted classifiers.

use attnmine::corpus::{sampled_embeddings, Vocabulary};
use attnmine::miner::{self, Classifier, MiningConfig};
use attnmine::model::ModelParams;
use attnmine::nn::derive_seed;
use attnmine::objective::SupervisedItem;
use attnmine::rand::rngs::StdRng;
use attnmine::rand::SeedableRng;
use attnmine::synth::{self, PatternSpec};
use attnmine::train::{self, TrainOptions};

struct Pipeline {
    vocab: Vocabulary,
    indexed: Vec<attnmine::corpus::IndexedInstance>,
    trained: ModelParams,
}

fn setup(seed: u64) -> Pipeline {
    let spec = PatternSpec {
        apparent_count: 6,
        inapparent_count: 2,
        distractor_vocab: 15,
        min_len: 5,
        max_len: 9,
        seed,
        ..PatternSpec::default()
    };
    let corpus = synth::generate(&spec, 40, 10).unwrap();
    let vocab = Vocabulary::build(&corpus.train, 1).unwrap();
    let store = sampled_embeddings(&vocab, 10, derive_seed(seed, 1));
    let init = ModelParams::init(&store, &mut StdRng::seed_from_u64(derive_seed(seed, 2)));
    let items: Vec<SupervisedItem> = corpus
        .train
        .iter()
        .map(|i| SupervisedItem::from_instance(&vocab.encode(i)))
        .collect();
    let opts = TrainOptions {
        epochs: 5,
        batch_size: 8,
        seed: derive_seed(seed, 3),
        ..TrainOptions::default()
    };
    let trained = train::train(init, &items, None, &opts).unwrap().params;
    let indexed = corpus.train.iter().map(|i| vocab.encode(i)).collect();
    Pipeline {
        vocab,
        indexed,
        trained,
    }
}

fn mine(pipeline: &Pipeline, config: &MiningConfig) -> (miner::MiningOutcome, ModelParams) {
    let mut model = pipeline.trained.clone();
    let outcome = miner::run_mining(&mut model, &pipeline.indexed, config, |m, items, seed| {
        let opts = TrainOptions {
            epochs: config.epochs_per_iteration,
            batch_size: 8,
            seed,
            ..TrainOptions::default()
        };
        *m = train::train(m.clone(), items, None, &opts)?.params;
        Ok(())
    })
    .unwrap();
    (outcome, model)
}

#[test]
fn mining_invariants_hold_on_a_real_run() {
    let pipeline = setup(11);
    let config = MiningConfig {
        max_iterations: 4,
        entropy_threshold: 1.8,
        epochs_per_iteration: 1,
        exclude_aspect: false,
        seed: 17,
    };
    let (outcome, _) = mine(&pipeline, &config);

    for (record, instance) in outcome.records.iter().zip(pipeline.indexed.iter()) {
        let n = instance.tokens.len();
        // set sizes bounded by min(K, N), sets disjoint
        assert!(record.s_a.len() + record.s_m.len() <= config.max_iterations.min(n));
        for pos in &record.s_a {
            assert!(!record.s_m.contains(pos));
        }
        // one log entry per iteration; a position never extracted twice
        assert_eq!(record.extraction_log.len(), config.max_iterations);
        let mut seen = std::collections::HashSet::new();
        for entry in &record.extraction_log {
            if let Some(pos) = entry.picked {
                assert!(pos < n);
                assert!(seen.insert(pos), "position {pos} extracted twice");
            }
        }
        // supervised corpus keeps the original tokens and the final sets
        let item = outcome
            .supervised
            .iter()
            .find(|i| i.id == record.id)
            .unwrap();
        assert_eq!(item.tokens, instance.tokens);
        assert_eq!(item.s_a, record.s_a);
        assert_eq!(item.s_m, record.s_m);
    }
}

#[test]
fn full_mining_run_is_deterministic() {
    let pipeline = setup(13);
    let config = MiningConfig {
        max_iterations: 3,
        entropy_threshold: 1.8,
        epochs_per_iteration: 1,
        exclude_aspect: false,
        seed: 29,
    };
    let (a, model_a) = mine(&pipeline, &config);
    let (b, model_b) = mine(&pipeline, &config);
    assert_eq!(a.records, b.records);
    assert_eq!(a.supervised, b.supervised);
    assert_eq!(model_a, model_b);
}

#[test]
fn retraining_with_supervision_runs_and_stays_finite() {
    let pipeline = setup(19);
    let config = MiningConfig {
        max_iterations: 3,
        entropy_threshold: 2.0,
        epochs_per_iteration: 1,
        exclude_aspect: false,
        seed: 23,
    };
    let (outcome, _) = mine(&pipeline, &config);
    let store = sampled_embeddings(&pipeline.vocab, 10, 91);
    let fresh = ModelParams::init(&store, &mut StdRng::seed_from_u64(92));
    let opts = TrainOptions {
        epochs: 5,
        batch_size: 8,
        gamma: 0.5,
        seed: 93,
        ..TrainOptions::default()
    };
    let retrained = train::train(fresh, &outcome.supervised, None, &opts).unwrap();
    assert!(retrained.params.is_finite());
    // the attention penalty actually engaged during training
    let supervised_rows: Vec<_> = retrained
        .log
        .iter()
        .filter(|r| r.split == "train" && r.penalty > 0.0)
        .collect();
    assert!(
        !supervised_rows.is_empty(),
        "no epoch saw a nonzero attention penalty"
    );
    // predictions still work end to end
    let item = &outcome.supervised[0];
    let (label, alpha) = retrained
        .params
        .predict(&item.tokens, &item.aspect_tokens)
        .unwrap();
    assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let _ = label;
}
