//! The pipeline commands. Each writes its primary outputs under the
//! configured output directory and is reproducible: the same config and
//! seed produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use attnmine::corpus::{
    self, CorpusSplit, EmbeddingStore, IndexedInstance, Instance, Label, Vocabulary,
};
use attnmine::eval::{bootstrap_test, ConfusionMatrix, Metric};
use attnmine::miner::{self, MiningConfig, MiningOutcome, SupervisionRecord};
use attnmine::model::{self, ModelParams};
use attnmine::nn::derive_seed;
use attnmine::objective::SupervisedItem;
use attnmine::synth::{self, PatternSpec};
use attnmine::train::{self, LogRow, TrainOptions, TrainOutcome};
use attnmine::{Error, Result};

use crate::config::RunConfig;

// Decoupled random streams per pipeline stage, derived from the run seed.
const SEED_EMBEDDINGS: u64 = 1;
const SEED_INIT: u64 = 2;
const SEED_SPLIT: u64 = 3;
const SEED_TRAIN: u64 = 4;
const SEED_MINE: u64 = 5;
const SEED_RETRAIN_INIT: u64 = 6;
const SEED_RETRAIN: u64 = 7;
const SEED_BOOTSTRAP: u64 = 8;

/// Training corpus with its vocabulary, embeddings, and optional split.
pub struct Workspace {
    pub instances: Vec<Instance>,
    pub vocab: Vocabulary,
    pub store: EmbeddingStore,
    pub indexed: Vec<IndexedInstance>,
    pub split: Option<CorpusSplit>,
}

impl Workspace {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let instances = corpus::load_corpus(config.corpus_path()?)?;
        let vocab = Vocabulary::build(&instances, config.min_count)?;
        let store = match &config.embeddings {
            Some(path) => corpus::load_embeddings(
                path,
                &vocab,
                config.dim,
                derive_seed(config.seed, SEED_EMBEDDINGS),
            )?,
            None => corpus::sampled_embeddings(
                &vocab,
                config.dim,
                derive_seed(config.seed, SEED_EMBEDDINGS),
            ),
        };
        let indexed: Vec<IndexedInstance> =
            instances.iter().map(|inst| vocab.encode(inst)).collect();
        let split = if config.heldout_fraction > 0.0 {
            Some(corpus::split_corpus(
                &instances,
                config.heldout_fraction,
                derive_seed(config.seed, SEED_SPLIT),
            )?)
        } else {
            None
        };
        Ok(Workspace {
            instances,
            vocab,
            store,
            indexed,
            split,
        })
    }

    /// Train-part instances (the whole corpus when no split is configured).
    pub fn train_instances(&self) -> Vec<&IndexedInstance> {
        match &self.split {
            Some(split) => split.train.iter().map(|&id| &self.indexed[id]).collect(),
            None => self.indexed.iter().collect(),
        }
    }

    pub fn heldout_items(&self) -> Option<Vec<SupervisedItem>> {
        self.split.as_ref().map(|split| {
            split
                .heldout
                .iter()
                .map(|&id| SupervisedItem::from_instance(&self.indexed[id]))
                .collect()
        })
    }
}

fn train_options(config: &RunConfig, gamma: f64, epochs: usize, seed: u64) -> TrainOptions {
    TrainOptions {
        epochs,
        batch_size: config.batch_size,
        learning_rate: config.learning_rate,
        dropout: config.dropout,
        gamma,
        trainable_embeddings: config.trainable_embeddings,
        seed,
    }
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    Ok(())
}

fn write_log_csv(path: &Path, rows: &[LogRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,split,nll,penalty,total,accuracy")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.epoch, row.split, row.nll, row.penalty, row.total, row.accuracy
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Run `train` plus any extra compute-matched rounds, renumbering epochs
/// across rounds and keeping the best held-out snapshot over the whole run.
fn train_with_rounds(
    mut params: ModelParams,
    items: &[SupervisedItem],
    heldout: Option<&[SupervisedItem]>,
    config: &RunConfig,
    gamma: f64,
    base_seed: u64,
) -> Result<TrainOutcome> {
    let mut log: Vec<LogRow> = Vec::new();
    let mut best: Option<train::BestSnapshot> = None;
    let mut epoch_offset = 0usize;
    let rounds = 1 + config.extra_rounds;
    for round in 0..rounds {
        let epochs = if round == 0 {
            config.epochs
        } else {
            config.epochs_per_iteration
        };
        let opts = train_options(config, gamma, epochs, derive_seed(base_seed, round as u64));
        let outcome = train::train(params, items, heldout, &opts)?;
        params = outcome.params;
        for mut row in outcome.log {
            row.epoch += epoch_offset;
            log.push(row);
        }
        if let Some(mut snapshot) = outcome.best {
            snapshot.epoch += epoch_offset;
            // same late-tie policy as the epoch-level selection
            let improved = best
                .as_ref()
                .map(|b| snapshot.accuracy >= b.accuracy)
                .unwrap_or(true);
            if improved {
                best = Some(snapshot);
            }
        }
        epoch_offset += epochs;
    }
    Ok(TrainOutcome { params, best, log })
}

/// Baseline training: plain objective, best-on-heldout checkpoint
/// selection, optional extra rounds for the compute-matched baseline.
pub fn cmd_train(config: &RunConfig) -> Result<()> {
    config.validate()?;
    ensure_out_dir(config)?;
    let ws = Workspace::load(config)?;
    let counts = corpus::label_counts(&ws.instances);
    println!(
        "loaded {} instances (pos {} / neg {} / neu {}), vocabulary {}",
        ws.instances.len(),
        counts[0],
        counts[1],
        counts[2],
        ws.vocab.size()
    );
    let params = ModelParams::init(
        &ws.store,
        &mut rand_rng(derive_seed(config.seed, SEED_INIT)),
    );
    let items: Vec<SupervisedItem> = ws
        .train_instances()
        .into_iter()
        .map(SupervisedItem::from_instance)
        .collect();
    let heldout = ws.heldout_items();
    let outcome = train_with_rounds(
        params,
        &items,
        heldout.as_deref(),
        config,
        0.0,
        derive_seed(config.seed, SEED_TRAIN),
    )?;
    let selected = outcome.selected_params();
    let checkpoint = config.out_dir.join("checkpoint.json");
    model::save_checkpoint(&checkpoint, selected, &ws.vocab)?;
    write_log_csv(&config.out_dir.join("train_log.csv"), &outcome.log)?;
    if let Some(best) = &outcome.best {
        println!(
            "kept epoch {} checkpoint (held-out accuracy {:.4})",
            best.epoch, best.accuracy
        );
    }
    println!("wrote {}", checkpoint.display());
    Ok(())
}

fn rand_rng(seed: u64) -> attnmine::rand::rngs::StdRng {
    attnmine::rand::SeedableRng::seed_from_u64(seed)
}

/// Mining: iterative masked re-prediction from a trained checkpoint,
/// producing the supervision dump and the post-mining parameters.
pub fn cmd_mine(config: &RunConfig, checkpoint: &Path) -> Result<()> {
    config.validate()?;
    ensure_out_dir(config)?;
    let ws = Workspace::load(config)?;
    let mut params = model::load_checkpoint(checkpoint, &ws.vocab)?;
    let instances: Vec<IndexedInstance> = ws.train_instances().into_iter().cloned().collect();
    let mining = MiningConfig {
        max_iterations: config.mining_k,
        entropy_threshold: config.epsilon_alpha,
        epochs_per_iteration: config.epochs_per_iteration,
        exclude_aspect: config.exclude_aspect_from_mining,
        seed: derive_seed(config.seed, SEED_MINE),
    };
    let outcome = run_mining_with_training(&mut params, &instances, &mining, config)?;
    let dump = config.out_dir.join("supervision.jsonl");
    miner::write_supervision(&outcome.records, BufWriter::new(File::create(&dump)?))?;
    model::save_checkpoint(
        &config.out_dir.join("checkpoint_mined.json"),
        &params,
        &ws.vocab,
    )?;
    let extracted: usize = outcome
        .records
        .iter()
        .map(|r| r.s_a.len() + r.s_m.len())
        .sum();
    println!(
        "mined {} positions over {} instances ({} iterations)",
        extracted,
        outcome.records.len(),
        config.mining_k
    );
    println!("wrote {}", dump.display());
    Ok(())
}

/// The shared mining loop: continue-training between iterations runs
/// `epochs_per_iteration` epochs of the plain objective on the masked
/// corpus, warm-started from the previous iteration's parameters.
pub fn run_mining_with_training(
    params: &mut ModelParams,
    instances: &[IndexedInstance],
    mining: &MiningConfig,
    config: &RunConfig,
) -> Result<MiningOutcome> {
    let batch = config.batch_size;
    let lr = config.learning_rate;
    let dropout = config.dropout;
    let trainable = config.trainable_embeddings;
    let epochs = mining.epochs_per_iteration;
    miner::run_mining(params, instances, mining, |model, masked, seed| {
        let opts = TrainOptions {
            epochs,
            batch_size: batch,
            learning_rate: lr,
            dropout,
            gamma: 0.0,
            trainable_embeddings: trainable,
            seed,
        };
        let outcome = train::train(model.clone(), masked, None, &opts)?;
        *model = outcome.params;
        Ok(())
    })
}

/// Retraining on the supervision dump: fresh initialization by default,
/// attention regularizer weighted by gamma, original unmasked sentences.
pub fn cmd_retrain(
    config: &RunConfig,
    supervision: &Path,
    warm_start: Option<&Path>,
) -> Result<()> {
    config.validate()?;
    ensure_out_dir(config)?;
    let ws = Workspace::load(config)?;
    let dump_file = File::open(supervision)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", supervision.display())))?;
    let records = miner::read_supervision(BufReader::new(dump_file))?;
    let items = supervised_items(&ws, &records)?;
    let params = match warm_start {
        Some(path) => model::load_checkpoint(path, &ws.vocab)?,
        None => ModelParams::init(
            &ws.store,
            &mut rand_rng(derive_seed(config.seed, SEED_RETRAIN_INIT)),
        ),
    };
    let heldout = ws.heldout_items();
    let outcome = train_with_rounds(
        params,
        &items,
        heldout.as_deref(),
        config,
        config.gamma,
        derive_seed(config.seed, SEED_RETRAIN),
    )?;
    let selected = outcome.selected_params();
    let checkpoint = config.out_dir.join("checkpoint_supervised.json");
    model::save_checkpoint(&checkpoint, selected, &ws.vocab)?;
    write_log_csv(&config.out_dir.join("retrain_log.csv"), &outcome.log)?;
    println!("wrote {}", checkpoint.display());
    Ok(())
}

/// Join mined records onto the training instances by id.
fn supervised_items(ws: &Workspace, records: &[SupervisionRecord]) -> Result<Vec<SupervisedItem>> {
    let instances = ws.train_instances();
    if records.len() != instances.len() {
        return Err(Error::InvalidInput(format!(
            "supervision dump covers {} instances, training split has {}",
            records.len(),
            instances.len()
        )));
    }
    instances
        .into_iter()
        .zip(records.iter())
        .map(|(instance, record)| {
            if instance.id != record.id {
                return Err(Error::InvalidInput(format!(
                    "supervision dump id {} does not match training instance {}",
                    record.id, instance.id
                )));
            }
            let mut item = SupervisedItem::from_instance(instance);
            item.s_a = record.s_a.clone();
            item.s_m = record.s_m.clone();
            Ok(item)
        })
        .collect()
}

/// Predictions of a checkpoint over a test corpus, encoded with the
/// training vocabulary.
fn predict_corpus(
    params: &ModelParams,
    vocab: &Vocabulary,
    instances: &[Instance],
) -> Result<Vec<Label>> {
    use attnmine::miner::Classifier;
    instances
        .iter()
        .map(|inst| {
            let indexed = vocab.encode(inst);
            let (label, _) = params.predict(&indexed.tokens, &indexed.aspect_tokens)?;
            Ok(label)
        })
        .collect()
}

/// Evaluate one checkpoint (and optionally a baseline) on the test corpus,
/// writing the report CSV. The significance column is a paired bootstrap
/// p-value on accuracy against the baseline. With a strata file
/// (`id,stratum` CSV over the test ids), per-stratum rows are appended.
pub fn cmd_eval(
    config: &RunConfig,
    checkpoint: &Path,
    baseline: Option<&Path>,
    strata: Option<&Path>,
) -> Result<()> {
    config.validate()?;
    ensure_out_dir(config)?;
    let ws = Workspace::load(config)?;
    let test_path = config.test_corpus_path()?;
    let test = corpus::load_corpus(test_path)?;
    if test.is_empty() {
        return Err(Error::InvalidInput(format!(
            "test corpus {} is empty",
            test_path.display()
        )));
    }
    let golds: Vec<Label> = test.iter().map(|t| t.label).collect();
    let dataset = file_stem(test_path);
    // subsets to score: the whole corpus, plus one per stratum when given
    let mut subsets: Vec<(String, Vec<usize>)> = vec![(dataset.clone(), (0..test.len()).collect())];
    if let Some(path) = strata {
        for (name, ids) in read_strata(path, test.len())? {
            subsets.push((format!("{dataset}[{name}]"), ids));
        }
    }

    let params = model::load_checkpoint(checkpoint, &ws.vocab)?;
    let preds = predict_corpus(&params, &ws.vocab, &test)?;
    let base_preds = match baseline {
        Some(path) => {
            let base_params = model::load_checkpoint(path, &ws.vocab)?;
            Some(predict_corpus(&base_params, &ws.vocab, &test)?)
        }
        None => None,
    };

    let mut rows: Vec<(String, String, f64, f64, Option<f64>)> = Vec::new();
    for (subset_name, ids) in &subsets {
        let sub = |labels: &[Label]| -> Vec<Label> { ids.iter().map(|&i| labels[i]).collect() };
        let (sub_golds, sub_preds) = (sub(&golds), sub(&preds));
        let cm = ConfusionMatrix::from_pairs(&sub_golds, &sub_preds)?;
        match &base_preds {
            Some(base_preds) => {
                let sub_base = sub(base_preds);
                let base_cm = ConfusionMatrix::from_pairs(&sub_golds, &sub_base)?;
                let p = bootstrap_test(
                    &sub_preds,
                    &sub_base,
                    &sub_golds,
                    Metric::Accuracy,
                    config.bootstrap_trials,
                    derive_seed(config.seed, SEED_BOOTSTRAP),
                )?;
                rows.push((
                    subset_name.clone(),
                    file_stem(checkpoint),
                    cm.accuracy()?,
                    cm.macro_f1(),
                    Some(p),
                ));
                rows.push((
                    subset_name.clone(),
                    file_stem(baseline.unwrap()),
                    base_cm.accuracy()?,
                    base_cm.macro_f1(),
                    None,
                ));
            }
            None => rows.push((
                subset_name.clone(),
                file_stem(checkpoint),
                cm.accuracy()?,
                cm.macro_f1(),
                None,
            )),
        }
    }

    let report = config.out_dir.join("report.csv");
    let mut w = BufWriter::new(File::create(&report)?);
    writeln!(w, "dataset,model,accuracy,macro_f1,p_vs_baseline")?;
    for (subset, model, accuracy, macro_f1, p) in &rows {
        let p = p.map(|p| p.to_string()).unwrap_or_default();
        writeln!(w, "{subset},{model},{accuracy},{macro_f1},{p}")?;
        println!(
            "{subset} {model}: accuracy {accuracy:.4}, macro-F1 {macro_f1:.4}{}",
            if p.is_empty() {
                String::new()
            } else {
                format!(", p vs baseline {p}")
            }
        );
    }
    w.flush()?;
    println!("wrote {}", report.display());
    Ok(())
}

/// Parse an `id,stratum` CSV into (stratum name, test indices) groups,
/// ordered by first appearance.
fn read_strata(path: &Path, n_test: usize) -> Result<Vec<(String, Vec<usize>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidInput(format!("cannot read strata file {}: {e}", path.display()))
    })?;
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue; // header
        }
        let (id, name) = line.split_once(',').ok_or_else(|| {
            Error::InvalidInput(format!(
                "{}:{}: expected 'id,stratum'",
                path.display(),
                lineno + 1
            ))
        })?;
        let id: usize = id.trim().parse().map_err(|e| {
            Error::InvalidInput(format!("{}:{}: bad id: {e}", path.display(), lineno + 1))
        })?;
        if id >= n_test {
            return Err(Error::InvalidInput(format!(
                "{}:{}: id {id} outside test corpus of {n_test} instances",
                path.display(),
                lineno + 1
            )));
        }
        let name = name.trim();
        match groups.iter_mut().find(|(g, _)| g == name) {
            Some((_, ids)) => ids.push(id),
            None => groups.push((name.to_string(), vec![id])),
        }
    }
    Ok(groups)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Sweep the entropy threshold: for each value, mine from the base
/// checkpoint, retrain fresh, and measure held-out accuracy and macro-F1.
pub fn cmd_sweep_epsilon(
    config: &RunConfig,
    checkpoint: &Path,
    from: f64,
    to: f64,
    step: f64,
) -> Result<()> {
    config.validate()?;
    if step <= 0.0 || from > to {
        return Err(Error::InvalidInput(format!(
            "empty sweep range: from {from} to {to} step {step}"
        )));
    }
    ensure_out_dir(config)?;
    let ws = Workspace::load(config)?;
    if ws.split.is_none() {
        return Err(Error::InvalidInput(
            "sweep-epsilon needs heldout_fraction > 0".into(),
        ));
    }
    let base = model::load_checkpoint(checkpoint, &ws.vocab)?;
    let instances: Vec<IndexedInstance> = ws.train_instances().into_iter().cloned().collect();
    let heldout = ws.heldout_items().unwrap();

    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    let mut epsilon = from;
    while epsilon <= to + 1e-12 {
        let mining = MiningConfig {
            max_iterations: config.mining_k,
            entropy_threshold: epsilon,
            epochs_per_iteration: config.epochs_per_iteration,
            exclude_aspect: config.exclude_aspect_from_mining,
            seed: derive_seed(config.seed, SEED_MINE),
        };
        let mut mined_params = base.clone();
        let outcome = run_mining_with_training(&mut mined_params, &instances, &mining, config)?;
        let items: Vec<SupervisedItem> = outcome.supervised;
        let fresh = ModelParams::init(
            &ws.store,
            &mut rand_rng(derive_seed(config.seed, SEED_RETRAIN_INIT)),
        );
        let opts = train_options(
            config,
            config.gamma,
            config.epochs,
            derive_seed(config.seed, SEED_RETRAIN),
        );
        let trained = train::train(fresh, &items, Some(&heldout), &opts)?;
        let selected = trained.selected_params();
        let row = train::evaluate_split(selected, &heldout, config.gamma, 0, "heldout")?;
        // macro-F1 over the held-out split
        let golds: Vec<Label> = heldout.iter().map(|i| i.gold).collect();
        let preds: Vec<Label> = {
            use attnmine::miner::Classifier;
            heldout
                .iter()
                .map(|i| {
                    selected
                        .predict(&i.tokens, &i.aspect_tokens)
                        .map(|(l, _)| l)
                })
                .collect::<Result<_>>()?
        };
        let cm = ConfusionMatrix::from_pairs(&golds, &preds)?;
        rows.push((epsilon, row.accuracy, cm.macro_f1()));
        println!(
            "epsilon {epsilon}: held-out accuracy {:.4}, macro-F1 {:.4}",
            row.accuracy,
            cm.macro_f1()
        );
        epsilon += step;
    }

    let path = config.out_dir.join("epsilon_sweep.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "epsilon_alpha,heldout_accuracy,heldout_macro_f1")?;
    for (epsilon, accuracy, macro_f1) in &rows {
        writeln!(w, "{epsilon},{accuracy},{macro_f1}")?;
    }
    w.flush()?;
    let best = rows
        .iter()
        .max_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap()
                .then(b.0.partial_cmp(&a.0).unwrap())
        })
        .unwrap();
    println!(
        "best: epsilon {} (held-out accuracy {:.4}, macro-F1 {:.4})",
        best.0, best.1, best.2
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// Generate a synthetic corpus with the planted frequency-skew patterns.
pub fn cmd_gen_synth(
    config: &RunConfig,
    spec: &PatternSpec,
    n_train: usize,
    n_test: usize,
) -> Result<()> {
    ensure_out_dir(config)?;
    let generated = synth::generate(spec, n_train, n_test)?;
    let train_path = config.out_dir.join("synth_train.jsonl");
    let test_path = config.out_dir.join("synth_test.jsonl");
    corpus::serialize_corpus(&generated.train, BufWriter::new(File::create(&train_path)?))?;
    corpus::serialize_corpus(&generated.test, BufWriter::new(File::create(&test_path)?))?;
    let strata_path = config.out_dir.join("synth_strata.csv");
    let mut w = BufWriter::new(File::create(&strata_path)?);
    writeln!(w, "id,stratum")?;
    for (inst, stratum) in generated.test.iter().zip(generated.test_strata.iter()) {
        let name = match stratum {
            synth::TestStratum::InapparentOnly => "inapparent_only",
            synth::TestStratum::ApparentIrrelevant => "apparent_irrelevant",
            synth::TestStratum::InDistribution => "in_distribution",
        };
        writeln!(w, "{},{name}", inst.id)?;
    }
    w.flush()?;
    println!(
        "wrote {} train / {} test instances under {}",
        generated.train.len(),
        generated.test.len(),
        config.out_dir.display()
    );
    Ok(())
}

/// Export per-token attention weights for a corpus as a static HTML page
/// and a CSV table. With a supervision dump, extracted positions are
/// rendered as mask tokens with no highlight.
pub fn cmd_export_heatmap(
    config: &RunConfig,
    checkpoint: &Path,
    target: Option<&Path>,
    supervision: Option<&Path>,
    limit: Option<usize>,
) -> Result<()> {
    config.validate()?;
    ensure_out_dir(config)?;
    let ws = Workspace::load(config)?;
    let params = model::load_checkpoint(checkpoint, &ws.vocab)?;
    let instances = match target {
        Some(path) => corpus::load_corpus(path)?,
        None => ws.instances.clone(),
    };
    let records: Option<Vec<SupervisionRecord>> = match supervision {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
            Some(miner::read_supervision(BufReader::new(file))?)
        }
        None => None,
    };
    let limit = limit.unwrap_or(usize::MAX);
    let rendered =
        crate::heatmap::render(&params, &ws.vocab, &instances, records.as_deref(), limit)?;
    let html_path = config.out_dir.join("heatmap.html");
    let csv_path = config.out_dir.join("heatmap.csv");
    std::fs::write(&html_path, rendered.html)?;
    std::fs::write(&csv_path, rendered.csv)?;
    println!("wrote {} and {}", html_path.display(), csv_path.display());
    Ok(())
}
