//! Corpus ingestion and indexing: JSON-lines loading, vocabulary
//! construction, pretrained-embedding loading with seeded out-of-vocabulary
//! initialization, and deterministic train/held-out splits.
//!
//! Everything returned here is immutable after construction and safe to
//! share across threads read-only.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Reserved token replacing extracted positions during mining.
pub const MASK_TOKEN: &str = "<mask>";
/// Reserved token for words outside the vocabulary.
pub const UNK_TOKEN: &str = "<unk>";
pub const MASK_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

pub const NUM_CLASSES: usize = 3;

/// Three-way sentiment label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Positive, Label::Negative, Label::Neutral];

    pub fn index(self) -> usize {
        match self {
            Label::Positive => 0,
            Label::Negative => 1,
            Label::Neutral => 2,
        }
    }

    pub fn from_index(idx: usize) -> Label {
        Label::ALL[idx]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
            Label::Neutral => "neutral",
        }
    }
}

/// One labelled sentence with its aspect span. The unit of training and
/// evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: usize,
    pub tokens: Vec<String>,
    /// Half-open token range [start, end) identifying the aspect words.
    pub aspect_span: (usize, usize),
    pub label: Label,
}

impl Instance {
    pub fn aspect_tokens(&self) -> &[String] {
        &self.tokens[self.aspect_span.0..self.aspect_span.1]
    }
}

/// On-disk record shape: one JSON object per line.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    tokens: Vec<String>,
    aspect_span: [usize; 2],
    label: Label,
}

fn validate_record(rec: &Record) -> std::result::Result<(), String> {
    let n = rec.tokens.len();
    if n == 0 {
        return Err("instance has no tokens".into());
    }
    let (start, end) = (rec.aspect_span[0], rec.aspect_span[1]);
    if start >= end || end > n {
        return Err(format!(
            "aspect span [{start}, {end}) invalid for {n} tokens"
        ));
    }
    if rec.tokens.iter().any(|t| t == MASK_TOKEN) {
        return Err(format!("token '{MASK_TOKEN}' is reserved"));
    }
    Ok(())
}

/// Load a JSON-lines corpus. Instances are numbered 0..n-1 in file order and
/// their tokens are lowercased.
pub fn load_corpus(path: &Path) -> Result<Vec<Instance>> {
    let file = File::open(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open corpus {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut instances = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let corpus_err = |msg: String| Error::Corpus {
            path: path.display().to_string(),
            line: lineno + 1,
            msg,
        };
        let mut rec: Record = serde_json::from_str(&line)
            .map_err(|e| corpus_err(format!("malformed record: {e}")))?;
        // lowercase before validating so a cased variant of the reserved
        // mask symbol cannot slip through
        rec.tokens = rec.tokens.iter().map(|t| t.to_lowercase()).collect();
        validate_record(&rec).map_err(corpus_err)?;
        instances.push(Instance {
            id: instances.len(),
            tokens: rec.tokens,
            aspect_span: (rec.aspect_span[0], rec.aspect_span[1]),
            label: rec.label,
        });
    }
    Ok(instances)
}

/// Write instances in the same JSON-lines format `load_corpus` reads.
pub fn serialize_corpus<W: Write>(instances: &[Instance], mut w: W) -> Result<()> {
    for inst in instances {
        let rec = Record {
            tokens: inst.tokens.clone(),
            aspect_span: [inst.aspect_span.0, inst.aspect_span.1],
            label: inst.label,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Instance counts per label, indexed by `Label::index`.
pub fn label_counts(instances: &[Instance]) -> [usize; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    for inst in instances {
        counts[inst.label.index()] += 1;
    }
    counts
}

/// Word-to-index map with reserved mask and unknown entries. Indices are
/// assigned by descending corpus frequency, ties broken lexicographically,
/// so construction is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build(instances: &[Instance], min_count: usize) -> Result<Vocabulary> {
        if instances.is_empty() {
            return Err(Error::InvalidInput(
                "cannot build a vocabulary from an empty corpus".into(),
            ));
        }
        if min_count < 1 {
            return Err(Error::InvalidInput("min_count must be >= 1".into()));
        }
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for inst in instances {
            for tok in &inst.tokens {
                *freq.entry(tok).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = freq
            .into_iter()
            .filter(|&(_, count)| count >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut words = vec![MASK_TOKEN.to_string(), UNK_TOKEN.to_string()];
        words.extend(kept.into_iter().map(|(w, _)| w.to_string()));
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Vocabulary { words, index })
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    /// Index of a word; unknown words map to the reserved unknown index.
    pub fn lookup(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK_INDEX)
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// SHA-256 over the word list in index order; checkpoints store this to
    /// detect vocabulary drift.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Map an instance's tokens (and aspect words) to vocabulary indices.
    pub fn encode(&self, instance: &Instance) -> IndexedInstance {
        let tokens: Vec<usize> = instance.tokens.iter().map(|t| self.lookup(t)).collect();
        let aspect_tokens = tokens[instance.aspect_span.0..instance.aspect_span.1].to_vec();
        IndexedInstance {
            id: instance.id,
            tokens,
            aspect_span: instance.aspect_span,
            aspect_tokens,
            label: instance.label,
        }
    }
}

/// An instance after vocabulary lookup: token indices instead of strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedInstance {
    pub id: usize,
    pub tokens: Vec<usize>,
    pub aspect_span: (usize, usize),
    pub aspect_tokens: Vec<usize>,
    pub label: Label,
}

/// Where an embedding row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowProvenance {
    Pretrained,
    Sampled,
}

/// One embedding row per vocabulary index.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    pub matrix: Tensor,
    pub provenance: Vec<RowProvenance>,
}

impl EmbeddingStore {
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

const OOV_RANGE: (f64, f64) = (-0.25, 0.25);

/// Load whitespace-separated text embeddings (`word v1 .. vd` per line; an
/// optional `<count> <dim>` header line is skipped). Vocabulary words found
/// in the file get the file's values; every other row, including the
/// reserved mask and unknown entries, is sampled uniformly from
/// [-0.25, 0.25] with the given seed.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingStore> {
    let file = File::open(path).map_err(|e| {
        Error::InvalidInput(format!("cannot open embeddings {}: {e}", path.display()))
    })?;
    let reader = BufReader::new(file);
    let mut pretrained: HashMap<usize, Vec<f64>> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if lineno == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            continue; // count/dim header
        }
        let word = fields[0];
        let idx = vocab.lookup(word);
        if idx == UNK_INDEX && word != UNK_TOKEN {
            continue; // word not in vocabulary
        }
        if fields.len() - 1 != dim {
            return Err(Error::InvalidInput(format!(
                "embedding for '{word}' has {} values, expected {dim}",
                fields.len() - 1
            )));
        }
        let mut row = Vec::with_capacity(dim);
        for f in &fields[1..] {
            row.push(f.parse::<f64>().map_err(|e| {
                Error::InvalidInput(format!("embedding for '{word}': bad value '{f}': {e}"))
            })?);
        }
        pretrained.insert(idx, row);
    }
    Ok(assemble_store(vocab, dim, seed, pretrained))
}

/// Embedding store with every row sampled; used when no pretrained file is
/// configured (synthetic corpora).
pub fn sampled_embeddings(vocab: &Vocabulary, dim: usize, seed: u64) -> EmbeddingStore {
    assemble_store(vocab, dim, seed, HashMap::new())
}

fn assemble_store(
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
    pretrained: HashMap<usize, Vec<f64>>,
) -> EmbeddingStore {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut matrix = Tensor::zeros(vec![vocab.size(), dim]);
    let mut provenance = Vec::with_capacity(vocab.size());
    for idx in 0..vocab.size() {
        match pretrained.get(&idx) {
            Some(row) => {
                matrix.row_mut(idx).copy_from_slice(row);
                provenance.push(RowProvenance::Pretrained);
            }
            None => {
                for v in matrix.row_mut(idx) {
                    *v = rand::Rng::gen_range(&mut rng, OOV_RANGE.0..OOV_RANGE.1);
                }
                provenance.push(RowProvenance::Sampled);
            }
        }
    }
    EmbeddingStore { matrix, provenance }
}

/// Train/held-out partition of instance ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<usize>,
    pub heldout: Vec<usize>,
    pub seed: u64,
}

/// Shuffle instance ids with the seeded generator and take the first
/// round(fraction * n) as the held-out set. Both id lists are returned in
/// ascending order.
pub fn split_corpus(instances: &[Instance], fraction: f64, seed: u64) -> Result<CorpusSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split fraction {fraction} outside (0, 1)"
        )));
    }
    if instances.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "cannot split {} instance(s)",
            instances.len()
        )));
    }
    let mut ids: Vec<usize> = instances.iter().map(|i| i.id).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let k = (fraction * instances.len() as f64).round() as usize;
    let mut heldout: Vec<usize> = ids[..k].to_vec();
    let mut train: Vec<usize> = ids[k..].to_vec();
    heldout.sort_unstable();
    train.sort_unstable();
    Ok(CorpusSplit {
        train,
        heldout,
        seed,
    })
}
