//! Synthetic corpus generator that plants a frequency-skewed pair of
//! sentiment-bearing words: a high-frequency "apparent" cue and a
//! low-frequency "inapparent" one whose sentiment the apparent cue tends to
//! shadow during training. The test set carries strata designed to expose
//! exactly that failure: sentences where only the inapparent cue appears,
//! and sentences where the apparent cue appears but does not drive the
//! label.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::corpus::{Instance, Label};
use crate::error::{Error, Result};

/// Fixed positive-class carrier word; sentences containing it (and no
/// pattern word) are labelled positive.
pub const POSITIVE_CARRIER: &str = "pleasant";

/// Fixed negative-class carrier word. Carrier sentences keep both polar
/// classes frequent, so masking a sentence's cue word still leaves the
/// corpus-level class structure learnable.
pub const NEGATIVE_CARRIER: &str = "dirty";

const ASPECT_WORDS: [&str; 4] = ["place", "service", "food", "staff"];

// Shares of the non-pattern training sentences. The negative-carrier share
// is kept largest so that views whose cue word has been masked out lean
// negative, matching the label of masked pattern sentences.
const NEG_CARRIER_SHARE: f64 = 0.45;
const POS_CARRIER_SHARE: f64 = 0.40;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternSpec {
    pub apparent_word: String,
    pub apparent_label: Label,
    /// Number of training sentences containing the apparent word.
    pub apparent_count: usize,
    pub inapparent_word: String,
    pub inapparent_label: Label,
    /// Number of training sentences containing the inapparent word.
    pub inapparent_count: usize,
    /// Size of the neutral filler vocabulary.
    pub distractor_vocab: usize,
    /// Inclusive sentence length range, counting the aspect word.
    pub min_len: usize,
    pub max_len: usize,
    /// Fraction of inapparent sentences that also contain the apparent word.
    pub cooccurrence_rate: f64,
    pub seed: u64,
}

impl Default for PatternSpec {
    fn default() -> Self {
        PatternSpec {
            apparent_word: "small".into(),
            apparent_label: Label::Negative,
            apparent_count: 30,
            inapparent_word: "crowded".into(),
            inapparent_label: Label::Negative,
            inapparent_count: 3,
            distractor_vocab: 40,
            min_len: 8,
            max_len: 12,
            cooccurrence_rate: 1.0,
            seed: 0,
        }
    }
}

/// Which failure mode a test sentence probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStratum {
    /// Only the inapparent word is present; gold is its sentiment.
    InapparentOnly,
    /// The apparent word is present but the positive carrier drives the
    /// label.
    ApparentIrrelevant,
    /// In-distribution sentences matching the training composition.
    InDistribution,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub train: Vec<Instance>,
    pub test: Vec<Instance>,
    /// Stratum of each test instance, aligned with `test`.
    pub test_strata: Vec<TestStratum>,
    pub spec: PatternSpec,
}

type RawSentence = (Vec<String>, (usize, usize), Label);

struct Generator<'a> {
    spec: &'a PatternSpec,
    fillers: Vec<String>,
    rng: StdRng,
}

impl<'a> Generator<'a> {
    fn sentence(&mut self, carriers: &[&str]) -> (Vec<String>, (usize, usize)) {
        let len = self.rng.gen_range(self.spec.min_len..=self.spec.max_len);
        let filler_count = len - 1 - carriers.len();
        let mut tokens: Vec<String> = self
            .fillers
            .choose_multiple(&mut self.rng, filler_count)
            .cloned()
            .collect();
        let aspect = ASPECT_WORDS[self.rng.gen_range(0..ASPECT_WORDS.len())].to_string();
        let insert = |word: String, tokens: &mut Vec<String>, rng: &mut StdRng| {
            let pos = rng.gen_range(0..=tokens.len());
            tokens.insert(pos, word);
        };
        insert(aspect.clone(), &mut tokens, &mut self.rng);
        for carrier in carriers {
            insert(carrier.to_string(), &mut tokens, &mut self.rng);
        }
        let aspect_pos = tokens.iter().position(|t| *t == aspect).unwrap();
        (tokens, (aspect_pos, aspect_pos + 1))
    }
}

/// Build a (train, test) pair per the spec. Labels are a deterministic
/// function of the planted words; strata counts are exact.
pub fn generate(spec: &PatternSpec, n_train: usize, n_test: usize) -> Result<SynthCorpus> {
    if n_train < 1 || n_test < 1 {
        return Err(Error::InvalidInput("corpus sizes must be >= 1".into()));
    }
    if spec.apparent_count < 1 || spec.inapparent_count < 1 {
        return Err(Error::InvalidInput(
            "pattern frequencies must be >= 1".into(),
        ));
    }
    if spec.apparent_count <= spec.inapparent_count {
        return Err(Error::InvalidInput(format!(
            "apparent frequency {} must exceed inapparent frequency {}",
            spec.apparent_count, spec.inapparent_count
        )));
    }
    if !(0.0..=1.0).contains(&spec.cooccurrence_rate) {
        return Err(Error::InvalidInput(
            "co-occurrence rate outside [0, 1]".into(),
        ));
    }
    if spec.min_len < 3 || spec.min_len > spec.max_len {
        return Err(Error::InvalidInput(format!(
            "bad sentence length range [{}, {}]",
            spec.min_len, spec.max_len
        )));
    }
    // Up to two carrier words plus the aspect go into a sentence; the rest
    // are distinct distractors.
    if spec.distractor_vocab < spec.max_len {
        return Err(Error::InvalidInput(format!(
            "distractor vocabulary of {} cannot fill sentences of length {}",
            spec.distractor_vocab, spec.max_len
        )));
    }

    let cooccur = (spec.cooccurrence_rate * spec.inapparent_count as f64).round() as usize;
    let cooccur = cooccur.min(spec.inapparent_count).min(spec.apparent_count);
    let apparent_only = spec.apparent_count - cooccur;
    let inapparent_only = spec.inapparent_count - cooccur;
    let pattern_total = apparent_only + inapparent_only + cooccur;
    if pattern_total > n_train {
        return Err(Error::InvalidInput(format!(
            "{pattern_total} pattern sentences exceed the training size {n_train}"
        )));
    }
    let remaining = n_train - pattern_total;
    let neg_carrier_count = (remaining as f64 * NEG_CARRIER_SHARE).floor() as usize;
    let pos_count = (remaining as f64 * POS_CARRIER_SHARE).floor() as usize;
    let neu_count = remaining - neg_carrier_count - pos_count;

    let fillers: Vec<String> = (0..spec.distractor_vocab)
        .map(|i| format!("filler{i:03}"))
        .collect();
    let mut gen = Generator {
        spec,
        fillers,
        rng: StdRng::seed_from_u64(spec.seed),
    };

    let apparent = spec.apparent_word.to_lowercase();
    let inapparent = spec.inapparent_word.to_lowercase();

    let mut train_raw: Vec<RawSentence> = Vec::with_capacity(n_train);
    for _ in 0..apparent_only {
        let (tokens, span) = gen.sentence(&[&apparent]);
        train_raw.push((tokens, span, spec.apparent_label));
    }
    for _ in 0..cooccur {
        let (tokens, span) = gen.sentence(&[&apparent, &inapparent]);
        train_raw.push((tokens, span, spec.inapparent_label));
    }
    for _ in 0..inapparent_only {
        let (tokens, span) = gen.sentence(&[&inapparent]);
        train_raw.push((tokens, span, spec.inapparent_label));
    }
    for _ in 0..neg_carrier_count {
        let (tokens, span) = gen.sentence(&[NEGATIVE_CARRIER]);
        train_raw.push((tokens, span, Label::Negative));
    }
    for _ in 0..pos_count {
        let (tokens, span) = gen.sentence(&[POSITIVE_CARRIER]);
        train_raw.push((tokens, span, Label::Positive));
    }
    for _ in 0..neu_count {
        let (tokens, span) = gen.sentence(&[]);
        train_raw.push((tokens, span, Label::Neutral));
    }
    train_raw.shuffle(&mut gen.rng);
    let train: Vec<Instance> = train_raw
        .into_iter()
        .enumerate()
        .map(|(id, (tokens, aspect_span, label))| Instance {
            id,
            tokens,
            aspect_span,
            label,
        })
        .collect();

    // Test strata: a quarter inapparent-only, a quarter apparent-but-
    // irrelevant, the rest in-distribution.
    let stratum_a = (n_test / 4).max(1);
    let stratum_b = (n_test / 4).min(n_test - stratum_a);
    let rest = n_test - stratum_a - stratum_b;
    let rest_apparent = rest / 4;
    let rest_neg = rest / 4;
    let rest_pos = rest / 4;
    let rest_neu = rest - rest_apparent - rest_neg - rest_pos;

    let mut test_raw: Vec<(RawSentence, TestStratum)> = Vec::with_capacity(n_test);
    for _ in 0..stratum_a {
        let (tokens, span) = gen.sentence(&[&inapparent]);
        test_raw.push((
            (tokens, span, spec.inapparent_label),
            TestStratum::InapparentOnly,
        ));
    }
    for _ in 0..stratum_b {
        let (tokens, span) = gen.sentence(&[&apparent, POSITIVE_CARRIER]);
        test_raw.push((
            (tokens, span, Label::Positive),
            TestStratum::ApparentIrrelevant,
        ));
    }
    for _ in 0..rest_apparent {
        let (tokens, span) = gen.sentence(&[&apparent]);
        test_raw.push((
            (tokens, span, spec.apparent_label),
            TestStratum::InDistribution,
        ));
    }
    for _ in 0..rest_neg {
        let (tokens, span) = gen.sentence(&[NEGATIVE_CARRIER]);
        test_raw.push(((tokens, span, Label::Negative), TestStratum::InDistribution));
    }
    for _ in 0..rest_pos {
        let (tokens, span) = gen.sentence(&[POSITIVE_CARRIER]);
        test_raw.push(((tokens, span, Label::Positive), TestStratum::InDistribution));
    }
    for _ in 0..rest_neu {
        let (tokens, span) = gen.sentence(&[]);
        test_raw.push(((tokens, span, Label::Neutral), TestStratum::InDistribution));
    }
    test_raw.shuffle(&mut gen.rng);
    let mut test = Vec::with_capacity(n_test);
    let mut test_strata = Vec::with_capacity(n_test);
    for (id, ((tokens, aspect_span, label), stratum)) in test_raw.into_iter().enumerate() {
        test.push(Instance {
            id,
            tokens,
            aspect_span,
            label,
        });
        test_strata.push(stratum);
    }

    Ok(SynthCorpus {
        train,
        test,
        test_strata,
        spec: spec.clone(),
    })
}
