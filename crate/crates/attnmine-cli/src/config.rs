//! Run configuration: a flat `key = value` file, overridable by
//! command-line flags of the same names.

use std::path::{Path, PathBuf};

use attnmine::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub test_corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub dim: usize,
    pub dropout: f64,
    pub trainable_embeddings: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub min_count: usize,
    /// Fraction of the training corpus held out for tuning and checkpoint
    /// selection; 0 disables the split.
    pub heldout_fraction: f64,
    /// Maximum mining iterations K.
    pub mining_k: usize,
    /// Entropy gate threshold.
    pub epsilon_alpha: f64,
    pub epochs_per_iteration: usize,
    pub exclude_aspect_from_mining: bool,
    /// Attention regularizer weight used by retraining.
    pub gamma: f64,
    pub bootstrap_trials: usize,
    /// Extra continue-training rounds appended by `train` (the
    /// compute-matched baseline).
    pub extra_rounds: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            test_corpus: None,
            embeddings: None,
            out_dir: PathBuf::from("out"),
            dim: 300,
            dropout: 0.2,
            trainable_embeddings: true,
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.001,
            seed: 42,
            min_count: 1,
            heldout_fraction: 0.2,
            mining_k: 5,
            epsilon_alpha: 3.0,
            epochs_per_iteration: 1,
            exclude_aspect_from_mining: false,
            gamma: 0.1,
            bootstrap_trials: 1000,
            extra_rounds: 0,
        }
    }
}

fn bad_value(key: &str, value: &str, err: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("config key '{key}': bad value '{value}': {err}"))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{}:{}: expected 'key = value', got '{line}'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Apply one key/value pair; an empty value clears optional path keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| bad_value(key, value, e))
        }
        fn opt_path(value: &str) -> Option<PathBuf> {
            if value.is_empty() {
                None
            } else {
                Some(PathBuf::from(value))
            }
        }
        match key {
            "corpus" => self.corpus = opt_path(value),
            "test_corpus" => self.test_corpus = opt_path(value),
            "embeddings" => self.embeddings = opt_path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "dim" => self.dim = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "trainable_embeddings" => self.trainable_embeddings = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "min_count" => self.min_count = parse(key, value)?,
            "heldout_fraction" => self.heldout_fraction = parse(key, value)?,
            "mining_k" => self.mining_k = parse(key, value)?,
            "epsilon_alpha" => self.epsilon_alpha = parse(key, value)?,
            "epochs_per_iteration" => self.epochs_per_iteration = parse(key, value)?,
            "exclude_aspect_from_mining" => self.exclude_aspect_from_mining = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "bootstrap_trials" => self.bootstrap_trials = parse(key, value)?,
            "extra_rounds" => self.extra_rounds = parse(key, value)?,
            other => {
                return Err(Error::InvalidInput(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// The training corpus path, required by most commands.
    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("no corpus configured (key 'corpus')".into()))
    }

    pub fn test_corpus_path(&self) -> Result<&Path> {
        self.test_corpus.as_deref().ok_or_else(|| {
            Error::InvalidInput("no test corpus configured (key 'test_corpus')".into())
        })
    }

    /// Validate ranges and the existence of every configured input path.
    /// Commands call this before doing any work.
    pub fn validate(&self) -> Result<()> {
        for (key, path) in [
            ("corpus", &self.corpus),
            ("test_corpus", &self.test_corpus),
            ("embeddings", &self.embeddings),
        ] {
            if let Some(path) = path {
                if !path.is_file() {
                    return Err(Error::InvalidInput(format!(
                        "config key '{key}': no such file: {}",
                        path.display()
                    )));
                }
            }
        }
        if self.dim == 0 {
            return Err(Error::InvalidInput("dim must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return Err(Error::InvalidInput(format!(
                "heldout_fraction {} outside [0, 1)",
                self.heldout_fraction
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput(
                "epochs and batch_size must be >= 1".into(),
            ));
        }
        if self.mining_k == 0 || self.epochs_per_iteration == 0 {
            return Err(Error::InvalidInput(
                "mining_k and epochs_per_iteration must be >= 1".into(),
            ));
        }
        if self.epsilon_alpha <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "epsilon_alpha {} must be > 0",
                self.epsilon_alpha
            )));
        }
        if self.bootstrap_trials == 0 {
            return Err(Error::InvalidInput("bootstrap_trials must be >= 1".into()));
        }
        Ok(())
    }
}
