use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use attnmine::corpus::Label;
use attnmine::synth::PatternSpec;
use attnmine_cli::commands;
use attnmine_cli::config::RunConfig;

/// Aspect-level sentiment classification with self-mined attention
/// supervision.
#[derive(Debug, Parser)]
#[command(name = "attnmine", version, disable_help_subcommand = true)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Global options; each overrides the config-file key of the same name.
#[derive(Debug, Args)]
struct Overrides {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    test_corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    dropout: Option<f64>,
    #[arg(long, global = true)]
    trainable_embeddings: Option<bool>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    min_count: Option<usize>,
    #[arg(long, global = true)]
    heldout_fraction: Option<f64>,
    /// Maximum mining iterations K.
    #[arg(long, global = true)]
    mining_k: Option<usize>,
    /// Entropy gate threshold for extraction.
    #[arg(long, global = true)]
    epsilon_alpha: Option<f64>,
    #[arg(long, global = true)]
    epochs_per_iteration: Option<usize>,
    #[arg(long, global = true)]
    exclude_aspect_from_mining: Option<bool>,
    /// Attention regularizer weight for retraining.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    bootstrap_trials: Option<usize>,
    /// Extra continue-training rounds for the compute-matched baseline.
    #[arg(long, global = true)]
    extra_rounds: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the baseline classifier and write checkpoint + training log.
    Train,
    /// Mine attention supervision from a trained checkpoint.
    Mine {
        /// Trained checkpoint to mine from.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Retrain with the supervision-augmented objective.
    Retrain {
        /// Supervision dump produced by `mine`.
        #[arg(long)]
        supervision: PathBuf,
        /// Warm-start from this checkpoint instead of a fresh initialization.
        #[arg(long)]
        warm_start: Option<PathBuf>,
    },
    /// Evaluate checkpoint(s) on the test corpus.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Baseline checkpoint for the paired bootstrap test.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// `id,stratum` CSV over the test ids; adds per-stratum report rows.
        #[arg(long)]
        strata: Option<PathBuf>,
    },
    /// Mine + retrain across a range of entropy thresholds, reporting
    /// held-out scores per value.
    SweepEpsilon {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        eps_from: f64,
        #[arg(long, default_value_t = 7.0)]
        eps_to: f64,
        #[arg(long, default_value_t = 1.0)]
        eps_step: f64,
    },
    /// Export per-token attention weights as HTML + CSV.
    ExportHeatmap {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Corpus to render (defaults to the configured training corpus).
        #[arg(long)]
        target: Option<PathBuf>,
        /// Render masked views from this supervision dump.
        #[arg(long)]
        supervision: Option<PathBuf>,
        /// Render at most this many instances.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Generate a synthetic corpus with planted frequency-skewed patterns.
    GenSynth {
        #[arg(long, default_value_t = 500)]
        n_train: usize,
        #[arg(long, default_value_t = 200)]
        n_test: usize,
        #[arg(long, default_value = "small")]
        apparent_word: String,
        #[arg(long, default_value = "negative")]
        apparent_label: String,
        #[arg(long, default_value_t = 30)]
        apparent_count: usize,
        #[arg(long, default_value = "crowded")]
        inapparent_word: String,
        #[arg(long, default_value = "negative")]
        inapparent_label: String,
        #[arg(long, default_value_t = 3)]
        inapparent_count: usize,
        #[arg(long, default_value_t = 40)]
        distractor_vocab: usize,
        #[arg(long, default_value_t = 8)]
        min_len: usize,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
        #[arg(long, default_value_t = 1.0)]
        cooccurrence_rate: f64,
    },
}

fn build_config(overrides: &Overrides) -> attnmine::Result<RunConfig> {
    let mut config = match &overrides.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),* $(,)?) => {
            $(if let Some(v) = &overrides.$field {
                config.$field = v.clone().into();
            })*
        };
    }
    apply!(
        out_dir,
        seed,
        dim,
        dropout,
        trainable_embeddings,
        epochs,
        batch_size,
        learning_rate,
        min_count,
        heldout_fraction,
        mining_k,
        epsilon_alpha,
        epochs_per_iteration,
        exclude_aspect_from_mining,
        gamma,
        bootstrap_trials,
        extra_rounds,
    );
    if let Some(path) = &overrides.corpus {
        config.corpus = Some(path.clone());
    }
    if let Some(path) = &overrides.test_corpus {
        config.test_corpus = Some(path.clone());
    }
    if let Some(path) = &overrides.embeddings {
        config.embeddings = Some(path.clone());
    }
    Ok(config)
}

fn parse_label(value: &str) -> attnmine::Result<Label> {
    match value {
        "positive" => Ok(Label::Positive),
        "negative" => Ok(Label::Negative),
        "neutral" => Ok(Label::Neutral),
        other => Err(attnmine::Error::InvalidInput(format!(
            "unknown label '{other}' (expected positive/negative/neutral)"
        ))),
    }
}

fn run(cli: Cli) -> attnmine::Result<()> {
    let config = build_config(&cli.overrides)?;
    match cli.command {
        Command::Train => commands::cmd_train(&config),
        Command::Mine { checkpoint } => commands::cmd_mine(&config, &checkpoint),
        Command::Retrain {
            supervision,
            warm_start,
        } => commands::cmd_retrain(&config, &supervision, warm_start.as_deref()),
        Command::Eval {
            checkpoint,
            baseline,
            strata,
        } => commands::cmd_eval(&config, &checkpoint, baseline.as_deref(), strata.as_deref()),
        Command::SweepEpsilon {
            checkpoint,
            eps_from,
            eps_to,
            eps_step,
        } => commands::cmd_sweep_epsilon(&config, &checkpoint, eps_from, eps_to, eps_step),
        Command::ExportHeatmap {
            checkpoint,
            target,
            supervision,
            limit,
        } => commands::cmd_export_heatmap(
            &config,
            &checkpoint,
            target.as_deref(),
            supervision.as_deref(),
            limit,
        ),
        Command::GenSynth {
            n_train,
            n_test,
            apparent_word,
            apparent_label,
            apparent_count,
            inapparent_word,
            inapparent_label,
            inapparent_count,
            distractor_vocab,
            min_len,
            max_len,
            cooccurrence_rate,
        } => {
            let spec = PatternSpec {
                apparent_word,
                apparent_label: parse_label(&apparent_label)?,
                apparent_count,
                inapparent_word,
                inapparent_label: parse_label(&inapparent_label)?,
                inapparent_count,
                distractor_vocab,
                min_len,
                max_len,
                cooccurrence_rate,
                seed: config.seed,
            };
            commands::cmd_gen_synth(&config, &spec, n_train, n_test)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not errors; anything else is a
            // validation failure
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_validation() { 1 } else { 2 })
        }
    }
}
