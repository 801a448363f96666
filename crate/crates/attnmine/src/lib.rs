//! Aspect-level sentiment classification with self-mined attention
//! supervision.
//!
//! The crate implements a memory-network classifier trained with
//! hand-derived gradients, an iterative mining procedure that extracts
//! influential context words per training instance via masked re-prediction
//! behind an attention-entropy gate, and a retraining objective that pins
//! the attention weights of mined positions to expected targets. Supporting
//! modules cover corpus ingestion, evaluation metrics with a paired
//! bootstrap test, and a synthetic corpus generator that plants the
//! frequency-skew failure mode the mining procedure is meant to fix.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod miner;
pub mod model;
pub mod nn;
pub mod objective;
pub mod synth;
pub mod train;

pub use error::{Error, Result};

// Re-exported because seeded `StdRng` streams appear throughout the public
// API.
pub use rand;
