//! Bi-level attention topical model: an explainable news classifier built
//! from two stacked additive attention layers.
//!
//! The first layer runs K attention heads over token embeddings; each head's
//! weight profile over a corpus reads as a topic. The second layer attends
//! over the K head vectors to weight topics per document, and a linear
//! softmax layer classifies. Training minimizes cross-entropy plus an
//! optional entropy penalty that concentrates each head on few tokens.
//! Everything is implemented from scratch: exact reverse-mode gradients with
//! a finite-difference verifier, Adam with per-epoch learning-rate halving,
//! topic descriptor extraction, entropy diagnostics, and C_v coherence
//! scoring over sliding-window co-occurrence counts.
//!
//! ## Examples
//!
//! One runnable example per capability:
//!
//! ```bash
//! cargo run --release --example prepare_corpus    # JSONL -> vocabulary + splits
//! cargo run --release --example train_classifier  # train + evaluate on a synthetic corpus
//! cargo run --release --example gradient_check    # verify gradients against finite differences
//! cargo run --release --example extract_topics    # topic descriptors + entropy reports
//! cargo run --release --example score_coherence   # C_v coherence of extracted topics
//! cargo run --release --example lambda_sweep      # entropy-constraint sweep, CSV output
//! ```
//!
//! The `batm` binary wraps the same capabilities as subcommands (`prepare`,
//! `train`, `eval`, `topics`, `coherence`, `entropy-report`, `gradcheck`,
//! `lambda-sweep`); see the README for flags and file formats.

pub mod cli;
pub mod coherence;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod model;
pub mod num;
pub mod rng;
pub mod synthetic;
pub mod topics;
pub mod training;

pub use error::{Error, Result};
