//! Train a small model, then read its first attention layer as topics:
//! document-token weight matrices, top-T descriptors per head, and entropy
//! diagnostics at the document and token level.
//!
//! ```bash
//! cargo run --release --example extract_topics
//! ```

use batm::corpus::{build_vocabulary, split, TokenSequence};
use batm::embedding::init_random;
use batm::synthetic::news_like_corpus;
use batm::topics::{build_topic_matrices, entropy_report, topic_descriptor};
use batm::training::{train, TrainConfig};

fn main() -> batm::Result<()> {
    let docs = news_like_corpus(400, 5, 7);
    let vocab = build_vocabulary(&docs, 1)?;
    let config = TrainConfig {
        heads: 5,
        embed_dim: 32,
        head_hidden_dim: 16,
        pool_hidden_dim: 16,
        max_len: 80,
        batch_size: 32,
        epochs: 3,
        base_lr: 1e-2,
        lambda: 1e-3,
        seed: 7,
        trainable_embeddings: true,
    };
    let data = split(&docs, &vocab, config.max_len, (0.8, 0.1, 0.1), config.seed)?;
    let embedding = init_random::<f32>(vocab.len(), config.embed_dim, config.seed);
    let outcome = train(&config, &data, embedding)?;
    println!(
        "trained {} heads, best validation accuracy {:.4}",
        config.heads, outcome.best_val_accuracy
    );

    let corpus: Vec<TokenSequence> = data
        .train
        .iter()
        .chain(&data.validation)
        .chain(&data.test)
        .map(|d| d.sequence.clone())
        .collect();

    let matrices = build_topic_matrices(&outcome.params, &corpus)?;
    println!("\ntop-8 descriptor terms per head:");
    for matrix in &matrices {
        let descriptor = topic_descriptor(matrix, 8, &vocab)?;
        let terms: Vec<String> = descriptor
            .terms
            .iter()
            .map(|(token, weight)| format!("{token} ({weight:.4})"))
            .collect();
        println!("  head {}: {}", descriptor.head, terms.join(", "));
    }

    let report = entropy_report(&outcome.params, &corpus)?;
    println!("\nentropy diagnostics over {} documents:", report.doc_count);
    println!(
        "  avg E_doc   {:.4} (per-document token-weight entropy)",
        report.avg_doc_entropy
    );
    println!(
        "  avg E_token {:.4} (across-head entropy of {} tokens, max ln K = {:.4})",
        report.avg_token_entropy,
        report.token_count,
        (config.heads as f64).ln()
    );
    println!(
        "  avg vocabulary-level head entropy {:.4} (max ln V = {:.4})",
        report.avg_vocab_entropy,
        (vocab.len() as f64).ln()
    );
    Ok(())
}
