//! Train the two-layer attention classifier on a synthetic two-class corpus
//! and evaluate it on the held-out test split.
//!
//! ```bash
//! cargo run --release --example train_classifier
//! ```

use batm::corpus::{build_vocabulary, split};
use batm::embedding::init_random;
use batm::synthetic::two_class_corpus;
use batm::training::{evaluate, train, TrainConfig};

fn main() -> batm::Result<()> {
    let docs = two_class_corpus(100, 1);
    let vocab = build_vocabulary(&docs, 1)?;

    let config = TrainConfig {
        heads: 2,
        embed_dim: 16,
        head_hidden_dim: 8,
        pool_hidden_dim: 8,
        max_len: 24,
        batch_size: 32,
        epochs: 5,
        base_lr: 5e-2,
        lambda: 0.0,
        seed: 1,
        trainable_embeddings: true,
    };
    let data = split(&docs, &vocab, config.max_len, (0.8, 0.1, 0.1), config.seed)?;
    let embedding = init_random::<f32>(vocab.len(), config.embed_dim, config.seed);

    let outcome = train(&config, &data, embedding)?;
    println!("epoch |     lr   | train loss | val acc | val macro-F1 | avg E_doc");
    for r in &outcome.log {
        println!(
            "{:5} | {:.2e} | {:10.4} | {:7.4} | {:12.4} | {:9.4}",
            r.epoch, r.lr, r.train_loss, r.val_accuracy, r.val_macro_f1, r.avg_doc_entropy
        );
    }
    println!(
        "best epoch {} with validation accuracy {:.4}",
        outcome.best_epoch, outcome.best_val_accuracy
    );

    let metrics = evaluate(&outcome.params, &data.test, data.label_map.num_classes())?;
    println!(
        "test: accuracy {:.4}, macro-F1 {:.4} over {} documents",
        metrics.accuracy, metrics.macro_f1, metrics.examples
    );
    Ok(())
}
