//! Sweep the entropy-constraint weight and tabulate the trade-off between
//! classification performance and attention concentration.
//!
//! ```bash
//! cargo run --release --example lambda_sweep
//! ```

use batm::corpus::{build_vocabulary, split, TokenSequence};
use batm::embedding::init_random;
use batm::synthetic::news_like_corpus;
use batm::topics::entropy_report;
use batm::training::{evaluate, train, TrainConfig};

fn main() -> batm::Result<()> {
    let docs = news_like_corpus(1000, 5, 1);
    let vocab = build_vocabulary(&docs, 1)?;
    let base = TrainConfig {
        heads: 10,
        embed_dim: 50,
        head_hidden_dim: 16,
        pool_hidden_dim: 16,
        max_len: 80,
        batch_size: 32,
        epochs: 3,
        base_lr: 1e-2,
        lambda: 0.0,
        seed: 1,
        trainable_embeddings: true,
    };
    let data = split(&docs, &vocab, base.max_len, (0.8, 0.1, 0.1), base.seed)?;
    let all: Vec<TokenSequence> = data
        .train
        .iter()
        .chain(&data.validation)
        .chain(&data.test)
        .map(|d| d.sequence.clone())
        .collect();

    println!("lambda,accuracy,macro_f,avg_e_doc,avg_e_token");
    for lambda in [0.0, 1e-4, 1e-3, 1e-2] {
        let mut config = base.clone();
        config.lambda = lambda;
        let embedding = init_random::<f32>(vocab.len(), config.embed_dim, config.seed);
        let outcome = train(&config, &data, embedding)?;
        let metrics = evaluate(&outcome.params, &data.test, data.label_map.num_classes())?;
        let report = entropy_report(&outcome.params, &all)?;
        println!(
            "{lambda},{},{},{},{}",
            metrics.accuracy, metrics.macro_f1, report.avg_doc_entropy, report.avg_token_entropy
        );
    }
    Ok(())
}
