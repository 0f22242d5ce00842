//! Initialize the embedding matrix from a pretrained word-vector text file
//! ("token f_1 ... f_dim" per line), with seeded random rows for tokens the
//! file does not cover.
//!
//! ```bash
//! cargo run --release --example load_word_vectors
//! ```

use std::io::Write;

use batm::corpus::encode;
use batm::corpus::{build_vocabulary, RawDocument};
use batm::embedding::{load_pretrained_vectors, lookup};

fn main() -> batm::Result<()> {
    let docs = vec![RawDocument {
        id: "d0".into(),
        text: "cat dog ship quasar".into(),
        label: "x".into(),
    }];
    let vocab = build_vocabulary(&docs, 1)?;

    // Four-dimensional vectors covering only part of the vocabulary.
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("vectors.txt");
    let mut file = std::fs::File::create(&path).expect("create vectors");
    writeln!(file, "cat 0.1 0.2 0.3 0.4").expect("write");
    writeln!(file, "dog 0.5 0.6 0.7 0.8").expect("write");
    writeln!(file, "ship -0.1 -0.2 -0.3 -0.4").expect("write");
    writeln!(file, "unrelated 9.0 9.0 9.0 9.0").expect("write");

    let embedding = load_pretrained_vectors::<f32>(&path, &vocab, 4, 1)?;
    println!(
        "coverage: {:.0}% of {} retained tokens found in the file",
        embedding.coverage() * 100.0,
        vocab.retained()
    );
    for token in ["cat", "dog", "ship", "quasar"] {
        let id = vocab.id_of(token).expect("in vocabulary");
        println!("{token:>7} (id {id}): {:?}", embedding.row(id));
    }
    println!(
        "PAD row stays zero: {:?}",
        embedding.row(batm::corpus::PAD_ID)
    );

    let seq = encode(&docs[0], &vocab, 6)?;
    let embedded = lookup(&seq, &embedding)?;
    println!(
        "lookup of the document gives a {}x{} matrix; masked tail rows are zero: {:?}",
        embedded.rows(),
        embedded.cols(),
        embedded.row(5)
    );
    Ok(())
}
