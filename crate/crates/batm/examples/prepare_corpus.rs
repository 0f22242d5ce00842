//! Corpus preparation: JSON-lines loading with label aliasing, tokenization,
//! vocabulary construction, and a deterministic train/validation/test split.
//!
//! ```bash
//! cargo run --release --example prepare_corpus
//! ```

use std::io::Write;

use batm::corpus::{build_vocabulary, encode, load_jsonl, split, tokenize, AliasMap, LoadOptions};

fn main() -> batm::Result<()> {
    // A small corpus file; real runs point corpus_path at a dataset like the
    // HuffPost news category dump (one JSON object per line).
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("news.jsonl");
    let mut file = std::fs::File::create(&path).expect("create corpus");
    let records = [
        r#"{"headline":"Team wins the cup final 3-0","category":"SPORTS"}"#,
        r#"{"headline":"Markets rally after rate decision","category":"BUSINESS"}"#,
        r#"{"headline":"Gallery opens retrospective exhibit","category":"ARTS"}"#,
        r#"{"headline":"Museum show draws record crowds","category":"CULTURE & ARTS"}"#,
        r#"{"headline":"Striker scores twice in derby","category":"SPORTS"}"#,
        r#"{"headline":"Quarterly earnings beat forecasts","category":"BUSINESS"}"#,
        r#"{"headline":"Critics praise the new painting wing","category":"ARTS"}"#,
        r#"{"headline":"Coach announces squad for qualifiers","category":"SPORTS"}"#,
        r#"{"headline":"Startup raises funding round","category":"BUSINESS"}"#,
        r#"{"headline":"Festival lineup announced downtown","category":"CULTURE & ARTS"}"#,
        r#"{"headline":"not a label"#, // malformed: skipped with a warning
    ];
    for line in records {
        writeln!(file, "{line}").expect("write corpus");
    }

    // Merge duplicated categories through an alias map, as one would merge
    // the overlapping labels of a real news dump.
    let aliases = AliasMap::from_pairs([("CULTURE & ARTS".to_string(), "ARTS".to_string())]);
    let options = LoadOptions {
        aliases,
        ..LoadOptions::default()
    };
    let outcome = load_jsonl(&path, &options)?;
    println!(
        "loaded {} documents ({} lines skipped)",
        outcome.documents.len(),
        outcome.skipped
    );

    let tokens = tokenize("The U.S. won 3-0!");
    println!(
        "tokenizer: \"The U.S. won 3-0!\" -> {:?}",
        tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>()
    );

    let vocab = build_vocabulary(&outcome.documents, 1)?;
    println!(
        "vocabulary: {} ids ({} retained tokens + PAD/UNK)",
        vocab.len(),
        vocab.retained()
    );

    let seq = encode(&outcome.documents[0], &vocab, 12)?;
    println!(
        "first document encodes to {:?} (effective length {})",
        seq.ids, seq.effective_len
    );

    let data = split(&outcome.documents, &vocab, 12, (0.8, 0.1, 0.1), 42)?;
    println!(
        "split sizes: {}/{}/{} train/validation/test over {} labels: {:?}",
        data.train.len(),
        data.validation.len(),
        data.test.len(),
        data.label_map.num_classes(),
        data.label_map.labels()
    );

    let mut manifest = Vec::new();
    batm::corpus::write_manifest(&data, &mut manifest)?;
    println!("--- manifest ---");
    print!("{}", String::from_utf8_lossy(&manifest));
    Ok(())
}
