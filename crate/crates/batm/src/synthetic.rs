//! Deterministic synthetic corpora for examples, smoke tests, and trend
//! experiments at desk scale.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::corpus::RawDocument;
use crate::error::{Error, Result};
use crate::rng::{rng_for, Stream};

/// Class-indicative tokens injected into the two-class corpus.
pub const TWO_CLASS_INDICATORS: [&str; 2] = ["zebra", "quartz"];

const SYLLABLES: [&str; 15] = [
    "ba", "ce", "di", "fo", "gu", "ha", "ki", "lo", "mu", "ne", "pa", "re", "si", "to", "vu",
];

/// Alphabetic pseudo-words built from three syllables; none contain the
/// letters of the indicator tokens' distinctive characters ('z', 'q').
fn noise_vocab(count: usize) -> Vec<String> {
    let mut words = Vec::with_capacity(count);
    'outer: for a in SYLLABLES {
        for b in SYLLABLES {
            for c in SYLLABLES {
                words.push(format!("{a}{b}{c}"));
                if words.len() == count {
                    break 'outer;
                }
            }
        }
    }
    assert_eq!(words.len(), count, "not enough syllable combinations");
    words
}

/// Two balanced classes, each document carrying three copies of its class
/// indicator token among shared noise words. Linearly separable by
/// construction.
pub fn two_class_corpus(docs_per_class: usize, seed: u64) -> Vec<RawDocument> {
    let noise = noise_vocab(50);
    let mut rng = rng_for(seed, Stream::Synthetic);
    let mut docs = Vec::with_capacity(2 * docs_per_class);
    for (class, indicator) in TWO_CLASS_INDICATORS.iter().enumerate() {
        for i in 0..docs_per_class {
            let len = rng.random_range(12..=20usize);
            let mut tokens: Vec<&str> = (0..len)
                .map(|_| noise[rng.random_range(0..noise.len())].as_str())
                .collect();
            for _ in 0..3 {
                let pos = rng.random_range(0..tokens.len());
                tokens[pos] = indicator;
            }
            docs.push(RawDocument {
                id: format!("c{class}-{i:04}"),
                text: tokens.join(" "),
                label: format!("label{class}"),
            });
        }
    }
    docs
}

/// News-shaped corpus: `num_classes` classes with private topical vocabulary
/// mixed into a shared background vocabulary with a skewed frequency profile.
/// A slice of each class's words also leaks into the next class, so the task
/// stays learnable but never saturates; cross-entropy keeps pulling while an
/// entropy penalty reshapes the attention weights.
pub fn news_like_corpus(num_docs: usize, num_classes: usize, seed: u64) -> Vec<RawDocument> {
    assert!(num_classes >= 2);
    let shared = noise_vocab(120);
    // class vocabularies get a distinctive suffix per class
    let class_words: Vec<Vec<String>> = (0..num_classes)
        .map(|c| {
            noise_vocab(12)
                .into_iter()
                .map(|w| format!("{w}{}", "xyzwvu".chars().nth(c % 6).unwrap()))
                .collect()
        })
        .collect();
    let mut rng = rng_for(seed, Stream::Synthetic);
    let mut docs = Vec::with_capacity(num_docs);
    for i in 0..num_docs {
        let class = i % num_classes;
        let len = rng.random_range(40..=80usize);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let draw: f64 = rng.random();
            if draw < 0.18 {
                let words = &class_words[class];
                tokens.push(words[rng.random_range(0..words.len())].clone());
            } else if draw < 0.28 {
                // bleed-over from the neighboring class
                let words = &class_words[(class + 1) % num_classes];
                tokens.push(words[rng.random_range(0..words.len())].clone());
            } else {
                // skewed background: low indices are much more frequent
                let u: f64 = rng.random();
                let idx = ((u * u) * shared.len() as f64) as usize;
                tokens.push(shared[idx.min(shared.len() - 1)].clone());
            }
        }
        docs.push(RawDocument {
            id: format!("n{i:05}"),
            text: tokens.join(" "),
            label: format!("category{class:02}"),
        });
    }
    docs
}

/// Write documents as a JSON-lines corpus with the given field names.
pub fn write_jsonl(
    docs: &[RawDocument],
    path: &Path,
    text_field: &str,
    label_field: &str,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        let record = serde_json::json!({
            "id": doc.id,
            text_field: doc.text,
            label_field: doc.label,
        });
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}
