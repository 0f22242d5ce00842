//! Corpus ingestion: JSON-lines loading, tokenization, vocabulary
//! construction, fixed-length encoding, and deterministic splits.

use std::collections::HashMap;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, Stream};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
/// Number of reserved ids below the first corpus token id.
pub const RESERVED: usize = 2;

/// One labeled input document, text fields already concatenated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub label: String,
}

/// A single token plus whether it is made of letters only.
///
/// Non-alphabetic tokens (numbers, mixed strings) stay in the classifier
/// input but are filtered when topic descriptors are extracted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub alphabetic: bool,
}

pub fn is_alphabetic_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(char::is_alphabetic)
}

/// Canonical tokenizer: lowercase, then split into maximal alphanumeric runs.
/// Punctuation acts purely as a separator and never survives as a token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else if !current.is_empty() {
            tokens.push(finish_token(std::mem::take(&mut current)));
        }
    }
    if !current.is_empty() {
        tokens.push(finish_token(current));
    }
    tokens
}

fn finish_token(text: String) -> Token {
    let alphabetic = is_alphabetic_token(&text);
    Token { text, alphabetic }
}

/// Token/id bijection with reserved PAD and UNK slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    frequency: Vec<u64>,
}

impl Vocabulary {
    /// A vocabulary holding only PAD and UNK; every lookup maps to UNK.
    pub fn reserved_only() -> Self {
        Vocabulary {
            token_to_id: HashMap::new(),
            id_to_token: vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()],
            frequency: vec![0, 0],
        }
    }

    /// Total id count, including PAD and UNK.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // PAD and UNK always exist
    }

    /// Number of retained corpus tokens (ids >= 2).
    pub fn retained(&self) -> usize {
        self.len() - RESERVED
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id_of(token).unwrap_or(UNK_ID)
    }

    pub fn token_of(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn frequency_of(&self, id: u32) -> u64 {
        self.frequency[id as usize]
    }

    pub fn is_reserved(id: u32) -> bool {
        id < RESERVED as u32
    }
}

/// Count token frequencies and retain everything with count >= `min_count`.
/// Ids are assigned by descending frequency, ties broken lexicographically.
pub fn build_vocabulary(docs: &[RawDocument], min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be >= 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in docs {
        for token in tokenize(&doc.text) {
            *counts.entry(token.text).or_insert(0) += 1;
        }
    }
    let mut retained: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .collect();
    if retained.is_empty() {
        return Err(Error::Corpus(format!(
            "no token reaches min_count {min_count}; vocabulary would be empty"
        )));
    }
    retained.sort_by(|(ta, ca), (tb, cb)| cb.cmp(ca).then_with(|| ta.cmp(tb)));

    let mut id_to_token = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    let mut frequency = vec![0u64, 0u64];
    let mut token_to_id = HashMap::with_capacity(retained.len());
    for (token, count) in retained {
        token_to_id.insert(token.clone(), id_to_token.len() as u32);
        id_to_token.push(token);
        frequency.push(count);
    }
    Ok(Vocabulary {
        token_to_id,
        id_to_token,
        frequency,
    })
}

/// A document encoded to exactly `max_len` ids with a prefix-true mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub mask: Vec<bool>,
    pub effective_len: usize,
}

impl TokenSequence {
    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    /// Ids of the live (unmasked) prefix.
    pub fn live_ids(&self) -> &[u32] {
        &self.ids[..self.effective_len]
    }

    /// Build directly from live ids; test and fixture convenience.
    pub fn from_ids(live: &[u32], max_len: usize) -> Self {
        assert!(!live.is_empty() && live.len() <= max_len);
        let mut ids = live.to_vec();
        ids.resize(max_len, PAD_ID);
        let mut mask = vec![true; live.len()];
        mask.resize(max_len, false);
        TokenSequence {
            ids,
            mask,
            effective_len: live.len(),
        }
    }
}

/// Encode a document: truncate beyond `max_len`, map unknowns to UNK, pad the
/// tail. A document with no tokens at all is an error since attention over an
/// empty sequence is undefined.
pub fn encode(doc: &RawDocument, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    if max_len == 0 {
        return Err(Error::Config("max_len must be >= 1".into()));
    }
    let tokens = tokenize(&doc.text);
    if tokens.is_empty() {
        return Err(Error::Corpus(format!(
            "document {} tokenizes to zero tokens",
            doc.id
        )));
    }
    let live: Vec<u32> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.id_or_unk(&t.text))
        .collect();
    Ok(TokenSequence::from_ids(&live, max_len))
}

/// Label string to contiguous class-id mapping, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelMap {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut unique: Vec<String> = labels
            .into_iter()
            .collect::<HashSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect();
        unique.sort();
        let index = unique
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        LabelMap {
            labels: unique,
            index,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn class_of(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label_of(&self, class: u32) -> &str {
        &self.labels[class as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// One encoded, labeled document inside a split.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDocument {
    pub id: String,
    pub sequence: TokenSequence,
    pub class: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    pub train: Vec<EncodedDocument>,
    pub validation: Vec<EncodedDocument>,
    pub test: Vec<EncodedDocument>,
    pub label_map: LabelMap,
}

impl LabeledSplit {
    pub fn part(&self, name: SplitPart) -> &[EncodedDocument] {
        match name {
            SplitPart::Train => &self.train,
            SplitPart::Validation => &self.validation,
            SplitPart::Test => &self.test,
        }
    }

    pub fn total_len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl SplitPart {
    pub fn name(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Validation => "validation",
            SplitPart::Test => "test",
        }
    }
}

/// Deterministic shuffle by seed, then a contiguous partition by ratio.
/// Same seed, same documents: identical split.
pub fn split(
    docs: &[RawDocument],
    vocab: &Vocabulary,
    max_len: usize,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<LabeledSplit> {
    let (r_train, r_val, r_test) = ratios;
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 || (r_train + r_val + r_test - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split ratios must be non-negative and sum to 1, got {ratios:?}"
        )));
    }
    if docs.len() < 10 {
        return Err(Error::Corpus(format!(
            "need at least 10 documents to split, got {}",
            docs.len()
        )));
    }

    let label_map = LabelMap::from_labels(docs.iter().map(|d| d.label.as_str()));

    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut rng = rng_for(seed, Stream::CorpusSplit);
    order.shuffle(&mut rng);

    let n = docs.len() as f64;
    let n_train = (r_train * n).floor() as usize;
    let n_val = ((r_train + r_val) * n).floor() as usize - n_train;

    let mut encoded = Vec::with_capacity(docs.len());
    for &idx in &order {
        let doc = &docs[idx];
        let class = label_map
            .class_of(&doc.label)
            .expect("label map covers all labels");
        encoded.push(EncodedDocument {
            id: doc.id.clone(),
            sequence: encode(doc, vocab, max_len)?,
            class,
        });
    }
    let test = encoded.split_off(n_train + n_val);
    let validation = encoded.split_off(n_train);
    Ok(LabeledSplit {
        train: encoded,
        validation,
        test,
        label_map,
    })
}

/// Category alias map ("old_label<TAB>new_label" per line) used to merge
/// duplicate labels at load time.
#[derive(Debug, Clone, Default)]
pub struct AliasMap {
    map: HashMap<String, String>,
}

impl AliasMap {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        AliasMap {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut map = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (old, new) = trimmed.split_once('\t').ok_or_else(|| {
                Error::Config(format!(
                    "alias map line {}: expected 'old<TAB>new', got {trimmed:?}",
                    lineno + 1
                ))
            })?;
            map.insert(old.trim().to_string(), new.trim().to_string());
        }
        Ok(AliasMap { map })
    }

    pub fn apply<'a>(&'a self, label: &'a str) -> &'a str {
        self.map.get(label).map_or(label, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Field selection for JSON-lines records.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Text fields concatenated in this order with a single space.
    pub text_fields: Vec<String>,
    pub label_field: String,
    /// Record field holding a unique id; line numbers are used when absent.
    pub id_field: Option<String>,
    pub aliases: AliasMap,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            text_fields: vec!["headline".into(), "short_description".into()],
            label_field: "category".into(),
            id_field: None,
            aliases: AliasMap::default(),
        }
    }
}

#[derive(Debug)]
pub struct LoadOutcome {
    pub documents: Vec<RawDocument>,
    /// Malformed or duplicate lines skipped (counted warning).
    pub skipped: usize,
}

/// Load a JSON-lines corpus. Malformed lines are skipped and counted; a file
/// that yields zero valid records is an error.
pub fn load_jsonl(path: &Path, options: &LoadOptions) -> Result<LoadOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);

    let mut documents = Vec::new();
    let mut skipped = 0usize;
    let mut seen_ids = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line, lineno, options) {
            Some(doc) if seen_ids.insert(doc.id.clone()) => documents.push(doc),
            _ => skipped += 1,
        }
    }
    if documents.is_empty() {
        return Err(Error::Corpus(format!(
            "{}: no valid records ({} skipped)",
            path.display(),
            skipped
        )));
    }
    Ok(LoadOutcome { documents, skipped })
}

fn parse_record(line: &str, lineno: usize, options: &LoadOptions) -> Option<RawDocument> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    let obj = value.as_object()?;

    let mut text = String::new();
    for field in &options.text_fields {
        if let Some(part) = obj.get(field).and_then(|v| v.as_str()) {
            if !part.is_empty() {
                if !text.is_empty() {
                    text.push(' ');
                }
                text.push_str(part);
            }
        }
    }
    if text.is_empty() {
        return None;
    }

    let label = obj.get(&options.label_field)?.as_str()?;
    if label.is_empty() {
        return None;
    }
    let label = options.aliases.apply(label).to_string();

    let id = match &options.id_field {
        Some(field) => obj.get(field)?.as_str()?.to_string(),
        None => format!("doc-{lineno}"),
    };
    Some(RawDocument { id, text, label })
}

/// Drop documents that tokenize to nothing (they cannot be encoded); returns
/// the survivors and the number dropped.
pub fn drop_empty_documents(docs: Vec<RawDocument>) -> (Vec<RawDocument>, usize) {
    let before = docs.len();
    let kept: Vec<RawDocument> = docs
        .into_iter()
        .filter(|d| !tokenize(&d.text).is_empty())
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Split manifest record, one JSON line per document.
#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    pub split: SplitPart,
    pub class_id: u32,
}

pub fn write_manifest(split: &LabeledSplit, out: &mut impl Write) -> Result<()> {
    let parts = [
        (SplitPart::Train, &split.train),
        (SplitPart::Validation, &split.validation),
        (SplitPart::Test, &split.test),
    ];
    for (part, docs) in parts {
        for doc in docs.iter() {
            let record = ManifestRecord {
                id: doc.id.clone(),
                split: part,
                class_id: doc.class,
            };
            serde_json::to_writer(&mut *out, &record)?;
            out.write_all(b"\n")
                .map_err(|e| Error::io("<manifest>", e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str, label: &str) -> RawDocument {
        RawDocument {
            id: id.into(),
            text: text.into(),
            label: label.into(),
        }
    }

    #[test]
    fn tokenize_splits_on_punctuation_and_flags_numbers() {
        let tokens = tokenize("The U.S. won 3-0!");
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["the", "u", "s", "won", "3", "0"]);
        let non_alpha: Vec<&str> = tokens
            .iter()
            .filter(|t| !t.alphabetic)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(non_alpha, ["3", "0"]);
    }

    #[test]
    fn tokenize_empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ., !\t").is_empty());
    }

    #[test]
    fn tokenize_lowercases() {
        let tokens = tokenize("Hello hello HELLO");
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["hello", "hello", "hello"]);
    }

    #[test]
    fn vocabulary_applies_min_count() {
        let docs = vec![doc("1", "a b a", "x"), doc("2", "b c", "x")];
        let vocab = build_vocabulary(&docs, 2).unwrap();
        assert_eq!(vocab.retained(), 2);
        assert!(vocab.id_of("a").is_some());
        assert!(vocab.id_of("b").is_some());
        assert!(vocab.id_of("c").is_none());
        assert_eq!(vocab.frequency_of(vocab.id_of("a").unwrap()), 2);
    }

    #[test]
    fn vocabulary_min_count_one_keeps_all_tokens() {
        let docs = vec![doc("1", "x y z z", "l")];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        assert_eq!(vocab.retained(), 3);
    }

    #[test]
    fn vocabulary_ties_break_lexicographically() {
        let docs = vec![doc("1", "beta alpha", "l")];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        assert_eq!(vocab.id_of("alpha"), Some(2));
        assert_eq!(vocab.id_of("beta"), Some(3));
    }

    #[test]
    fn vocabulary_round_trips_ids() {
        let docs = vec![doc("1", "one two three two", "l")];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        for id in 0..vocab.len() as u32 {
            if !Vocabulary::is_reserved(id) {
                assert_eq!(vocab.id_of(vocab.token_of(id)), Some(id));
            }
        }
    }

    #[test]
    fn vocabulary_rejects_empty_result() {
        let docs = vec![doc("1", "a b", "l")];
        assert!(build_vocabulary(&docs, 5).is_err());
    }

    #[test]
    fn encode_pads_and_masks() {
        let docs = vec![doc("1", "a b c", "l")];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let seq = encode(&docs[0], &vocab, 5).unwrap();
        assert_eq!(seq.effective_len, 3);
        assert_eq!(seq.mask, [true, true, true, false, false]);
        assert_eq!(&seq.ids[3..], [PAD_ID, PAD_ID]);
    }

    #[test]
    fn encode_truncates_long_documents() {
        let text = vec!["tok"; 600].join(" ");
        let d = doc("1", &text, "l");
        let vocab = build_vocabulary(std::slice::from_ref(&d), 1).unwrap();
        let seq = encode(&d, &vocab, 512).unwrap();
        assert_eq!(seq.effective_len, 512);
        assert!(seq.mask.iter().all(|&m| m));
    }

    #[test]
    fn encode_maps_unknowns_to_unk() {
        let train = vec![doc("1", "known words only", "l")];
        let vocab = build_vocabulary(&train, 1).unwrap();
        let other = doc("2", "known mystery", "l");
        let seq = encode(&other, &vocab, 4).unwrap();
        assert_eq!(seq.ids[1], UNK_ID);
    }

    #[test]
    fn encode_rejects_empty_document() {
        let d = doc("1", "?!", "l");
        let vocab = build_vocabulary(&[doc("2", "word", "l")], 1).unwrap();
        assert!(encode(&d, &vocab, 4).is_err());
    }

    fn corpus_of(n: usize) -> Vec<RawDocument> {
        (0..n)
            .map(|i| {
                doc(
                    &format!("d{i}"),
                    &format!("token{} filler text", i % 7),
                    if i % 2 == 0 { "even" } else { "odd" },
                )
            })
            .collect()
    }

    #[test]
    fn split_is_deterministic() {
        let docs = corpus_of(100);
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let a = split(&docs, &vocab, 8, (0.8, 0.1, 0.1), 42).unwrap();
        let b = split(&docs, &vocab, 8, (0.8, 0.1, 0.1), 42).unwrap();
        assert_eq!(a, b);
        let c = split(&docs, &vocab, 8, (0.8, 0.1, 0.1), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_sizes_follow_ratios() {
        let docs = corpus_of(10);
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let s = split(&docs, &vocab, 8, (0.8, 0.1, 0.1), 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn split_rejects_tiny_corpora() {
        let docs = corpus_of(9);
        let vocab = build_vocabulary(&docs, 1).unwrap();
        assert!(split(&docs, &vocab, 8, (0.8, 0.1, 0.1), 1).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        let docs = corpus_of(57);
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let s = split(&docs, &vocab, 8, (0.8, 0.1, 0.1), 9).unwrap();
        let mut ids: Vec<&str> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .map(|d| d.id.as_str())
            .collect();
        ids.sort();
        let mut expected: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        expected.sort();
        assert_eq!(ids, expected);
    }

    #[test]
    fn load_jsonl_reads_valid_lines_in_order() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, r#"{{"headline":"first story","category":"A"}}"#).unwrap();
        writeln!(file, r#"{{"headline":"second story","category":"B"}}"#).unwrap();
        writeln!(file, r#"{{"headline":"third story","category":"A"}}"#).unwrap();
        let out = load_jsonl(file.path(), &LoadOptions::default()).unwrap();
        assert_eq!(out.documents.len(), 3);
        assert_eq!(out.skipped, 0);
        assert_eq!(out.documents[0].text, "first story");
        assert_eq!(out.documents[2].label, "A");
    }

    #[test]
    fn load_jsonl_skips_malformed_lines() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, r#"{{"headline":"good one","category":"A"}}"#).unwrap();
        writeln!(file, r#"{{"headline":"truncated"#).unwrap();
        writeln!(file, r#"{{"headline":"good two","category":"B"}}"#).unwrap();
        let out = load_jsonl(file.path(), &LoadOptions::default()).unwrap();
        assert_eq!(out.documents.len(), 2);
        assert_eq!(out.skipped, 1);
    }

    #[test]
    fn load_jsonl_fails_on_zero_valid_records() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "not json at all").unwrap();
        assert!(load_jsonl(file.path(), &LoadOptions::default()).is_err());
    }

    #[test]
    fn load_jsonl_applies_alias_map() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, r#"{{"headline":"a story","category":"ARTS"}}"#).unwrap();
        writeln!(
            file,
            r#"{{"headline":"b story","category":"CULTURE & ARTS"}}"#
        )
        .unwrap();
        writeln!(file, r#"{{"headline":"c story","category":"SPORTS"}}"#).unwrap();
        let aliases = AliasMap::from_pairs([("CULTURE & ARTS".to_string(), "ARTS".to_string())]);
        let options = LoadOptions {
            aliases,
            ..LoadOptions::default()
        };
        let out = load_jsonl(file.path(), &options).unwrap();
        let labels: HashSet<&str> = out.documents.iter().map(|d| d.label.as_str()).collect();
        assert_eq!(labels.len(), 2);
        assert!(labels.contains("ARTS") && labels.contains("SPORTS"));
    }

    #[test]
    fn alias_map_parses_tab_separated_lines() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "WORLDPOST\tWORLD NEWS").unwrap();
        writeln!(file, "# comment").unwrap();
        writeln!(file, "THE WORLDPOST\tWORLD NEWS").unwrap();
        let aliases = AliasMap::load(file.path()).unwrap();
        assert_eq!(aliases.len(), 2);
        assert_eq!(aliases.apply("WORLDPOST"), "WORLD NEWS");
        assert_eq!(aliases.apply("SPORTS"), "SPORTS");
    }

    #[test]
    fn manifest_lists_every_document_once() {
        let docs = corpus_of(12);
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let s = split(&docs, &vocab, 8, (0.8, 0.1, 0.1), 3).unwrap();
        let mut buf = Vec::new();
        write_manifest(&s, &mut buf).unwrap();
        let lines: Vec<ManifestRecord> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 12);
    }
}
