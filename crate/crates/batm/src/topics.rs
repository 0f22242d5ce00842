//! Post-training explainability: per-head document-token weight matrices,
//! top-T topic descriptors, and entropy diagnostics at the document and
//! token level.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{is_alphabetic_token, TokenSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{forward, ModelParams};
use crate::num::Scalar;
use crate::training::doc_entropy;

/// Sparse D x V matrix for one head: entry (d, v) is the attention weight the
/// head assigned to token v within document d, with repeated tokens' weights
/// summed. Every row sums to 1 (it is a reshaped token-weight distribution).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMatrix {
    pub head: usize,
    pub doc_count: usize,
    pub vocab_size: usize,
    /// Per document: (token id, summed weight) sorted by token id.
    rows: Vec<Vec<(u32, f64)>>,
}

impl TopicMatrix {
    /// Build from raw rows; validates ordering and bounds.
    pub fn from_rows(head: usize, vocab_size: usize, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        for row in &rows {
            for window in row.windows(2) {
                if window[0].0 >= window[1].0 {
                    return Err(Error::Topics(
                        "topic matrix rows must be sorted by token id".into(),
                    ));
                }
            }
            if row
                .iter()
                .any(|&(id, w)| id as usize >= vocab_size || w < 0.0)
            {
                return Err(Error::Topics(
                    "topic matrix entry out of range or negative".into(),
                ));
            }
        }
        Ok(TopicMatrix {
            head,
            doc_count: rows.len(),
            vocab_size,
            rows,
        })
    }

    pub fn row(&self, doc: usize) -> &[(u32, f64)] {
        &self.rows[doc]
    }

    pub fn row_sum(&self, doc: usize) -> f64 {
        self.rows[doc].iter().map(|&(_, w)| w).sum()
    }

    /// Column sums over all documents, dense over the vocabulary.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.vocab_size];
        for row in &self.rows {
            for &(id, w) in row {
                sums[id as usize] += w;
            }
        }
        sums
    }

    /// Column means: sums divided by the document count (every document
    /// participates in the average, not just those containing the token).
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = self.column_sums();
        let d = self.doc_count as f64;
        for s in sums.iter_mut() {
            *s /= d;
        }
        sums
    }

    /// Sparse triplet export: `doc_id,token_id,weight` CSV lines.
    pub fn write_triplets(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "doc_id,token_id,weight").map_err(|e| Error::io("<triplets>", e))?;
        for (doc, row) in self.rows.iter().enumerate() {
            for &(id, w) in row {
                writeln!(out, "{doc},{id},{w}").map_err(|e| Error::io("<triplets>", e))?;
            }
        }
        Ok(())
    }
}

/// Run the model over the corpus and scatter-add each head's token weights
/// into its document-token matrix. Documents are processed in parallel; each
/// owns its row, so the result is independent of thread count.
pub fn build_topic_matrices<S: Scalar>(
    params: &ModelParams<S>,
    corpus: &[TokenSequence],
) -> Result<Vec<TopicMatrix>> {
    let vocab_size = params.vocab_size();
    for seq in corpus {
        if seq.live_ids().iter().any(|&id| id as usize >= vocab_size) {
            return Err(Error::Topics(
                "corpus was encoded with a different vocabulary".into(),
            ));
        }
    }
    let k = params.head_count();
    let per_doc: Vec<Vec<Vec<(u32, f64)>>> = corpus
        .par_iter()
        .map(|seq| -> Result<Vec<Vec<(u32, f64)>>> {
            let record = forward(seq, params)?;
            let mut rows = Vec::with_capacity(k);
            for alpha in &record.token_weights {
                let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
                for (pos, &id) in seq.live_ids().iter().enumerate() {
                    *acc.entry(id).or_insert(0.0) += alpha[pos].to_f64();
                }
                rows.push(acc.into_iter().collect());
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut matrices: Vec<TopicMatrix> = (0..k)
        .map(|head| TopicMatrix {
            head,
            doc_count: corpus.len(),
            vocab_size,
            rows: Vec::with_capacity(corpus.len()),
        })
        .collect();
    for doc_rows in per_doc {
        for (head, row) in doc_rows.into_iter().enumerate() {
            matrices[head].rows.push(row);
        }
    }
    Ok(matrices)
}

/// Top-T descriptor terms of one head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDescriptor {
    pub head: usize,
    /// (token, mean weight) sorted by weight descending, ties broken
    /// lexicographically; alphabetic tokens only.
    pub terms: Vec<(String, f64)>,
}

/// Rank tokens by column mean. PAD, UNK, and non-alphabetic tokens are
/// filtered here; the matrices keep everything. When fewer than `top_t`
/// tokens survive, all survivors are returned (callers may warn).
pub fn topic_descriptor(
    matrix: &TopicMatrix,
    top_t: usize,
    vocab: &Vocabulary,
) -> Result<TopicDescriptor> {
    if top_t == 0 {
        return Err(Error::Topics("top_t must be >= 1".into()));
    }
    let means = matrix.column_means();
    let mut candidates: Vec<(String, f64)> = Vec::new();
    for (id, &mean) in means.iter().enumerate() {
        if mean <= 0.0 || Vocabulary::is_reserved(id as u32) {
            continue;
        }
        let token = vocab.token_of(id as u32);
        if is_alphabetic_token(token) {
            candidates.push((token.to_string(), mean));
        }
    }
    candidates.sort_by(|(ta, wa), (tb, wb)| {
        wb.partial_cmp(wa)
            .expect("weights are finite")
            .then_with(|| ta.cmp(tb))
    });
    candidates.truncate(top_t);
    Ok(TopicDescriptor {
        head: matrix.head,
        terms: candidates,
    })
}

/// Entropy across heads of a token's column means, normalized to a
/// distribution; `None` when no head ever attended to the token.
pub fn token_entropy(matrices: &[TopicMatrix], token: u32) -> Option<f64> {
    let mut weights: Vec<f64> = matrices
        .iter()
        .map(|m| {
            m.rows
                .iter()
                .map(|row| {
                    row.binary_search_by_key(&token, |&(id, _)| id)
                        .map(|i| row[i].1)
                        .unwrap_or(0.0)
                })
                .sum::<f64>()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut entropy = 0.0;
    for w in weights.iter_mut() {
        let p = *w / total;
        if p > 0.0 {
            entropy -= p * p.ln();
        }
    }
    Some(entropy)
}

/// Corpus-level entropy diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Mean over (document, head) of the token-weight entropy.
    pub avg_doc_entropy: f64,
    /// Mean over present tokens of the across-head entropy (normalized
    /// distribution over heads, so at most ln K).
    pub avg_token_entropy: f64,
    /// Per-head mean document entropy.
    pub per_head_doc_entropy: Vec<f64>,
    /// Per-head entropy of the head's mean weight distribution over the
    /// vocabulary (at most ln V); a corpus-level concentration measure on a
    /// scale independent of the head count.
    pub per_head_vocab_entropy: Vec<f64>,
    pub avg_vocab_entropy: f64,
    pub doc_count: usize,
    /// Tokens with nonzero attention mass anywhere.
    pub token_count: usize,
}

/// One pass over the corpus: document entropies from the attention weights,
/// token entropies from the assembled topic matrices.
pub fn entropy_report<S: Scalar>(
    params: &ModelParams<S>,
    corpus: &[TokenSequence],
) -> Result<EntropyReport> {
    if corpus.is_empty() {
        return Err(Error::Topics("entropy report over an empty corpus".into()));
    }
    let k = params.head_count();
    let per_doc: Vec<Vec<f64>> = corpus
        .par_iter()
        .map(|seq| -> Result<Vec<f64>> {
            let record = forward(seq, params)?;
            Ok(record
                .token_weights
                .iter()
                .map(|alpha| doc_entropy(alpha, &record.mask).to_f64())
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut per_head_doc_entropy = vec![0.0f64; k];
    for doc in &per_doc {
        for (slot, h) in per_head_doc_entropy.iter_mut().zip(doc) {
            *slot += h;
        }
    }
    for slot in per_head_doc_entropy.iter_mut() {
        *slot /= corpus.len() as f64;
    }
    let avg_doc_entropy = per_head_doc_entropy.iter().sum::<f64>() / k as f64;

    let matrices = build_topic_matrices(params, corpus)?;
    let per_head_sums: Vec<Vec<f64>> = matrices.iter().map(TopicMatrix::column_sums).collect();

    let vocab_size = params.vocab_size();
    let mut token_entropies_sum = 0.0f64;
    let mut token_count = 0usize;
    for token in 0..vocab_size {
        let total: f64 = per_head_sums.iter().map(|sums| sums[token]).sum();
        if total <= 0.0 {
            continue;
        }
        let mut entropy = 0.0;
        for sums in &per_head_sums {
            let p = sums[token] / total;
            if p > 0.0 {
                entropy -= p * p.ln();
            }
        }
        token_entropies_sum += entropy;
        token_count += 1;
    }
    let avg_token_entropy = if token_count == 0 {
        0.0
    } else {
        token_entropies_sum / token_count as f64
    };

    let per_head_vocab_entropy: Vec<f64> = per_head_sums
        .iter()
        .map(|sums| {
            let total: f64 = sums.iter().sum();
            let mut entropy = 0.0;
            for &s in sums {
                let p = s / total;
                if p > 0.0 {
                    entropy -= p * p.ln();
                }
            }
            entropy
        })
        .collect();
    let avg_vocab_entropy = per_head_vocab_entropy.iter().sum::<f64>() / k as f64;

    Ok(EntropyReport {
        avg_doc_entropy,
        avg_token_entropy,
        per_head_doc_entropy,
        per_head_vocab_entropy,
        avg_vocab_entropy,
        doc_count: corpus.len(),
        token_count,
    })
}
