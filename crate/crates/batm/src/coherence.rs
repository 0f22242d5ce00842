//! C_v topic coherence: boolean sliding-window co-occurrence counts, NPMI
//! context vectors over a one-set segmentation, cosine similarity, and an
//! arithmetic mean per topic.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topics::TopicDescriptor;

pub const DEFAULT_WINDOW: usize = 110;
pub const DEFAULT_EPS: f64 = 1e-12;

/// Boolean sliding-window statistics restricted to a tracked token set:
/// a token counts at most once per window.
#[derive(Debug, Clone)]
pub struct WindowCounts {
    pub window_size: usize,
    pub total_windows: u64,
    index: HashMap<String, usize>,
    freq: Vec<u64>,
    /// Joint counts keyed by (low, high) tracked-token index pairs.
    joint: HashMap<(usize, usize), u64>,
}

impl WindowCounts {
    pub fn frequency(&self, token: &str) -> u64 {
        self.index.get(token).map_or(0, |&i| self.freq[i])
    }

    /// Windows containing both tokens; `joint(t, t) == frequency(t)`.
    pub fn joint(&self, a: &str, b: &str) -> u64 {
        let (Some(&ia), Some(&ib)) = (self.index.get(a), self.index.get(b)) else {
            return 0;
        };
        if ia == ib {
            return self.freq[ia];
        }
        let key = (ia.min(ib), ia.max(ib));
        self.joint.get(&key).copied().unwrap_or(0)
    }
}

/// Per-document partial counts: windows, per-token frequencies, joint pairs.
type PartialCounts = (u64, Vec<u64>, HashMap<(usize, usize), u64>);

/// Slide a window of `window_size` tokens (stride 1) over every document;
/// documents shorter than the window form a single window. Windows never
/// span document boundaries.
pub fn build_window_counts(
    docs: &[Vec<String>],
    tracked: &[String],
    window_size: usize,
) -> Result<WindowCounts> {
    if window_size == 0 {
        return Err(Error::Coherence("window size must be >= 1".into()));
    }
    if docs.is_empty() {
        return Err(Error::Coherence("empty corpus".into()));
    }
    let mut index = HashMap::new();
    for token in tracked {
        let next = index.len();
        index.entry(token.clone()).or_insert(next);
    }
    let tracked_count = index.len();

    // Integer counts merge order-free; documents can be processed in parallel.
    let partials: Vec<PartialCounts> = docs
        .par_iter()
        .map(|tokens| {
            let mut windows = 0u64;
            let mut freq = vec![0u64; tracked_count];
            let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
            if tokens.is_empty() {
                return (windows, freq, joint);
            }
            let tracked_positions: Vec<Option<usize>> = tokens
                .iter()
                .map(|t| index.get(t.as_str()).copied())
                .collect();
            let starts = tokens.len().saturating_sub(window_size) + 1;
            let mut present: Vec<usize> = Vec::new();
            for start in 0..starts {
                windows += 1;
                present.clear();
                let end = (start + window_size).min(tokens.len());
                for idx in tracked_positions[start..end].iter().flatten() {
                    if !present.contains(idx) {
                        present.push(*idx);
                    }
                }
                present.sort_unstable();
                for (i, &a) in present.iter().enumerate() {
                    freq[a] += 1;
                    for &b in &present[i + 1..] {
                        *joint.entry((a, b)).or_insert(0) += 1;
                    }
                }
            }
            (windows, freq, joint)
        })
        .collect();

    let mut total_windows = 0u64;
    let mut freq = vec![0u64; tracked_count];
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    for (w, f, j) in partials {
        total_windows += w;
        for (dst, src) in freq.iter_mut().zip(f) {
            *dst += src;
        }
        for (key, count) in j {
            *joint.entry(key).or_insert(0) += count;
        }
    }
    Ok(WindowCounts {
        window_size,
        total_windows,
        index,
        freq,
        joint,
    })
}

/// Normalized pointwise mutual information from window probabilities:
/// `ln((p_joint + eps) / (p_i p_j)) / (-ln(p_joint + eps))`.
pub fn npmi(counts: &WindowCounts, a: &str, b: &str, eps: f64) -> Result<f64> {
    let w = counts.total_windows as f64;
    let fa = counts.frequency(a);
    let fb = counts.frequency(b);
    if fa == 0 || fb == 0 {
        return Err(Error::Coherence(format!(
            "npmi of zero-frequency word ({a:?} or {b:?})"
        )));
    }
    let p_a = fa as f64 / w;
    let p_b = fb as f64 / w;
    let p_joint = counts.joint(a, b) as f64 / w;
    Ok(((p_joint + eps) / (p_a * p_b)).ln() / -((p_joint + eps).ln()))
}

/// C_v of one topic word set.
#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    pub value: f64,
    /// Words whose NPMI context vector was all-zero (contributed cosine 0).
    pub zero_context_words: Vec<String>,
}

/// One-set segmentation: each word's NPMI context vector over the whole
/// topic word set is compared by cosine against the elementwise sum of all
/// context vectors; C_v is the arithmetic mean of the cosines.
pub fn cv_score(words: &[String], counts: &WindowCounts, eps: f64) -> Result<CvScore> {
    let usable: Vec<&String> = words
        .iter()
        .filter(|word| counts.frequency(word) > 0)
        .collect();
    if usable.len() < 2 {
        return Err(Error::Coherence(format!(
            "need at least 2 topic words with nonzero window frequency, have {}",
            usable.len()
        )));
    }
    let vectors: Vec<Vec<f64>> = usable
        .iter()
        .map(|w| {
            usable
                .iter()
                .map(|v| npmi(counts, w, v, eps))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let dim = usable.len();
    let mut set_vector = vec![0.0f64; dim];
    for vector in &vectors {
        for (s, v) in set_vector.iter_mut().zip(vector) {
            *s += v;
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let set_norm = norm(&set_vector);
    let mut cosine_sum = 0.0f64;
    let mut zero_context_words = Vec::new();
    for (word, vector) in usable.iter().zip(&vectors) {
        let n = norm(vector);
        if n == 0.0 || set_norm == 0.0 {
            zero_context_words.push((*word).clone());
            continue; // contributes cosine 0
        }
        let dot: f64 = vector.iter().zip(&set_vector).map(|(a, b)| a * b).sum();
        cosine_sum += dot / (n * set_norm);
    }
    Ok(CvScore {
        value: cosine_sum / usable.len() as f64,
        zero_context_words,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCoherence {
    pub head: usize,
    /// `None` when the topic had fewer than 2 usable words.
    pub cv: Option<f64>,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceResult {
    pub topics: Vec<TopicCoherence>,
    /// Arithmetic mean over scored topics; `None` if nothing was scorable.
    pub average_cv: Option<f64>,
}

/// Score every descriptor's top-T terms over the corpus.
pub fn coherence_report(
    descriptors: &[TopicDescriptor],
    docs: &[Vec<String>],
    window_size: usize,
    top_t: usize,
    eps: f64,
) -> Result<CoherenceResult> {
    if descriptors.is_empty() {
        return Err(Error::Coherence("no topic descriptors to score".into()));
    }
    let topic_words: Vec<Vec<String>> = descriptors
        .iter()
        .map(|d| d.terms.iter().take(top_t).map(|(t, _)| t.clone()).collect())
        .collect();
    let mut tracked: Vec<String> = Vec::new();
    for words in &topic_words {
        for word in words {
            if !tracked.contains(word) {
                tracked.push(word.clone());
            }
        }
    }
    let counts = build_window_counts(docs, &tracked, window_size)?;

    let mut topics = Vec::with_capacity(descriptors.len());
    for (descriptor, words) in descriptors.iter().zip(topic_words) {
        let cv = match cv_score(&words, &counts, eps) {
            Ok(score) => Some(score.value),
            Err(_) => None, // fewer than 2 usable words: absent
        };
        topics.push(TopicCoherence {
            head: descriptor.head,
            cv,
            words,
        });
    }
    let scored: Vec<f64> = topics.iter().filter_map(|t| t.cv).collect();
    let average_cv = if scored.is_empty() {
        None
    } else {
        Some(scored.iter().sum::<f64>() / scored.len() as f64)
    };
    Ok(CoherenceResult { topics, average_cv })
}

/// Plain-text table: one row per topic with its descriptor terms and score.
pub fn render_table(result: &CoherenceResult) -> String {
    let mut out = String::new();
    out.push_str("head | topic descriptor | C_v\n");
    out.push_str("-----+------------------+-----\n");
    for topic in &result.topics {
        let cv = topic
            .cv
            .map_or_else(|| "  --".to_string(), |v| format!("{v:.2}"));
        out.push_str(&format!(
            "{:4} | {} | {}\n",
            topic.head,
            topic.words.join(" "),
            cv
        ));
    }
    if let Some(avg) = result.average_cv {
        out.push_str(&format!("average C_v: {avg:.4}\n"));
    }
    out
}
