//! Test-only reference implementations, kept independent of the library's
//! computation paths: plain nested loops over plain `Vec<f64>` data, textbook
//! softmax without max-subtraction, probabilities derived without log-space
//! tricks.

#![allow(dead_code)]

use std::collections::HashSet;

use batm::model::ModelParams;

pub struct RefHead {
    /// hidden x input
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
}

pub struct RefModel {
    pub embedding: Vec<Vec<f64>>,
    pub heads: Vec<RefHead>,
    pub pool: RefHead,
    pub classifier_w: Vec<Vec<f64>>,
    pub classifier_b: Vec<f64>,
}

fn matrix_rows(m: &batm::linalg::Matrix<f64>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Copy parameters out into plain vectors.
pub fn ref_model(params: &ModelParams<f64>) -> RefModel {
    let head = |a: &batm::model::AdditiveAttention<f64>| RefHead {
        w: matrix_rows(&a.proj),
        b: a.proj_bias.clone(),
        v: a.score.clone(),
    };
    RefModel {
        embedding: matrix_rows(params.embedding.matrix()),
        heads: params.heads.iter().map(head).collect(),
        pool: head(&params.pool),
        classifier_w: matrix_rows(&params.classifier.weight),
        classifier_b: params.classifier.bias.clone(),
    }
}

pub struct RefForward {
    /// per head, per live token
    pub alpha: Vec<Vec<f64>>,
    /// per head vector
    pub head_vectors: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub doc: Vec<f64>,
    pub probs: Vec<f64>,
}

fn textbook_softmax(scores: &[f64]) -> Vec<f64> {
    let mut denom = 0.0;
    for &s in scores {
        denom += s.exp();
    }
    scores.iter().map(|&s| s.exp() / denom).collect()
}

fn ref_score(head: &RefHead, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for (row, (&b, &v)) in head.w.iter().zip(head.b.iter().zip(&head.v)) {
        let mut z = b;
        for (w, xi) in row.iter().zip(x) {
            z += w * xi;
        }
        total += v * z.tanh();
    }
    total
}

/// Forward pass over the live ids only, straight from the layer equations.
pub fn reference_forward(model: &RefModel, live_ids: &[u32]) -> RefForward {
    let embedded: Vec<&Vec<f64>> = live_ids
        .iter()
        .map(|&id| &model.embedding[id as usize])
        .collect();
    let embed_dim = model.embedding[0].len();
    let k = model.heads.len();

    let mut alpha = Vec::with_capacity(k);
    let mut head_vectors = Vec::with_capacity(k);
    for head in &model.heads {
        let scores: Vec<f64> = embedded.iter().map(|e| ref_score(head, e)).collect();
        let weights = textbook_softmax(&scores);
        let mut h = vec![0.0; embed_dim];
        for (w, e) in weights.iter().zip(&embedded) {
            for (slot, x) in h.iter_mut().zip(e.iter()) {
                *slot += w * x;
            }
        }
        alpha.push(weights);
        head_vectors.push(h);
    }

    let mu: Vec<f64> = head_vectors
        .iter()
        .map(|h| ref_score(&model.pool, h))
        .collect();
    let beta = textbook_softmax(&mu);
    let mut doc = vec![0.0; embed_dim];
    for (b, h) in beta.iter().zip(&head_vectors) {
        for (slot, x) in doc.iter_mut().zip(h.iter()) {
            *slot += b * x;
        }
    }

    let logits: Vec<f64> = model
        .classifier_w
        .iter()
        .zip(&model.classifier_b)
        .map(|(row, &b)| {
            let mut z = b;
            for (w, d) in row.iter().zip(&doc) {
                z += w * d;
            }
            z
        })
        .collect();
    let probs = textbook_softmax(&logits);

    RefForward {
        alpha,
        head_vectors,
        beta,
        doc,
        probs,
    }
}

/// Cross-entropy plus the scaled mean per-head entropy, from probabilities.
pub fn reference_total_loss(forward: &RefForward, label: usize, lambda: f64) -> f64 {
    let ce = -forward.probs[label].ln();
    let mut entropy_sum = 0.0;
    for alpha in &forward.alpha {
        for &a in alpha {
            if a > 0.0 {
                entropy_sum -= a * a.ln();
            }
        }
    }
    ce + lambda * entropy_sum / forward.alpha.len() as f64
}

/// Brute-force C_v straight from window sets: definitional probabilities,
/// NPMI matrix, explicit cosines.
pub fn brute_force_cv(windows: &[HashSet<String>], words: &[String], eps: f64) -> Option<f64> {
    let w = windows.len() as f64;
    let p = |token: &str| windows.iter().filter(|win| win.contains(token)).count() as f64 / w;
    let p_joint = |a: &str, b: &str| {
        windows
            .iter()
            .filter(|win| win.contains(a) && win.contains(b))
            .count() as f64
            / w
    };
    let usable: Vec<&String> = words.iter().filter(|t| p(t) > 0.0).collect();
    if usable.len() < 2 {
        return None;
    }
    let npmi = |a: &str, b: &str| {
        let joint = p_joint(a, b) + eps;
        (joint / (p(a) * p(b))).ln() / -joint.ln()
    };
    let vectors: Vec<Vec<f64>> = usable
        .iter()
        .map(|a| usable.iter().map(|b| npmi(a, b)).collect())
        .collect();
    let mut set_vector = vec![0.0; usable.len()];
    for vector in &vectors {
        for (s, v) in set_vector.iter_mut().zip(vector) {
            *s += v;
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut total = 0.0;
    for vector in &vectors {
        let denominator = norm(vector) * norm(&set_vector);
        if denominator > 0.0 {
            let dot: f64 = vector.iter().zip(&set_vector).map(|(a, b)| a * b).sum();
            total += dot / denominator;
        }
    }
    Some(total / usable.len() as f64)
}
