//! The forward pass: multi-head additive attention over tokens, additive
//! attention over head vectors, and a linear-softmax classifier.
//!
//! Both attention layers share one parameter shape: a score
//! `g = score . tanh(proj x + proj_bias)` computed per item, normalized with a
//! softmax. The first layer runs one instance per head over token embeddings;
//! the second runs a single instance over the head vectors.

use crate::corpus::TokenSequence;
use crate::embedding::{lookup, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::num::Scalar;
use crate::rng::{rng_for, uniform, Stream};

/// Parameters of one additive attention scorer mapping inputs of `input_dim`
/// through a `hidden_dim` tanh layer to a scalar score.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveAttention<S> {
    /// hidden_dim x input_dim
    pub proj: Matrix<S>,
    /// hidden_dim
    pub proj_bias: Vec<S>,
    /// hidden_dim
    pub score: Vec<S>,
}

impl<S: Scalar> AdditiveAttention<S> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        AdditiveAttention {
            proj: Matrix::zeros(hidden_dim, input_dim),
            proj_bias: vec![S::ZERO; hidden_dim],
            score: vec![S::ZERO; hidden_dim],
        }
    }

    /// Scaled uniform init for weights, zero biases.
    fn init(input_dim: usize, hidden_dim: usize, rng: &mut impl rand::Rng) -> Self {
        let mut out = Self::zeros(input_dim, hidden_dim);
        let a = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        for slot in out.proj.data_mut() {
            *slot = S::from_f64(uniform(rng, -a, a));
        }
        let a = (6.0 / (hidden_dim + 1) as f64).sqrt();
        for slot in out.score.iter_mut() {
            *slot = S::from_f64(uniform(rng, -a, a));
        }
        out
    }

    pub fn input_dim(&self) -> usize {
        self.proj.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.proj.rows()
    }

    /// Score one input vector; writes the tanh activations into `tanh_out`
    /// (needed by the backward pass) and returns the scalar score.
    pub(crate) fn score_one(&self, x: &[S], tanh_out: &mut [S]) -> S {
        self.proj.matvec(x, tanh_out);
        for (t, b) in tanh_out.iter_mut().zip(&self.proj_bias) {
            *t = (*t + *b).tanh();
        }
        dot(&self.score, tanh_out)
    }
}

/// Linear classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams<S> {
    /// num_classes x embed_dim
    pub weight: Matrix<S>,
    /// num_classes
    pub bias: Vec<S>,
}

impl<S: Scalar> ClassifierParams<S> {
    pub fn zeros(embed_dim: usize, num_classes: usize) -> Self {
        ClassifierParams {
            weight: Matrix::zeros(num_classes, embed_dim),
            bias: vec![S::ZERO; num_classes],
        }
    }

    fn init(embed_dim: usize, num_classes: usize, rng: &mut impl rand::Rng) -> Self {
        let mut out = Self::zeros(embed_dim, num_classes);
        let a = (6.0 / (embed_dim + num_classes) as f64).sqrt();
        for slot in out.weight.data_mut() {
            *slot = S::from_f64(uniform(rng, -a, a));
        }
        out
    }

    pub fn num_classes(&self) -> usize {
        self.weight.rows()
    }
}

/// All trainable tensors of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub embedding: EmbeddingMatrix<S>,
    pub heads: Vec<AdditiveAttention<S>>,
    pub pool: AdditiveAttention<S>,
    pub classifier: ClassifierParams<S>,
}

impl<S: Scalar> ModelParams<S> {
    /// Seeded initialization of every non-embedding tensor; the embedding is
    /// supplied by the caller (pretrained or random).
    pub fn new(
        embedding: EmbeddingMatrix<S>,
        head_count: usize,
        head_hidden_dim: usize,
        pool_hidden_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if head_count == 0 {
            return Err(Error::Model("head count must be >= 1".into()));
        }
        if num_classes < 2 {
            return Err(Error::Model("need at least 2 classes".into()));
        }
        let embed_dim = embedding.dim();
        let mut rng = rng_for(seed, Stream::ParamInit);
        let heads = (0..head_count)
            .map(|_| AdditiveAttention::init(embed_dim, head_hidden_dim, &mut rng))
            .collect();
        let pool = AdditiveAttention::init(embed_dim, pool_hidden_dim, &mut rng);
        let classifier = ClassifierParams::init(embed_dim, num_classes, &mut rng);
        Ok(ModelParams {
            embedding,
            heads,
            pool,
            classifier,
        })
    }

    /// Same shapes, all non-embedding parameters zero. Useful for analytic
    /// test cases where attention must be exactly uniform.
    pub fn zeroed_attention(
        embedding: EmbeddingMatrix<S>,
        head_count: usize,
        head_hidden_dim: usize,
        pool_hidden_dim: usize,
        num_classes: usize,
    ) -> Self {
        let embed_dim = embedding.dim();
        ModelParams {
            embedding,
            heads: (0..head_count)
                .map(|_| AdditiveAttention::zeros(embed_dim, head_hidden_dim))
                .collect(),
            pool: AdditiveAttention::zeros(embed_dim, pool_hidden_dim),
            classifier: ClassifierParams::zeros(embed_dim, num_classes),
        }
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.vocab_size()
    }

    pub fn num_classes(&self) -> usize {
        self.classifier.num_classes()
    }

    pub fn head_hidden_dim(&self) -> usize {
        self.heads[0].hidden_dim()
    }

    pub fn pool_hidden_dim(&self) -> usize {
        self.pool.hidden_dim()
    }

    /// Every trainable tensor in canonical order: embedding first, then per
    /// head proj/bias/score, pool, classifier. Optimizer state, checkpoints,
    /// and the finite-difference checker all rely on this order.
    pub fn tensors(&self) -> Vec<(String, &[S])> {
        let mut out: Vec<(String, &[S])> =
            vec![("embedding".into(), self.embedding.matrix().data())];
        for (k, head) in self.heads.iter().enumerate() {
            out.push((format!("heads.{k}.proj"), head.proj.data()));
            out.push((format!("heads.{k}.proj_bias"), &head.proj_bias));
            out.push((format!("heads.{k}.score"), &head.score));
        }
        out.push(("pool.proj".into(), self.pool.proj.data()));
        out.push(("pool.proj_bias".into(), &self.pool.proj_bias));
        out.push(("pool.score".into(), &self.pool.score));
        out.push(("classifier.weight".into(), self.classifier.weight.data()));
        out.push(("classifier.bias".into(), &self.classifier.bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [S])> {
        let mut out: Vec<(String, &mut [S])> =
            vec![("embedding".into(), self.embedding.matrix_mut().data_mut())];
        for (k, head) in self.heads.iter_mut().enumerate() {
            out.push((format!("heads.{k}.proj"), head.proj.data_mut()));
            out.push((format!("heads.{k}.proj_bias"), &mut head.proj_bias));
            out.push((format!("heads.{k}.score"), &mut head.score));
        }
        out.push(("pool.proj".into(), self.pool.proj.data_mut()));
        out.push(("pool.proj_bias".into(), &mut self.pool.proj_bias));
        out.push(("pool.score".into(), &mut self.pool.score));
        out.push((
            "classifier.weight".into(),
            self.classifier.weight.data_mut(),
        ));
        out.push(("classifier.bias".into(), &mut self.classifier.bias));
        out
    }

    pub fn flat_param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn flat_get(&self, mut index: usize) -> S {
        for (_, tensor) in self.tensors() {
            if index < tensor.len() {
                return tensor[index];
            }
            index -= tensor.len();
        }
        panic!("flat parameter index out of range");
    }

    pub fn flat_set(&mut self, mut index: usize, value: S) {
        for (_, tensor) in self.tensors_mut() {
            if index < tensor.len() {
                tensor[index] = value;
                return;
            }
            index -= tensor.len();
        }
        panic!("flat parameter index out of range");
    }

    pub fn convert<T: Scalar>(&self) -> ModelParams<T> {
        let convert_attn = |a: &AdditiveAttention<S>| AdditiveAttention {
            proj: convert_matrix(&a.proj),
            proj_bias: a
                .proj_bias
                .iter()
                .map(|v| T::from_f64(v.to_f64()))
                .collect(),
            score: a.score.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        };
        ModelParams {
            embedding: self.embedding.convert(),
            heads: self.heads.iter().map(convert_attn).collect(),
            pool: convert_attn(&self.pool),
            classifier: ClassifierParams {
                weight: convert_matrix(&self.classifier.weight),
                bias: self
                    .classifier
                    .bias
                    .iter()
                    .map(|v| T::from_f64(v.to_f64()))
                    .collect(),
            },
        }
    }
}

fn convert_matrix<S: Scalar, T: Scalar>(m: &Matrix<S>) -> Matrix<T> {
    Matrix::from_vec(
        m.rows(),
        m.cols(),
        m.data().iter().map(|v| T::from_f64(v.to_f64())).collect(),
    )
}

/// Numerically stable softmax over the unmasked positions. Masked positions
/// come out as exactly zero.
pub fn masked_softmax<S: Scalar>(scores: &[S], mask: &[bool]) -> Result<Vec<S>> {
    debug_assert_eq!(scores.len(), mask.len());
    let mut max = None;
    for (s, &live) in scores.iter().zip(mask) {
        if live {
            max = Some(match max {
                None => *s,
                Some(m) => s.maxv(m),
            });
        }
    }
    let max = max.ok_or_else(|| Error::Model("softmax over an all-masked sequence".into()))?;
    let mut out = vec![S::ZERO; scores.len()];
    let mut denom = S::ZERO;
    for (i, (s, &live)) in scores.iter().zip(mask).enumerate() {
        if live {
            let e = (*s - max).exp();
            out[i] = e;
            denom += e;
        }
    }
    for v in out.iter_mut() {
        *v /= denom;
    }
    // masked slots were zero and stay exactly zero after 0/denom
    Ok(out)
}

/// Softmax with no mask (every position live).
pub fn softmax<S: Scalar>(scores: &[S]) -> Vec<S> {
    masked_softmax(scores, &vec![true; scores.len()]).expect("non-empty scores")
}

/// Output of one attention head over a document.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadAttention<S> {
    /// Raw scores, zero at masked positions.
    pub scores: Vec<S>,
    /// Softmax weights, exactly zero at masked positions.
    pub weights: Vec<S>,
    /// Weighted sum of token embeddings (length embed_dim).
    pub vector: Vec<S>,
    /// tanh activations per live position (effective_len x hidden_dim),
    /// retained for the backward pass.
    pub tanh: Matrix<S>,
}

/// Score and pool one head: `score_i = score . tanh(proj e_i + bias)` per live
/// token, softmax over the mask, head vector = weighted embedding sum.
pub fn head_attention<S: Scalar>(
    embedded: &Matrix<S>,
    mask: &[bool],
    params: &AdditiveAttention<S>,
) -> Result<HeadAttention<S>> {
    debug_assert_eq!(embedded.rows(), mask.len());
    let live = mask.iter().take_while(|&&m| m).count();
    debug_assert!(mask[live..].iter().all(|&m| !m), "mask must be a prefix");
    let mut scores = vec![S::ZERO; mask.len()];
    let mut tanh = Matrix::zeros(live, params.hidden_dim());
    for (i, score) in scores.iter_mut().enumerate().take(live) {
        *score = params.score_one(embedded.row(i), tanh.row_mut(i));
    }
    let weights = masked_softmax(&scores, mask)?;
    let mut vector = vec![S::ZERO; embedded.cols()];
    for (i, weight) in weights.iter().enumerate().take(live) {
        axpy(*weight, embedded.row(i), &mut vector);
    }
    Ok(HeadAttention {
        scores,
        weights,
        vector,
        tanh,
    })
}

/// Run every head independently; output order matches head index.
pub fn multi_head<S: Scalar>(
    embedded: &Matrix<S>,
    mask: &[bool],
    heads: &[AdditiveAttention<S>],
) -> Result<Vec<HeadAttention<S>>> {
    heads
        .iter()
        .map(|h| head_attention(embedded, mask, h))
        .collect()
}

/// Output of the attention layer over head vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentAttention<S> {
    /// Raw per-head scores.
    pub scores: Vec<S>,
    /// Softmax weights over all heads (no mask).
    pub weights: Vec<S>,
    /// Document vector (length embed_dim).
    pub vector: Vec<S>,
    /// tanh activations (head_count x hidden_dim) for the backward pass.
    pub tanh: Matrix<S>,
}

/// Additive attention over the head vectors: every head participates.
pub fn document_attention<S: Scalar>(
    head_vectors: &Matrix<S>,
    params: &AdditiveAttention<S>,
) -> DocumentAttention<S> {
    let k = head_vectors.rows();
    assert!(k >= 1, "need at least one head");
    let mut scores = vec![S::ZERO; k];
    let mut tanh = Matrix::zeros(k, params.hidden_dim());
    for (i, score) in scores.iter_mut().enumerate() {
        *score = params.score_one(head_vectors.row(i), tanh.row_mut(i));
    }
    let weights = softmax(&scores);
    let mut vector = vec![S::ZERO; head_vectors.cols()];
    for (i, weight) in weights.iter().enumerate() {
        axpy(*weight, head_vectors.row(i), &mut vector);
    }
    DocumentAttention {
        scores,
        weights,
        vector,
        tanh,
    }
}

/// Classification head output; log-probabilities are retained so the loss
/// never takes a log of an underflowed probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification<S> {
    pub logits: Vec<S>,
    pub log_probs: Vec<S>,
    pub probs: Vec<S>,
}

pub fn classify<S: Scalar>(doc_vector: &[S], params: &ClassifierParams<S>) -> Classification<S> {
    let mut logits = vec![S::ZERO; params.num_classes()];
    params.weight.matvec(doc_vector, &mut logits);
    for (l, b) in logits.iter_mut().zip(&params.bias) {
        *l += *b;
    }
    let mut max = logits[0];
    for l in &logits[1..] {
        max = max.maxv(*l);
    }
    let mut sum = S::ZERO;
    for l in &logits {
        sum += (*l - max).exp();
    }
    let lse = max + sum.ln();
    let log_probs: Vec<S> = logits.iter().map(|l| *l - lse).collect();
    let probs: Vec<S> = log_probs.iter().map(|lp| lp.exp()).collect();
    Classification {
        logits,
        log_probs,
        probs,
    }
}

/// Every intermediate of one forward pass, retained for the backward pass and
/// for attention-weight analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRecord<S> {
    /// Token ids of the input sequence (length max_len).
    pub token_ids: Vec<u32>,
    /// max_len x embed_dim; masked rows are zero.
    pub embedded: Matrix<S>,
    pub mask: Vec<bool>,
    pub effective_len: usize,
    /// Per-head raw token scores (head_count x max_len).
    pub token_scores: Vec<Vec<S>>,
    /// Per-head token weight distributions; each sums to 1 over live
    /// positions and is exactly 0 at masked positions.
    pub token_weights: Vec<Vec<S>>,
    /// Per-head tanh activations (effective_len x head_hidden_dim).
    pub(crate) token_tanh: Vec<Matrix<S>>,
    /// head_count x embed_dim.
    pub head_vectors: Matrix<S>,
    pub head_scores: Vec<S>,
    pub(crate) head_tanh: Matrix<S>,
    /// Distribution over heads; sums to 1.
    pub head_weights: Vec<S>,
    pub doc_vector: Vec<S>,
    pub logits: Vec<S>,
    pub log_probs: Vec<S>,
    /// Class distribution; sums to 1.
    pub class_probs: Vec<S>,
}

impl<S: Scalar> ForwardRecord<S> {
    pub fn head_count(&self) -> usize {
        self.token_weights.len()
    }

    pub fn predicted_class(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.class_probs.iter().enumerate() {
            if *p > self.class_probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Full forward pass: lookup, per-head token attention, attention over heads,
/// linear-softmax classification.
pub fn forward<S: Scalar>(
    seq: &TokenSequence,
    params: &ModelParams<S>,
) -> Result<ForwardRecord<S>> {
    let embedded = lookup(seq, &params.embedding)?;
    let per_head = multi_head(&embedded, &seq.mask, &params.heads)?;

    let k = per_head.len();
    let mut head_vectors = Matrix::zeros(k, params.embed_dim());
    let mut token_scores = Vec::with_capacity(k);
    let mut token_weights = Vec::with_capacity(k);
    let mut token_tanh = Vec::with_capacity(k);
    for (i, head) in per_head.into_iter().enumerate() {
        head_vectors.row_mut(i).copy_from_slice(&head.vector);
        token_scores.push(head.scores);
        token_weights.push(head.weights);
        token_tanh.push(head.tanh);
    }

    let doc_attention = document_attention(&head_vectors, &params.pool);
    let classification = classify(&doc_attention.vector, &params.classifier);

    Ok(ForwardRecord {
        token_ids: seq.ids.clone(),
        embedded,
        mask: seq.mask.clone(),
        effective_len: seq.effective_len,
        token_scores,
        token_weights,
        token_tanh,
        head_vectors,
        head_scores: doc_attention.scores,
        head_tanh: doc_attention.tanh,
        head_weights: doc_attention.weights,
        doc_vector: doc_attention.vector,
        logits: classification.logits,
        log_probs: classification.log_probs,
        class_probs: classification.probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::init_random;

    #[test]
    fn masked_softmax_analytic() {
        let out = masked_softmax(&[0.0f64, 3.0f64.ln()], &[true, true]).unwrap();
        assert!((out[0] - 0.25).abs() < 1e-12);
        assert!((out[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn masked_softmax_uniform_on_equal_scores() {
        let out = masked_softmax(&[5.0f64, 5.0, 5.0], &[true, true, true]).unwrap();
        for v in out {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_softmax_single_live_position() {
        let out = masked_softmax(&[7.0f64, -2.0], &[true, false]).unwrap();
        assert_eq!(out, vec![1.0, 0.0]);
    }

    #[test]
    fn masked_softmax_all_masked_is_an_error() {
        assert!(masked_softmax(&[1.0f64, 2.0], &[false, false]).is_err());
    }

    #[test]
    fn zero_params_give_mean_of_unmasked_embeddings() {
        let embedded = Matrix::from_rows(&[&[1.0f64, 3.0], &[3.0, 5.0], &[100.0, 100.0]]);
        let mask = [true, true, false];
        let params = AdditiveAttention::zeros(2, 4);
        let out = head_attention(&embedded, &mask, &params).unwrap();
        assert_eq!(out.weights, vec![0.5, 0.5, 0.0]);
        assert_eq!(out.vector, vec![2.0, 4.0]);
    }

    #[test]
    fn head_attention_matches_scalar_computation() {
        // E=2, D_k=1, proj=[[1,0]], bias=[0], score=[1], e1=(0,0), e2=(10,0)
        let embedded = Matrix::from_rows(&[&[0.0f64, 0.0], &[10.0, 0.0]]);
        let params = AdditiveAttention {
            proj: Matrix::from_rows(&[&[1.0f64, 0.0]]),
            proj_bias: vec![0.0],
            score: vec![1.0],
        };
        let out = head_attention(&embedded, &[true, true], &params).unwrap();
        let g1 = 10.0f64.tanh();
        assert_eq!(out.scores[0], 0.0);
        assert!((out.scores[1] - g1).abs() < 1e-15);
        let alpha1 = 1.0 / (1.0 + (-g1).exp());
        assert!(
            (out.weights[1] - alpha1).abs() < 1e-12,
            "{}",
            out.weights[1]
        );
        assert!((out.weights[0] - 0.2689).abs() < 1e-4);
        assert!((out.weights[1] - 0.7311).abs() < 1e-4);
        assert!((out.vector[0] - alpha1 * 10.0).abs() < 1e-12);
        assert_eq!(out.vector[1], 0.0);
    }

    #[test]
    fn single_live_token_returns_its_embedding() {
        let embedded = Matrix::from_rows(&[&[0.5f64, -1.5], &[9.0, 9.0]]);
        let mut rng = rng_for(3, Stream::ParamInit);
        let params = AdditiveAttention::init(2, 3, &mut rng);
        let out = head_attention(&embedded, &[true, false], &params).unwrap();
        assert_eq!(out.weights, vec![1.0, 0.0]);
        assert_eq!(out.vector, vec![0.5, -1.5]);
    }

    #[test]
    fn multi_head_singleton_matches_head_attention() {
        let embedded = Matrix::from_rows(&[&[1.0f64, 2.0], &[0.0, 1.0]]);
        let mask = [true, true];
        let mut rng = rng_for(5, Stream::ParamInit);
        let head = AdditiveAttention::init(2, 2, &mut rng);
        let single = head_attention(&embedded, &mask, &head).unwrap();
        let multi = multi_head(&embedded, &mask, std::slice::from_ref(&head)).unwrap();
        assert_eq!(multi.len(), 1);
        assert_eq!(multi[0], single);
    }

    #[test]
    fn identical_heads_produce_identical_outputs() {
        let embedded = Matrix::from_rows(&[&[1.0f64, 2.0], &[3.0, -1.0]]);
        let mask = [true, true];
        let mut rng = rng_for(5, Stream::ParamInit);
        let head = AdditiveAttention::init(2, 2, &mut rng);
        let multi = multi_head(&embedded, &mask, &[head.clone(), head]).unwrap();
        assert_eq!(multi[0], multi[1]);
    }

    #[test]
    fn document_attention_singleton() {
        let h = Matrix::from_rows(&[&[2.0f64, -1.0]]);
        let mut rng = rng_for(5, Stream::ParamInit);
        let pool = AdditiveAttention::init(2, 3, &mut rng);
        let out = document_attention(&h, &pool);
        assert_eq!(out.weights, vec![1.0]);
        assert_eq!(out.vector, vec![2.0, -1.0]);
    }

    #[test]
    fn document_attention_identical_heads_uniform() {
        let h = Matrix::from_rows(&[&[1.0f64, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        let mut rng = rng_for(5, Stream::ParamInit);
        let pool = AdditiveAttention::init(2, 3, &mut rng);
        let out = document_attention(&h, &pool);
        for w in &out.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        for (a, b) in out.vector.iter().zip([1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn document_attention_matches_scalar_computation() {
        // K=2, E=2, D_h=1: mu_k = c * tanh(w . h_k + b)
        let h = Matrix::from_rows(&[&[1.0f64, 0.5], &[-0.5, 2.0]]);
        let pool = AdditiveAttention {
            proj: Matrix::from_rows(&[&[0.3f64, -0.2]]),
            proj_bias: vec![0.1],
            score: vec![0.7],
        };
        let out = document_attention(&h, &pool);
        let mu0 = 0.7 * (0.3 * 1.0 + (-0.2) * 0.5 + 0.1f64).tanh();
        let mu1 = 0.7 * (0.3 * (-0.5) + (-0.2) * 2.0 + 0.1f64).tanh();
        assert!((out.scores[0] - mu0).abs() < 1e-15);
        assert!((out.scores[1] - mu1).abs() < 1e-15);
        let z = (mu0.exp()) + (mu1.exp());
        let b0 = mu0.exp() / z;
        let b1 = mu1.exp() / z;
        assert!((out.weights[0] - b0).abs() < 1e-12);
        let d0 = b0 * 1.0 + b1 * (-0.5);
        let d1 = b0 * 0.5 + b1 * 2.0;
        assert!((out.vector[0] - d0).abs() < 1e-12);
        assert!((out.vector[1] - d1).abs() < 1e-12);
    }

    #[test]
    fn classify_zero_params_is_uniform() {
        let params = ClassifierParams::zeros(3, 15);
        let out = classify(&[1.0f64, -2.0, 0.5], &params);
        for p in &out.probs {
            assert!((p - 1.0 / 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_dominant_bias_wins() {
        let mut params = ClassifierParams::zeros(2, 4);
        params.bias[0] = 10.0f64;
        let out = classify(&[0.0, 0.0], &params);
        // p_0 = 1 / (1 + 3 e^-10)
        assert!(out.probs[0] > 0.999, "{}", out.probs[0]);
    }

    #[test]
    fn classify_argmax_shift_invariant() {
        let mut params = ClassifierParams::zeros(2, 3);
        params.bias = vec![0.3f64, -0.1, 0.9];
        let a = classify(&[0.0, 0.0], &params);
        for b in params.bias.iter_mut() {
            *b += 100.0;
        }
        let b = classify(&[0.0, 0.0], &params);
        let argmax = |p: &[f64]| {
            p.iter()
                .enumerate()
                .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmax(&a.probs), argmax(&b.probs));
    }

    #[test]
    fn forward_zero_attention_params_uniform_classes() {
        let emb: EmbeddingMatrix<f64> = init_random(6, 3, 1);
        let params = ModelParams::zeroed_attention(emb, 2, 2, 2, 5);
        let seq = TokenSequence::from_ids(&[2, 3, 4], 4);
        let record = forward(&seq, &params).unwrap();
        for p in &record.class_probs {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let emb: EmbeddingMatrix<f64> = init_random(8, 3, 2);
        let params = ModelParams::new(emb, 3, 2, 2, 4, 7).unwrap();
        let seq = TokenSequence::from_ids(&[2, 5, 7], 5);
        let a = forward(&seq, &params).unwrap();
        let b = forward(&seq, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_paper_scale_shapes() {
        // 180 heads over 300-dim embeddings: head vector count and dims
        let emb: EmbeddingMatrix<f32> = init_random(50, 300, 1);
        let params = ModelParams::new(emb, 180, 8, 8, 15, 1).unwrap();
        let seq = TokenSequence::from_ids(&[2, 3, 4, 5], 6);
        let record = forward(&seq, &params).unwrap();
        assert_eq!(record.head_vectors.rows(), 180);
        assert_eq!(record.head_vectors.cols(), 300);
        assert_eq!(record.head_weights.len(), 180);
    }

    #[test]
    fn flat_param_accessors_round_trip() {
        let emb: EmbeddingMatrix<f64> = init_random(4, 2, 1);
        let mut params = ModelParams::new(emb, 2, 2, 2, 3, 1).unwrap();
        let n = params.flat_param_count();
        let before = params.flat_get(n - 1);
        params.flat_set(n - 1, before + 1.0);
        assert_eq!(params.flat_get(n - 1), before + 1.0);
    }
}
