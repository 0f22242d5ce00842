//! Exact reverse-mode gradients of the total loss.
//!
//! Per-example gradients keep the embedding part positional (one row per live
//! token); batch accumulation scatters them into the dense vocabulary-sized
//! buffer in example order, then by position, so sums are bit-reproducible at
//! any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, scale, Matrix};
use crate::model::{AdditiveAttention, ClassifierParams, ForwardRecord, ModelParams};
use crate::num::{xlogx, Scalar};

/// One gradient tensor per trainable tensor, shape-matched to `ModelParams`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<S> {
    pub embedding: Matrix<S>,
    pub heads: Vec<AdditiveAttention<S>>,
    pub pool: AdditiveAttention<S>,
    pub classifier: ClassifierParams<S>,
}

impl<S: Scalar> GradientSet<S> {
    pub fn zeros_like(params: &ModelParams<S>) -> Self {
        GradientSet {
            embedding: Matrix::zeros(params.vocab_size(), params.embed_dim()),
            heads: params
                .heads
                .iter()
                .map(|h| AdditiveAttention::zeros(h.input_dim(), h.hidden_dim()))
                .collect(),
            pool: AdditiveAttention::zeros(params.pool.input_dim(), params.pool.hidden_dim()),
            classifier: ClassifierParams::zeros(
                params.embed_dim(),
                params.classifier.num_classes(),
            ),
        }
    }

    /// Tensor views in the same canonical order as `ModelParams::tensors`.
    pub fn tensors(&self) -> Vec<(String, &[S])> {
        let mut out: Vec<(String, &[S])> = vec![("embedding".into(), self.embedding.data())];
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
            vec![("embedding".into(), self.embedding.data_mut())];
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

    pub fn flat_get(&self, mut index: usize) -> S {
        for (_, tensor) in self.tensors() {
            if index < tensor.len() {
                return tensor[index];
            }
            index -= tensor.len();
        }
        panic!("flat gradient index out of range");
    }

    pub fn flat_add(&mut self, mut index: usize, delta: S) {
        for (_, tensor) in self.tensors_mut() {
            if index < tensor.len() {
                tensor[index] += delta;
                return;
            }
            index -= tensor.len();
        }
        panic!("flat gradient index out of range");
    }

    pub fn scale(&mut self, factor: S) {
        for (_, tensor) in self.tensors_mut() {
            scale(tensor, factor);
        }
    }

    pub(crate) fn accumulate_example(&mut self, example: &ExampleGrads<S>) {
        for (pos, &id) in example.live_ids.iter().enumerate() {
            axpy(
                S::ONE,
                example.embed_positional.row(pos),
                self.embedding.row_mut(id as usize),
            );
        }
        for (dst, src) in self.heads.iter_mut().zip(&example.heads) {
            add_attn(dst, src);
        }
        add_attn(&mut self.pool, &example.pool);
        axpy(
            S::ONE,
            example.classifier.weight.data(),
            self.classifier.weight.data_mut(),
        );
        axpy(S::ONE, &example.classifier.bias, &mut self.classifier.bias);
    }

    /// Zero the PAD-row gradient and verify every entry is finite.
    pub(crate) fn finalize(&mut self) -> Result<()> {
        self.clear_pad_row();
        self.check_finite()
    }

    /// The PAD row never trains; force its gradient to zero.
    fn clear_pad_row(&mut self) {
        self.embedding.row_mut(0).fill(S::ZERO);
    }

    fn check_finite(&self) -> Result<()> {
        for (name, tensor) in self.tensors() {
            if tensor.iter().any(|v| !v.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient in tensor {name}"
                )));
            }
        }
        Ok(())
    }
}

fn add_attn<S: Scalar>(dst: &mut AdditiveAttention<S>, src: &AdditiveAttention<S>) {
    axpy(S::ONE, src.proj.data(), dst.proj.data_mut());
    axpy(S::ONE, &src.proj_bias, &mut dst.proj_bias);
    axpy(S::ONE, &src.score, &mut dst.score);
}

/// Per-example gradients with the embedding part kept positional.
pub(crate) struct ExampleGrads<S> {
    live_ids: Vec<u32>,
    /// effective_len x embed_dim
    embed_positional: Matrix<S>,
    heads: Vec<AdditiveAttention<S>>,
    pool: AdditiveAttention<S>,
    classifier: ClassifierParams<S>,
}

/// `out_i = a_i (d_i - sum_j a_j d_j)` over the first `n` slots: the softmax
/// Jacobian applied to upstream weight gradients.
fn softmax_backward<S: Scalar>(weights: &[S], upstream: &[S], n: usize, out: &mut [S]) {
    let mut s = S::ZERO;
    for i in 0..n {
        s += weights[i] * upstream[i];
    }
    for i in 0..n {
        out[i] = weights[i] * (upstream[i] - s);
    }
}

/// Reverse pass for one example. `label` enables the cross-entropy term;
/// `entropy_scale` is the coefficient on the mean per-head entropy (the
/// entropy path is skipped entirely when it is zero, which keeps the
/// lambda = 0 gradients bit-identical to the pure cross-entropy path).
pub(crate) fn example_grads<S: Scalar>(
    record: &ForwardRecord<S>,
    params: &ModelParams<S>,
    label: Option<usize>,
    entropy_scale: S,
) -> Result<ExampleGrads<S>> {
    let n = record.effective_len;
    let k = record.head_count();
    let embed_dim = params.embed_dim();

    let mut grads = ExampleGrads {
        live_ids: record.token_ids[..n].to_vec(),
        embed_positional: Matrix::zeros(n, embed_dim),
        heads: params
            .heads
            .iter()
            .map(|h| AdditiveAttention::zeros(h.input_dim(), h.hidden_dim()))
            .collect(),
        pool: AdditiveAttention::zeros(params.pool.input_dim(), params.pool.hidden_dim()),
        classifier: ClassifierParams::zeros(embed_dim, params.num_classes()),
    };

    // Classifier: d(logits) = probs - onehot(label).
    let mut d_doc = vec![S::ZERO; embed_dim];
    if let Some(label) = label {
        if label >= params.num_classes() {
            return Err(Error::Training(format!(
                "label {label} out of range for {} classes",
                params.num_classes()
            )));
        }
        let mut d_logits = record.class_probs.clone();
        d_logits[label] -= S::ONE;
        grads
            .classifier
            .weight
            .outer_add(&d_logits, &record.doc_vector);
        axpy(S::ONE, &d_logits, &mut grads.classifier.bias);
        params.classifier.weight.matvec_t_add(&d_logits, &mut d_doc);
    }

    // Attention over heads.
    let beta = &record.head_weights;
    let mut d_beta = vec![S::ZERO; k];
    for (i, db) in d_beta.iter_mut().enumerate() {
        *db = dot(&d_doc, record.head_vectors.row(i));
    }
    let mut d_mu = vec![S::ZERO; k];
    softmax_backward(beta, &d_beta, k, &mut d_mu);

    let pool_hidden = params.pool.hidden_dim();
    let mut d_head_vec = vec![S::ZERO; embed_dim];
    let mut d_z_pool = vec![S::ZERO; pool_hidden];
    let entropy_coef = if entropy_scale == S::ZERO {
        None
    } else {
        Some(entropy_scale / S::from_f64(k as f64))
    };

    for head_idx in 0..k {
        let tanh_row = record.head_tanh.row(head_idx);
        axpy(d_mu[head_idx], tanh_row, &mut grads.pool.score);
        for ((dz, t), c) in d_z_pool.iter_mut().zip(tanh_row).zip(&params.pool.score) {
            *dz = d_mu[head_idx] * *c * (S::ONE - *t * *t);
        }
        grads
            .pool
            .proj
            .outer_add(&d_z_pool, record.head_vectors.row(head_idx));
        axpy(S::ONE, &d_z_pool, &mut grads.pool.proj_bias);

        // dL/dh_k = beta_k * d_doc + W_pool^T dz
        for (slot, dd) in d_head_vec.iter_mut().zip(&d_doc) {
            *slot = beta[head_idx] * *dd;
        }
        params.pool.proj.matvec_t_add(&d_z_pool, &mut d_head_vec);

        // Token-level attention for this head.
        let alpha = &record.token_weights[head_idx];
        let head_params = &params.heads[head_idx];
        let head_grads = &mut grads.heads[head_idx];
        let head_hidden = head_params.hidden_dim();

        let mut d_alpha = vec![S::ZERO; n];
        for (i, da) in d_alpha.iter_mut().enumerate() {
            *da = dot(&d_head_vec, record.embedded.row(i));
        }
        let mut d_score = vec![S::ZERO; n];
        softmax_backward(alpha, &d_alpha, n, &mut d_score);

        if let Some(coef) = entropy_coef {
            // dE/dg_i = -(alpha_i ln alpha_i + alpha_i E) for entropy E of
            // this head, derived through the softmax in score space so that
            // weights that underflow to zero contribute zero.
            let mut head_entropy = S::ZERO;
            for a in alpha.iter().take(n) {
                head_entropy -= xlogx(*a);
            }
            for i in 0..n {
                d_score[i] += coef * (-(xlogx(alpha[i]) + alpha[i] * head_entropy));
            }
        }

        let tanh = &record.token_tanh[head_idx];
        let mut d_z = vec![S::ZERO; head_hidden];
        for i in 0..n {
            let t_row = tanh.row(i);
            axpy(d_score[i], t_row, &mut head_grads.score);
            for ((dz, t), v) in d_z.iter_mut().zip(t_row).zip(&head_params.score) {
                *dz = d_score[i] * *v * (S::ONE - *t * *t);
            }
            head_grads.proj.outer_add(&d_z, record.embedded.row(i));
            axpy(S::ONE, &d_z, &mut head_grads.proj_bias);

            // dL/de_i accumulates across heads.
            let de = grads.embed_positional.row_mut(i);
            head_params.proj.matvec_t_add(&d_z, de);
            axpy(alpha[i], &d_head_vec, de);
        }
    }

    Ok(grads)
}

/// Exact gradients of the total loss for one example.
pub fn backward<S: Scalar>(
    record: &ForwardRecord<S>,
    label: usize,
    lambda: S,
    params: &ModelParams<S>,
) -> Result<GradientSet<S>> {
    let example = example_grads(record, params, Some(label), lambda)?;
    finish(params, std::iter::once(example), 1)
}

/// Gradients of the cross-entropy term alone (no entropy constraint).
pub fn backward_cross_entropy_only<S: Scalar>(
    record: &ForwardRecord<S>,
    label: usize,
    params: &ModelParams<S>,
) -> Result<GradientSet<S>> {
    let example = example_grads(record, params, Some(label), S::ZERO)?;
    finish(params, std::iter::once(example), 1)
}

/// Gradients of the mean per-head entropy alone (cross-entropy weight zero).
pub fn entropy_gradient<S: Scalar>(
    record: &ForwardRecord<S>,
    params: &ModelParams<S>,
) -> Result<GradientSet<S>> {
    let example = example_grads(record, params, None, S::ONE)?;
    finish(params, std::iter::once(example), 1)
}

/// Mean gradient over a batch. Per-example passes run in parallel; the
/// reduction iterates examples in index order.
pub fn backward_batch<S: Scalar>(
    batch: &[(ForwardRecord<S>, usize)],
    lambda: S,
    params: &ModelParams<S>,
) -> Result<GradientSet<S>> {
    if batch.is_empty() {
        return Err(Error::Training("empty batch".into()));
    }
    let examples: Vec<ExampleGrads<S>> = batch
        .par_iter()
        .map(|(record, label)| example_grads(record, params, Some(*label), lambda))
        .collect::<Result<_>>()?;
    finish(params, examples.into_iter(), batch.len())
}

fn finish<S: Scalar>(
    params: &ModelParams<S>,
    examples: impl Iterator<Item = ExampleGrads<S>>,
    count: usize,
) -> Result<GradientSet<S>> {
    let mut grads = GradientSet::zeros_like(params);
    for example in examples {
        grads.accumulate_example(&example);
    }
    if count > 1 {
        grads.scale(S::ONE / S::from_f64(count as f64));
    }
    grads.finalize()?;
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenSequence;
    use crate::embedding::init_random;
    use crate::model::forward;
    use crate::training::loss::total_loss;

    fn tiny_setup(seed: u64) -> (ModelParams<f64>, TokenSequence) {
        let emb = init_random(7, 3, seed);
        let params = ModelParams::new(emb, 2, 2, 2, 3, seed + 1).unwrap();
        let seq = TokenSequence::from_ids(&[2, 4, 6], 4);
        (params, seq)
    }

    #[test]
    fn untouched_embedding_rows_have_zero_gradient() {
        let (params, seq) = tiny_setup(1);
        let record = forward(&seq, &params).unwrap();
        let grads = backward(&record, 1, 0.0, &params).unwrap();
        // ids 3 and 5 never appear in the document
        assert!(grads.embedding.row(3).iter().all(|&v| v == 0.0));
        assert!(grads.embedding.row(5).iter().all(|&v| v == 0.0));
        assert!(grads.embedding.row(2).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn pad_row_gradient_is_zero() {
        let (params, seq) = tiny_setup(2);
        let record = forward(&seq, &params).unwrap();
        let grads = backward(&record, 0, 1e-3, &params).unwrap();
        assert!(grads.embedding.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn classifier_bias_gradient_vanishes_on_confident_correct_prediction() {
        let (mut params, seq) = tiny_setup(3);
        // Force a near-one-hot prediction on class 1 via a huge bias.
        params.classifier.bias[1] = 50.0;
        let record = forward(&seq, &params).unwrap();
        let grads = backward(&record, 1, 0.0, &params).unwrap();
        for g in &grads.classifier.bias {
            assert!(g.abs() < 1e-12, "{g}");
        }
    }

    #[test]
    fn lambda_zero_matches_cross_entropy_path_bitwise() {
        let (params, seq) = tiny_setup(4);
        let record = forward(&seq, &params).unwrap();
        let a = backward(&record, 2, 0.0, &params).unwrap();
        let b = backward_cross_entropy_only(&record, 2, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_of_identical_examples_equals_single_example() {
        let (params, seq) = tiny_setup(5);
        let record = forward(&seq, &params).unwrap();
        let single = backward(&record, 1, 1e-3, &params).unwrap();
        let batch =
            backward_batch(&[(record.clone(), 1), (record.clone(), 1)], 1e-3, &params).unwrap();
        for ((_, a), (_, b)) in single.tensors().iter().zip(batch.tensors().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn entropy_gradient_touches_only_token_attention_and_embeddings() {
        let (params, seq) = tiny_setup(6);
        let record = forward(&seq, &params).unwrap();
        let grads = entropy_gradient(&record, &params).unwrap();
        assert!(grads.classifier.weight.data().iter().all(|&v| v == 0.0));
        assert!(grads.pool.proj.data().iter().all(|&v| v == 0.0));
        assert!(grads.heads[0].proj.data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn entropy_descent_does_not_increase_entropy() {
        for seed in 0..10u64 {
            let (mut params, seq) = tiny_setup(40 + seed);
            let record = forward(&seq, &params).unwrap();
            let before = total_loss(&record, 0, 1.0).unwrap();
            let before_mean: f64 = before.per_head_doc_entropy.iter().sum::<f64>()
                / before.per_head_doc_entropy.len() as f64;

            let grads = entropy_gradient(&record, &params).unwrap();
            let step = 1e-3;
            let n = params.flat_param_count();
            for i in 0..n {
                let g = grads.flat_get(i);
                params.flat_set(i, params.flat_get(i) - step * g);
            }
            let record2 = forward(&seq, &params).unwrap();
            let after = total_loss(&record2, 0, 1.0).unwrap();
            let after_mean: f64 = after.per_head_doc_entropy.iter().sum::<f64>()
                / after.per_head_doc_entropy.len() as f64;
            assert!(
                after_mean <= before_mean + 1e-9,
                "seed {seed}: {before_mean} -> {after_mean}"
            );
        }
    }
}
