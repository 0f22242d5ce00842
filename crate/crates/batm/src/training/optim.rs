//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::num::Scalar;
use crate::training::backward::GradientSet;

/// First/second-moment accumulators per parameter tensor, aligned with the
/// canonical tensor order of `ModelParams`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &ModelParams<S>) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();
        AdamState {
            m: shapes.iter().map(|&n| vec![S::ZERO; n]).collect(),
            v: shapes.iter().map(|&n| vec![S::ZERO; n]).collect(),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub(crate) fn from_parts(
        m: Vec<Vec<S>>,
        v: Vec<Vec<S>>,
        step_count: u64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        AdamState {
            m,
            v,
            step_count,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub(crate) fn moments(&self) -> (&[Vec<S>], &[Vec<S>]) {
        (&self.m, &self.v)
    }

    /// One Adam update. The PAD embedding row is never touched, and the whole
    /// embedding tensor is skipped when it is frozen.
    pub fn step(
        &mut self,
        params: &mut ModelParams<S>,
        grads: &GradientSet<S>,
        lr: f64,
    ) -> Result<()> {
        self.step_count += 1;
        let t = self.step_count;
        let correction1 = S::from_f64(1.0 - self.beta1.powf(t as f64));
        let correction2 = S::from_f64(1.0 - self.beta2.powf(t as f64));
        let beta1 = S::from_f64(self.beta1);
        let beta2 = S::from_f64(self.beta2);
        let one_minus_beta1 = S::ONE - beta1;
        let one_minus_beta2 = S::ONE - beta2;
        let eps = S::from_f64(self.epsilon);
        let lr = S::from_f64(lr);

        let embed_dim = params.embed_dim();
        let embedding_trainable = params.embedding.trainable();
        let param_tensors = params.tensors_mut();
        let grad_tensors = grads.tensors();
        if param_tensors.len() != grad_tensors.len() || param_tensors.len() != self.m.len() {
            return Err(Error::Training(
                "optimizer state does not match parameter layout".into(),
            ));
        }

        for (idx, ((name, theta), (grad_name, grad))) in
            param_tensors.into_iter().zip(grad_tensors).enumerate()
        {
            debug_assert_eq!(name, grad_name);
            if theta.len() != grad.len() || theta.len() != self.m[idx].len() {
                return Err(Error::Training(format!(
                    "shape mismatch in tensor {name} during optimizer step"
                )));
            }
            let is_embedding = idx == 0;
            if is_embedding && !embedding_trainable {
                continue;
            }
            // Skip the PAD row of the embedding tensor.
            let start = if is_embedding { embed_dim } else { 0 };
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for i in start..theta.len() {
                let g = grad[i];
                m[i] = beta1 * m[i] + one_minus_beta1 * g;
                v[i] = beta2 * v[i] + one_minus_beta2 * g * g;
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
