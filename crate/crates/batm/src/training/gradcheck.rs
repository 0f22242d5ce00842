//! Finite-difference verification of the reverse-mode gradients.
//!
//! Central differences of the total loss, coordinate by coordinate, compared
//! against the analytic gradient. Runs in f64; the relative error uses
//! `|a - b| / max(1e-8, |a| + |b|)`.
//!
//! Step-size note: the loss is O(1), so each difference quotient carries
//! roughly `eps_f64 / step` of rounding noise. At coordinates whose true
//! gradient sits near the 1e-8 denominator floor, that noise is what the
//! relative error measures; steps below ~1e-4 push it above 1e-4.

use rand::Rng;

use crate::corpus::TokenSequence;
use crate::embedding::init_random;
use crate::error::Result;
use crate::model::{forward, ModelParams};
use crate::rng::{rng_for, Stream};
use crate::training::backward::{backward, GradientSet};
use crate::training::loss::total_loss;

fn loss_at(
    params: &ModelParams<f64>,
    seq: &TokenSequence,
    label: usize,
    lambda: f64,
) -> Result<f64> {
    let record = forward(seq, params)?;
    Ok(total_loss(&record, label, lambda)?.total)
}

/// Max relative error of `analytic` against central finite differences of the
/// total loss, over every parameter coordinate.
pub fn max_rel_error_against(
    analytic: &GradientSet<f64>,
    params: &mut ModelParams<f64>,
    seq: &TokenSequence,
    label: usize,
    lambda: f64,
    step: f64,
) -> Result<f64> {
    let count = params.flat_param_count();
    let mut worst = 0.0f64;
    for i in 0..count {
        let original = params.flat_get(i);
        params.flat_set(i, original + step);
        let plus = loss_at(params, seq, label, lambda)?;
        params.flat_set(i, original - step);
        let minus = loss_at(params, seq, label, lambda)?;
        params.flat_set(i, original);

        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic.flat_get(i);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}

/// Compute the analytic gradient, then verify it coordinate-wise.
pub fn finite_diff_check(
    params: &mut ModelParams<f64>,
    seq: &TokenSequence,
    label: usize,
    lambda: f64,
    step: f64,
) -> Result<f64> {
    let record = forward(seq, params)?;
    let analytic = backward(&record, label, lambda, params)?;
    max_rel_error_against(&analytic, params, seq, label, lambda, step)
}

/// A random tiny model-and-document instance.
#[derive(Debug, Clone)]
pub struct TinyCase {
    pub effective_len: usize,
    pub max_len: usize,
    pub head_count: usize,
    pub embed_dim: usize,
    pub head_hidden_dim: usize,
    pub pool_hidden_dim: usize,
    pub num_classes: usize,
    pub vocab_size: usize,
    pub label: usize,
    pub seed: u64,
}

impl TinyCase {
    pub fn sample(seed: u64, case: u64) -> Self {
        let mut rng = rng_for(seed, Stream::GradCheck { case });
        let effective_len = rng.random_range(1..=5usize);
        let max_len = effective_len + rng.random_range(0..=2usize);
        let num_classes = rng.random_range(2..=3usize);
        TinyCase {
            effective_len,
            max_len,
            head_count: rng.random_range(1..=3),
            embed_dim: rng.random_range(1..=4),
            head_hidden_dim: rng.random_range(1..=3),
            pool_hidden_dim: rng.random_range(1..=3),
            num_classes,
            vocab_size: 2 + rng.random_range(2..=6usize),
            label: rng.random_range(0..num_classes),
            seed: seed.wrapping_mul(1000).wrapping_add(case),
        }
    }

    pub fn build(&self) -> (ModelParams<f64>, TokenSequence) {
        let embedding = init_random(self.vocab_size, self.embed_dim, self.seed);
        let params = ModelParams::new(
            embedding,
            self.head_count,
            self.head_hidden_dim,
            self.pool_hidden_dim,
            self.num_classes,
            self.seed.wrapping_add(1),
        )
        .expect("tiny dims are valid");
        let mut rng = rng_for(self.seed, Stream::GradCheck { case: u64::MAX });
        let ids: Vec<u32> = (0..self.effective_len)
            .map(|_| rng.random_range(2..self.vocab_size as u32))
            .collect();
        (params, TokenSequence::from_ids(&ids, self.max_len))
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub cases: usize,
    pub lambdas: Vec<f64>,
    pub step: f64,
    pub max_rel_error: f64,
}

/// Run the checker over `cases` random tiny configurations at each lambda.
pub fn random_tiny_check(
    cases: usize,
    lambdas: &[f64],
    step: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut worst = 0.0f64;
    for case in 0..cases as u64 {
        let tiny = TinyCase::sample(seed, case);
        let (mut params, seq) = tiny.build();
        for &lambda in lambdas {
            let err = finite_diff_check(&mut params, &seq, tiny.label, lambda, step)?;
            if err > worst {
                worst = err;
            }
        }
    }
    Ok(GradCheckReport {
        cases,
        lambdas: lambdas.to_vec(),
        step,
        max_rel_error: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences_on_tiny_instances() {
        // N=3, K=2, E=2, D_k=D_h=2, C=2 at two lambda values
        let tiny = TinyCase {
            effective_len: 3,
            max_len: 4,
            head_count: 2,
            embed_dim: 2,
            head_hidden_dim: 2,
            pool_hidden_dim: 2,
            num_classes: 2,
            vocab_size: 6,
            label: 1,
            seed: 4,
        };
        let (mut params, seq) = tiny.build();
        for lambda in [0.0, 1e-3] {
            let err = finite_diff_check(&mut params, &seq, tiny.label, lambda, 1e-5).unwrap();
            assert!(err < 1e-6, "lambda {lambda}: max rel error {err}");
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let tiny = TinyCase::sample(3, 0);
        let (mut params, seq) = tiny.build();
        let record = forward(&seq, &params).unwrap();
        let mut grads = backward(&record, tiny.label, 0.0, &params).unwrap();
        grads.flat_add(0, 1.0);
        let err = max_rel_error_against(&grads, &mut params, &seq, tiny.label, 0.0, 1e-5).unwrap();
        assert!(err > 0.1, "fault not detected: {err}");
    }
}
