//! Minibatch training with Adam and per-epoch learning-rate halving.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedDocument, LabeledSplit};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::model::{forward, ModelParams};
use crate::num::Scalar;
use crate::rng::{rng_for, Stream};
use crate::training::backward::{example_grads, GradientSet};
use crate::training::loss::total_loss;
use crate::training::metrics::evaluate_with_entropy;
use crate::training::optim::AdamState;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub heads: usize,
    pub embed_dim: usize,
    pub head_hidden_dim: usize,
    pub pool_hidden_dim: usize,
    pub max_len: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub base_lr: f64,
    pub lambda: f64,
    pub seed: u64,
    pub trainable_embeddings: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            heads: 30,
            embed_dim: 300,
            head_hidden_dim: 64,
            pool_hidden_dim: 64,
            max_len: 100,
            batch_size: 32,
            epochs: 5,
            base_lr: 1e-3,
            lambda: 0.0,
            seed: 1,
            trainable_embeddings: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("heads", self.heads),
            ("embed_dim", self.embed_dim),
            ("head_hidden_dim", self.head_hidden_dim),
            ("pool_hidden_dim", self.pool_hidden_dim),
            ("max_len", self.max_len),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.base_lr <= 0.0 {
            return Err(Error::Config("base_lr must be > 0".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda must be >= 0".into()));
        }
        Ok(())
    }

    /// Learning rate for a zero-based epoch index: halved every epoch.
    pub fn lr_for_epoch(&self, epoch: usize) -> f64 {
        self.base_lr / (1u64 << epoch.min(62)) as f64
    }
}

/// One line of the epoch log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_macro_f1: f64,
    /// Mean per-(document, head) token-weight entropy on the validation set.
    pub avg_doc_entropy: f64,
}

/// Best-validation-accuracy model plus the full epoch log.
#[derive(Debug)]
pub struct TrainOutcome<S> {
    pub params: ModelParams<S>,
    pub state: AdamState<S>,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
}

/// Train on `split.train`, tracking validation metrics per epoch and keeping
/// the parameters of the best epoch. Fixed seed means identical outcomes at
/// any thread count: batch order comes from a seeded stream and gradient
/// reduction is ordered by example index.
pub fn train<S: Scalar>(
    config: &TrainConfig,
    split: &LabeledSplit,
    embedding: EmbeddingMatrix<S>,
) -> Result<TrainOutcome<S>> {
    config.validate()?;
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(Error::Training(
            "training requires non-empty train and validation sets".into(),
        ));
    }
    let num_classes = split.label_map.num_classes();
    let mut embedding = embedding;
    embedding.set_trainable(config.trainable_embeddings);
    let mut params = ModelParams::new(
        embedding,
        config.heads,
        config.head_hidden_dim,
        config.pool_hidden_dim,
        num_classes,
        config.seed,
    )?;
    let mut state = AdamState::new(&params);
    let lambda = S::from_f64(config.lambda);

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ModelParams<S>, AdamState<S>)> = None;

    for epoch in 0..config.epochs {
        let lr = config.lr_for_epoch(epoch);
        let mut order: Vec<usize> = (0..split.train.len()).collect();
        let mut rng = rng_for(
            config.seed,
            Stream::BatchShuffle {
                epoch: epoch as u64,
            },
        );
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        for batch_indices in order.chunks(config.batch_size) {
            let (grads, batch_loss) = batch_step(&params, &split.train, batch_indices, lambda)?;
            loss_sum += batch_loss;
            state.step(&mut params, &grads, lr)?;
        }
        let train_loss = loss_sum / split.train.len() as f64;

        let (metrics, avg_doc_entropy) =
            evaluate_with_entropy(&params, &split.validation, num_classes)?;
        log.push(EpochRecord {
            epoch: epoch + 1,
            lr,
            train_loss,
            val_accuracy: metrics.accuracy,
            val_macro_f1: metrics.macro_f1,
            avg_doc_entropy,
        });

        let improved = best
            .as_ref()
            .is_none_or(|(_, acc, _, _)| metrics.accuracy > *acc);
        if improved {
            best = Some((epoch + 1, metrics.accuracy, params.clone(), state.clone()));
        }
    }

    let (best_epoch, best_val_accuracy, params, state) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params,
        state,
        log,
        best_epoch,
        best_val_accuracy,
    })
}

/// Forward + backward over one batch; examples run in parallel, the gradient
/// reduction walks them in index order. Returns the summed example losses.
fn batch_step<S: Scalar>(
    params: &ModelParams<S>,
    train: &[EncodedDocument],
    batch_indices: &[usize],
    lambda: S,
) -> Result<(GradientSet<S>, f64)> {
    let per_example: Vec<_> = batch_indices
        .par_iter()
        .map(|&idx| {
            let doc = &train[idx];
            let record = forward(&doc.sequence, params)?;
            let loss = total_loss(&record, doc.class as usize, lambda)?;
            if !loss.total.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss on document {} (ce {}, lambda {})",
                    doc.id, loss.cross_entropy, lambda
                )));
            }
            let grads = example_grads(&record, params, Some(doc.class as usize), lambda)?;
            Ok((grads, loss.total.to_f64()))
        })
        .collect::<Result<_>>()?;

    let mut grads = GradientSet::zeros_like(params);
    let mut loss_sum = 0.0f64;
    for (example, loss) in &per_example {
        grads.accumulate_example(example);
        loss_sum += loss;
    }
    grads.scale(S::ONE / S::from_f64(batch_indices.len() as f64));
    grads.finalize()?;
    Ok((grads, loss_sum))
}
