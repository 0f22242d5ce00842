//! Accuracy and macro-F1 over a labeled dataset.

use rayon::prelude::*;

use crate::corpus::EncodedDocument;
use crate::error::{Error, Result};
use crate::model::{forward, ModelParams};
use crate::num::Scalar;
use crate::training::loss::doc_entropy;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub accuracy: f64,
    /// Unweighted mean of per-class F1 over every class in the label map,
    /// with F1 := 0 when precision + recall is zero.
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub examples: usize,
}

/// Metrics from (predicted, true) class pairs.
pub fn classification_metrics(pairs: &[(usize, usize)], num_classes: usize) -> EvalMetrics {
    let mut confusion = vec![0u64; num_classes * num_classes];
    let mut correct = 0u64;
    for &(pred, truth) in pairs {
        confusion[truth * num_classes + pred] += 1;
        if pred == truth {
            correct += 1;
        }
    }
    let mut per_class_f1 = Vec::with_capacity(num_classes);
    for class in 0..num_classes {
        let tp = confusion[class * num_classes + class] as f64;
        let fp: f64 = (0..num_classes)
            .filter(|&t| t != class)
            .map(|t| confusion[t * num_classes + class] as f64)
            .sum();
        let fn_: f64 = (0..num_classes)
            .filter(|&p| p != class)
            .map(|p| confusion[class * num_classes + p] as f64)
            .sum();
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class_f1.push(f1);
    }
    EvalMetrics {
        accuracy: correct as f64 / pairs.len() as f64,
        macro_f1: per_class_f1.iter().sum::<f64>() / num_classes as f64,
        per_class_f1,
        examples: pairs.len(),
    }
}

/// Accuracy and macro-F1 of argmax predictions over a dataset.
pub fn evaluate<S: Scalar>(
    params: &ModelParams<S>,
    dataset: &[EncodedDocument],
    num_classes: usize,
) -> Result<EvalMetrics> {
    evaluate_with_entropy(params, dataset, num_classes).map(|(metrics, _)| metrics)
}

/// Like `evaluate`, but also returns the mean per-(document, head) token
/// entropy computed from the same forward passes.
pub fn evaluate_with_entropy<S: Scalar>(
    params: &ModelParams<S>,
    dataset: &[EncodedDocument],
    num_classes: usize,
) -> Result<(EvalMetrics, f64)> {
    if dataset.is_empty() {
        return Err(Error::Training("cannot evaluate an empty dataset".into()));
    }
    let per_doc: Vec<(usize, usize, f64)> = dataset
        .par_iter()
        .map(|doc| -> Result<(usize, usize, f64)> {
            let record = forward(&doc.sequence, params)?;
            let mut entropy_sum = 0.0;
            for alpha in &record.token_weights {
                entropy_sum += doc_entropy(alpha, &record.mask).to_f64();
            }
            Ok((
                record.predicted_class(),
                doc.class as usize,
                entropy_sum / record.head_count() as f64,
            ))
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = per_doc.iter().map(|&(p, t, _)| (p, t)).collect();
    let entropy_mean = per_doc.iter().map(|&(_, _, e)| e).sum::<f64>() / per_doc.len() as f64;
    Ok((classification_metrics(&pairs, num_classes), entropy_mean))
}
