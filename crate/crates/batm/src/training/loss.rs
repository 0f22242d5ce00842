//! Cross-entropy plus the entropy constraint on per-head token weights.

use crate::error::{Error, Result};
use crate::model::ForwardRecord;
use crate::num::{xlogx, Scalar};

/// Decomposition of one document's loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown<S> {
    pub cross_entropy: S,
    /// One token-weight entropy per head, natural log.
    pub per_head_doc_entropy: Vec<S>,
    pub lambda: S,
    /// `cross_entropy + lambda * mean(per_head_doc_entropy)`; equals
    /// `cross_entropy` bit-exactly when lambda is zero.
    pub total: S,
}

/// Negative log-probability of the true class, taken from the stable
/// log-softmax rather than from the probabilities.
pub fn cross_entropy<S: Scalar>(record: &ForwardRecord<S>, label: usize) -> Result<S> {
    if label >= record.log_probs.len() {
        return Err(Error::Training(format!(
            "label {label} out of range for {} classes",
            record.log_probs.len()
        )));
    }
    Ok(-record.log_probs[label])
}

/// Shannon entropy of a masked token-weight distribution, with 0 ln 0 := 0.
pub fn doc_entropy<S: Scalar>(alpha: &[S], mask: &[bool]) -> S {
    debug_assert_eq!(alpha.len(), mask.len());
    let mut h = S::ZERO;
    for (a, &live) in alpha.iter().zip(mask) {
        if live {
            h -= xlogx(*a);
        }
    }
    h
}

/// Total loss with the entropy constraint averaged over heads.
pub fn total_loss<S: Scalar>(
    record: &ForwardRecord<S>,
    label: usize,
    lambda: S,
) -> Result<LossBreakdown<S>> {
    if lambda < S::ZERO {
        return Err(Error::Training("lambda must be >= 0".into()));
    }
    let ce = cross_entropy(record, label)?;
    let per_head: Vec<S> = record
        .token_weights
        .iter()
        .map(|alpha| doc_entropy(alpha, &record.mask))
        .collect();
    let total = if lambda == S::ZERO {
        ce
    } else {
        let mut sum = S::ZERO;
        for h in &per_head {
            sum += *h;
        }
        let k = S::from_f64(per_head.len() as f64);
        ce + lambda * (sum / k)
    };
    Ok(LossBreakdown {
        cross_entropy: ce,
        per_head_doc_entropy: per_head,
        lambda,
        total,
    })
}
