//! Loss computation, exact reverse-mode gradients, finite-difference
//! verification, Adam optimization with per-epoch halving, the training loop,
//! evaluation metrics, and checkpointing.

mod backward;
mod checkpoint;
mod gradcheck;
mod loss;
mod metrics;
mod optim;
mod trainer;

pub use backward::{
    backward, backward_batch, backward_cross_entropy_only, entropy_gradient, GradientSet,
};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointHeader, CheckpointMeta, FORMAT_VERSION, MAGIC,
};
pub use gradcheck::{
    finite_diff_check, max_rel_error_against, random_tiny_check, GradCheckReport, TinyCase,
};
pub use loss::{cross_entropy, doc_entropy, total_loss, LossBreakdown};
pub use metrics::{classification_metrics, evaluate, evaluate_with_entropy, EvalMetrics};
pub use optim::AdamState;
pub use trainer::{train, EpochRecord, TrainConfig, TrainOutcome};
