//! Optimizer, learning-rate schedule, training loop and ablations.

mod ablation;
mod optim;
mod trainer;

pub use ablation::{run_ablation, AblationReport, AblationRun, VariantSummary, ABLATION_VARIANTS};
pub use optim::{AdamW, PlateauScheduler};
pub use trainer::{
    build_graphs, evaluate, evaluate_graphs, mean_baseline_mae, predict_graphs, train, Evaluation, TrainConfig,
    TrainOutcome,
};
