//! Two-phase training with label deconvolution, and the baselines it is
//! compared against.

mod config;
mod experiment;
mod motivating;
mod phases;

pub use config::{ArchConfig, LrSchedule, Module, TrainConfig};
pub use experiment::{
    evaluate_nodes, evaluate_splits, run_experiment, ExperimentOutcome, ExperimentReport, Learned, Method, Objectives,
    SplitMetrics, Timing,
};
pub use phases::{
    generate_pseudo_labels, infer_features, joint_objective, ne_batch_loss, prepare_ne_labels, to_label_domain,
    train_glem_baseline, train_gnn_phase, train_joint_fullbatch, train_ne_phase, JointGrads, JointParams, NeGrads,
    NeParams, NeTarget, NeTrainer, PhaseResult,
};
pub use motivating::{motivating_config, reproduce_motivating_example, MotivatingResult};
