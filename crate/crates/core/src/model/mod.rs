//! Feedforward network and logistic baseline, trained from scratch.

mod checkpoint;
mod config;
mod gradcheck;
mod logistic;
mod network;
mod optim;
mod scaler;
mod train;

use std::path::PathBuf;

use thiserror::Error;

pub use checkpoint::{
    baseline_from_text, baseline_to_text, load_baseline, load_checkpoint, network_from_text,
    network_to_text, save_baseline, save_checkpoint, SCHEMA_VERSION,
};
pub use config::{Activation, LossKind, NetworkConfig, OptimizerKind};
pub use gradcheck::{
    compare_at, grad_check, grad_check_with_step, relative_error, GradCheckReport, DEFAULT_STEP,
};
pub use logistic::{
    fit_logistic, fit_logistic_baseline, log_loss, median, BaselineCheckpoint, LogisticConfig,
};
pub use network::{forward, init_params, loss_and_grad, Layer, ModelParams};
pub use optim::Optimizer;
pub use scaler::{Scaler, Standardizer};
pub use train::{predict, train, ModelCheckpoint, TrainingTrace};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite value in model input")]
    NonFiniteInput,
    #[error("empty batch")]
    EmptyBatch,
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("logistic baseline needs both classes; {positives} of {rows} rows are above the median flow")]
    SingleClass { rows: usize, positives: usize },
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("inconsistent checkpoint: {0}")]
    InvalidCheckpoint(String),
    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: String, reason: String },
    #[error("checkpoint schema version {found} is not supported (expected {supported})")]
    SchemaVersion { found: u32, supported: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
