//! Dense regression network for inductor Q prediction, trained from scratch.

mod adam;
mod checkpoint;
mod data;
mod metrics;
mod mlp;
mod schedule;
mod train;

pub use adam::AdamState;
pub use checkpoint::{arch_hash, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use data::{read_dataset_csv, write_dataset_csv, Dataset, Split};
pub use metrics::{evaluate, mse_loss, Metrics};
pub use mlp::{
    layer_norm, sigmoid, softplus, Backward, Dense, ForwardCache, HiddenLayer, MlpGrads, MlpModel, NormStats,
    SingleEval, LAYER_NORM_EPS, N_FEATURES, PAPER_WIDTHS,
};
pub use schedule::{EarlyStopping, PlateauScheduler};
pub use train::{train, TrainConfig, TrainReport};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("expected {expected} input features, got {found}")]
    Shape { expected: usize, found: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("checkpoint architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error("malformed checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
