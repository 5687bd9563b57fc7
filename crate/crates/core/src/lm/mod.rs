//! Process-level language model: adjacent sentences as sequence-to-sequence
//! pairs, with an ON-LSTM carrying the context between them.

mod checkpoint;
mod config;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, MAGIC, VERSION};
pub use config::{ContextMode, LmConfig};
pub use model::{DocLoss, Network, ProcessLm};
pub use train::{
    batch_gradients, clip_gradients, corpus_nll, perplexity, sgd_update, train, EpochMetrics, TrainState,
};
