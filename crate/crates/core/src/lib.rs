//! Latent hierarchy induction for textual process descriptions.
//!
//! A two-level BiLSTM encodes each process description sentence by sentence,
//! an ordered-neurons LSTM runs over the resulting sentence vectors and is
//! trained as a process-level language model, and the master forget gates of
//! the trained network are read back as level distances from which a binary
//! tree over the sentences is recovered greedily. Induced trees are scored
//! against gold outlines with a graph-edit-distance style similarity.

pub mod checks;
pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod induce;
pub mod lm;
pub mod onlstm;
pub mod parallel;
pub mod tensorgrad;

pub use error::{Error, Result};
