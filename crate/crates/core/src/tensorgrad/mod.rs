//! Dense `f64` tensors with a per-step reverse-mode differentiation tape.

mod dropout;
pub mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use dropout::Dropout;
pub use params::{Bound, ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
