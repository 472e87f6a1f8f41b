//! Minimal reverse-mode differentiation over real tensors, sized for
//! training the iMagLS network. Complex quantities are split into
//! interleaved (re, im) pairs; see [`Tape`] for the kernel set.

mod adam;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
