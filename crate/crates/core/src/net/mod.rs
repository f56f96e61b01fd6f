//! Fully connected networks with batched second-order forward jets and
//! reverse-mode parameter gradients through the jet computation.

mod adam;
mod jet;
mod mlp;

pub use adam::Adam;
pub use jet::{JetBatch, JetSpec};
pub use mlp::{Activation, Head, JetTape, Mlp, MlpCheckpoint};
