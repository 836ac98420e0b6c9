//! Minimal neural-network substrate: dense matrices, a reverse-mode tape,
//! parameter storage with Adam, and MLPs.

mod matrix;
mod mlp;
mod params;
mod tape;

pub use matrix::Matrix;
pub use mlp::{Activation, Mlp};
pub use params::{Adam, Checkpoint, ParamId, ParamStore, TensorRecord};
pub use tape::{cross_entropy, log_softmax, softmax, NeighborLists, Tape, Var};
