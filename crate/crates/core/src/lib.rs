//! Relational pooling for graph representations.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: dense adjacency-tensor graphs, permutations, CSL graphs and a
//!   brute-force isomorphism oracle.
//! * [`wl`]: 1-WL colour refinement and a canonical graph fingerprint.
//! * [`nn`]: a small reverse-mode autodiff tape, MLPs and Adam.
//! * [`gin`]: the Graph Isomorphism Network used as the permutation-sensitive
//!   function inside relational pooling.
//! * [`rp`]: exact, k-ary, poly-canonical and sampled (π-SGD) relational pooling.
//! * [`experiment`]: the CSL skip-length classification harness.

pub mod error;
pub mod experiment;
pub mod gin;
pub mod graph;
pub mod nn;
pub mod rp;
pub mod stats;
pub mod wl;

pub use error::{Error, Result};
pub use gin::{GinConfig, GinModel};
pub use graph::{BipartiteGraph, CslParams, Graph, Permutation};
pub use nn::{Adam, Matrix, Mlp, ParamStore, Tape, Var};
pub use rp::{GraphFunction, RpConfig, Strategy};
pub use wl::{wl_fingerprint, wl_refine, Coloring};
