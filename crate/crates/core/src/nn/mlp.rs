use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// Fully connected network `widths[0] → … → widths[last]` with the hidden
/// activation between layers. The output layer is linear unless
/// `activate_output` is set.
#[derive(Clone, Debug)]
pub struct Mlp {
    widths: Vec<usize>,
    weights: Vec<ParamId>,
    biases: Vec<ParamId>,
    activation: Activation,
    activate_output: bool,
}

impl Mlp {
    /// Registers the layers in `store` as `{prefix}.{i}.w` / `{prefix}.{i}.b`,
    /// initialised from `U(-1/√fan_in, 1/√fan_in)`.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        widths: &[usize],
        activation: Activation,
        activate_output: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!("invalid MLP widths {widths:?}")));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            let bound = 1.0 / (pair[0] as f64).sqrt();
            weights.push(store.add_uniform(format!("{prefix}.{i}.w"), pair[0], pair[1], bound, rng)?);
            biases.push(store.add_uniform(format!("{prefix}.{i}.b"), 1, pair[1], bound, rng)?);
        }
        Ok(Self {
            widths: widths.to_vec(),
            weights,
            biases,
            activation,
            activate_output,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.weights.iter().chain(&self.biases).copied()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        if tape.shape(x).1 != self.input_dim() {
            return Err(Error::Dimension(format!(
                "MLP expects {} input columns, got {}",
                self.input_dim(),
                tape.shape(x).1
            )));
        }
        let last = self.weights.len() - 1;
        let mut h = x;
        for (i, (&w, &b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let w = tape.param(store, w);
            let b = tape.param(store, b);
            h = tape.matmul(h, w)?;
            h = tape.add_row(h, b)?;
            if (i < last || self.activate_output) && self.activation == Activation::Relu {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}
