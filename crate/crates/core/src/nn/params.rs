use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::tape::Tape;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

#[derive(Clone, Debug)]
struct Param {
    name: String,
    value: Matrix,
    grad: Matrix,
    // Adam first and second moments.
    m: Matrix,
    v: Matrix,
}

/// Named trainable tensors with their gradient accumulators and Adam state.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    by_name: BTreeMap<String, ParamId>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        let (r, c) = value.shape();
        let id = ParamId(self.params.len());
        self.params.push(Param {
            name: name.clone(),
            value,
            grad: Matrix::zeros(r, c),
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
        });
        self.by_name.insert(name, id);
        Ok(id)
    }

    /// Adds a `rows × cols` parameter drawn from `U(-bound, bound)`.
    pub fn add_uniform<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        bound: f64,
        rng: &mut R,
    ) -> Result<ParamId> {
        let data = (0..rows * cols)
            .map(|_| if bound > 0.0 { rng.gen_range(-bound..bound) } else { 0.0 })
            .collect();
        self.add(name, Matrix::from_vec(rows, cols, data)?)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].grad
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Adds the parameter-leaf gradients recorded on `tape` into the store.
    pub fn accumulate_grads(&mut self, tape: &Tape) {
        for (id, g) in tape.param_grads() {
            self.params[id.0].grad.add_assign(g);
        }
    }

    /// One Adam update with bias correction, then zeroes the gradients.
    pub fn adam_step(&mut self, lr: f64, beta1: f64, beta2: f64, eps: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for p in &mut self.params {
            let w = p.value.as_mut_slice();
            let g = p.grad.as_mut_slice();
            let m = p.m.as_mut_slice();
            let v = p.v.as_mut_slice();
            for i in 0..w.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                w[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                g[i] = 0.0;
            }
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint(
            self.params
                .iter()
                .map(|p| {
                    (
                        p.name.clone(),
                        TensorRecord {
                            shape: vec![p.value.rows(), p.value.cols()],
                            values: p.value.as_slice().to_vec(),
                        },
                    )
                })
                .collect(),
        )
    }

    /// Overwrites parameter values from a checkpoint. Every stored parameter
    /// must be present with a matching shape.
    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        for p in &mut self.params {
            let rec = ckpt
                .0
                .get(&p.name)
                .ok_or_else(|| Error::Data(format!("checkpoint lacks parameter {}", p.name)))?;
            if rec.shape != [p.value.rows(), p.value.cols()] || rec.values.len() != p.value.len() {
                return Err(Error::Dimension(format!(
                    "checkpoint shape {:?} for parameter {} of shape {:?}",
                    rec.shape,
                    p.name,
                    p.value.shape()
                )));
            }
            p.value.as_mut_slice().copy_from_slice(&rec.values);
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string(&self.to_checkpoint())?)?;
        Ok(())
    }

    pub fn load(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let ckpt: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        self.load_checkpoint(&ckpt)
    }
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }

    pub fn step(&self, store: &mut ParamStore) {
        store.adam_step(self.lr, self.beta1, self.beta2, self.eps);
    }
}

/// Parameter checkpoint: name → shape and flat row-major values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint(pub BTreeMap<String, TensorRecord>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}
