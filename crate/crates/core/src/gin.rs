//! Graph Isomorphism Network.
//!
//! `h_u^(l) = MLP^(l)((1 + ε^(l)) h_u^(l-1) + Σ_{v ∈ N(u)} h_v^(l-1))`, read out
//! by summing every layer's node embeddings and concatenating the sums, then
//! mapped to class scores by a bias-free linear layer.
//!
//! Several graphs are evaluated together as one block-diagonal graph.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::{softmax, Activation, Matrix, Mlp, NeighborLists, ParamId, ParamStore, Tape, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GinConfig {
    pub num_layers: usize,
    /// Width of each MLP hidden layer.
    pub mlp_hidden: usize,
    /// Number of hidden layers in each MLP.
    pub mlp_hidden_layers: usize,
    /// Node embedding width `d_h` of every layer.
    pub embed_dim: usize,
    pub num_classes: usize,
    /// Vertex feature columns the model expects (features plus ID columns).
    pub input_dim: usize,
    pub train_epsilon: bool,
    /// Embed constant input features with an MLP before the first update.
    pub use_input_embedding_mlp: bool,
    /// Apply ReLU to each layer's MLP output.
    pub activate_layer_output: bool,
    /// Include `h^(0)` in the concatenated readout.
    pub readout_includes_input: bool,
}

impl Default for GinConfig {
    fn default() -> Self {
        Self {
            num_layers: 5,
            mlp_hidden: 16,
            mlp_hidden_layers: 2,
            embed_dim: 16,
            num_classes: 10,
            input_dim: 1,
            train_epsilon: true,
            use_input_embedding_mlp: true,
            activate_layer_output: false,
            readout_includes_input: false,
        }
    }
}

impl GinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::Config("GIN needs at least one layer".into()));
        }
        for (name, v) in [
            ("mlp_hidden", self.mlp_hidden),
            ("embed_dim", self.embed_dim),
            ("num_classes", self.num_classes),
            ("input_dim", self.input_dim),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    fn mlp_widths(&self, input: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(std::iter::repeat_n(self.mlp_hidden, self.mlp_hidden_layers));
        w.push(self.embed_dim);
        w
    }

    /// Width of `h^(0)` as seen by the first layer.
    pub fn layer0_dim(&self) -> usize {
        if self.use_input_embedding_mlp {
            self.embed_dim
        } else {
            self.input_dim
        }
    }

    /// Length of the graph embedding.
    pub fn readout_dim(&self) -> usize {
        self.num_layers * self.embed_dim + if self.readout_includes_input { self.layer0_dim() } else { 0 }
    }
}

/// Several graphs packed as one block-diagonal graph.
#[derive(Clone, Debug)]
pub struct GraphBatch {
    features: Matrix,
    neighbors: NeighborLists,
    segment: Arc<Vec<usize>>,
    num_graphs: usize,
}

impl GraphBatch {
    pub fn new(graphs: &[&Graph]) -> Result<Self> {
        let Some(first) = graphs.first() else {
            return Err(Error::Usage("empty graph batch".into()));
        };
        let d = first.d_v();
        if graphs.iter().any(|g| g.d_v() != d) {
            return Err(Error::Dimension("graphs in a batch must share d_v".into()));
        }
        let total: usize = graphs.iter().map(|g| g.n()).sum();
        let mut features = Vec::with_capacity(total * d);
        let mut neighbors = Vec::with_capacity(total);
        let mut segment = Vec::with_capacity(total);
        let mut offset = 0;
        for (b, g) in graphs.iter().enumerate() {
            features.extend_from_slice(g.vfeat());
            for u in 0..g.n() {
                neighbors.push(g.neighbors(u).map(|v| v + offset).collect());
                segment.push(b);
            }
            offset += g.n();
        }
        Ok(Self {
            features: Matrix::from_vec(total, d, features)?,
            neighbors: Arc::new(neighbors),
            segment: Arc::new(segment),
            num_graphs: graphs.len(),
        })
    }

    pub fn num_graphs(&self) -> usize {
        self.num_graphs
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }
}

/// Tape handles produced by one forward pass.
pub struct GinForward {
    /// `h^(0)` (after the optional input embedding) through `h^(L)`.
    pub layers: Vec<Var>,
    /// `B × readout_dim`.
    pub graph_embedding: Var,
    /// `B × num_classes`, before softmax.
    pub logits: Var,
}

#[derive(Clone, Debug)]
pub struct GinModel {
    cfg: GinConfig,
    input_mlp: Option<Mlp>,
    layer_mlps: Vec<Mlp>,
    epsilons: Vec<Option<ParamId>>,
    head: ParamId,
}

impl GinModel {
    /// Registers all parameters under `gin.*` in `store`.
    pub fn new<R: Rng + ?Sized>(cfg: GinConfig, store: &mut ParamStore, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let input_mlp = if cfg.use_input_embedding_mlp {
            Some(Mlp::new(store, "gin.input", &cfg.mlp_widths(cfg.input_dim), Activation::Relu, cfg.activate_layer_output, rng)?)
        } else {
            None
        };
        let mut layer_mlps = Vec::with_capacity(cfg.num_layers);
        let mut epsilons = Vec::with_capacity(cfg.num_layers);
        let mut width = cfg.layer0_dim();
        for l in 1..=cfg.num_layers {
            layer_mlps.push(Mlp::new(
                store,
                &format!("gin.layer{l}.mlp"),
                &cfg.mlp_widths(width),
                Activation::Relu,
                cfg.activate_layer_output,
                rng,
            )?);
            epsilons.push(if cfg.train_epsilon {
                Some(store.add(format!("gin.layer{l}.eps"), Matrix::scalar(0.0))?)
            } else {
                None
            });
            width = cfg.embed_dim;
        }
        let readout = cfg.readout_dim();
        let bound = 1.0 / (readout as f64).sqrt();
        let head = store.add_uniform("gin.head.w", readout, cfg.num_classes, bound, rng)?;
        Ok(Self {
            cfg,
            input_mlp,
            layer_mlps,
            epsilons,
            head,
        })
    }

    pub fn config(&self) -> &GinConfig {
        &self.cfg
    }

    pub fn head(&self) -> ParamId {
        self.head
    }

    pub fn epsilon_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.epsilons.iter().flatten().copied()
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.cfg.input_dim {
            return Err(Error::Config(format!(
                "model expects {} vertex feature columns, graph has {cols}",
                self.cfg.input_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, batch: &GraphBatch) -> Result<GinForward> {
        self.check_input(batch.features.cols())?;
        let x = tape.leaf(batch.features.clone());
        let mut h = match &self.input_mlp {
            Some(mlp) => mlp.forward(tape, store, x)?,
            None => x,
        };
        let mut layers = vec![h];
        for (mlp, eps) in self.layer_mlps.iter().zip(&self.epsilons) {
            let agg = tape.neighbor_sum(h, batch.neighbors.clone())?;
            let self_term = match eps {
                Some(id) => {
                    let e = tape.param(store, *id);
                    let scaled = tape.mul_scalar(h, e)?;
                    tape.add(h, scaled)?
                }
                None => h,
            };
            let pre = tape.add(self_term, agg)?;
            h = mlp.forward(tape, store, pre)?;
            layers.push(h);
        }
        let skip = usize::from(!self.cfg.readout_includes_input);
        let mut sums = Vec::with_capacity(layers.len());
        for &layer in &layers[skip..] {
            sums.push(tape.segment_sum(layer, batch.segment.clone(), batch.num_graphs)?);
        }
        let graph_embedding = tape.concat_cols(&sums)?;
        let w = tape.param(store, self.head);
        let logits = tape.matmul(graph_embedding, w)?;
        Ok(GinForward {
            layers,
            graph_embedding,
            logits,
        })
    }

    /// Class scores for a pooled graph embedding (the linear head).
    pub fn head_logits(&self, store: &ParamStore, embedding: &[f64]) -> Result<Vec<f64>> {
        let e = Matrix::from_vec(1, embedding.len(), embedding.to_vec())?;
        Ok(e.matmul(store.value(self.head))?.into_vec())
    }

    /// Graph embeddings of every graph in `graphs`, one row each.
    pub fn graph_embeddings(&self, store: &ParamStore, graphs: &[&Graph]) -> Result<Matrix> {
        let batch = GraphBatch::new(graphs)?;
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, store, &batch)?;
        Ok(tape.value(out.graph_embedding).clone())
    }
}

/// Per-layer node embeddings `h^(0)…h^(L)` of one graph.
pub fn gin_node_embeddings(g: &Graph, model: &GinModel, store: &ParamStore) -> Result<Vec<Matrix>> {
    model.check_input(g.d_v())?;
    let batch = GraphBatch::new(&[g])?;
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, store, &batch)?;
    Ok(out.layers.iter().map(|&v| tape.value(v).clone()).collect())
}

/// Concatenated per-layer sum readout.
pub fn gin_graph_embedding(g: &Graph, model: &GinModel, store: &ParamStore) -> Result<Vec<f64>> {
    model.check_input(g.d_v())?;
    Ok(model.graph_embeddings(store, &[g])?.into_vec())
}

/// Softmax class probabilities.
pub fn gin_classify(g: &Graph, model: &GinModel, store: &ParamStore) -> Result<Vec<f64>> {
    let e = gin_graph_embedding(g, model, store)?;
    Ok(softmax(&model.head_logits(store, &e)?))
}
