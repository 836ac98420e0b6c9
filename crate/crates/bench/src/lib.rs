//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relpool::gin::{GinConfig, GinModel};
use relpool::graph::{make_csl, CslParams, Graph};
use relpool::nn::ParamStore;

/// Erdős–Rényi graph with edge probability `p` and the constant vertex feature.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("valid edges")
}

pub fn csl(m: usize, r: usize) -> Graph {
    make_csl(CslParams::new(m, r).expect("valid CSL parameters")).expect("valid CSL parameters")
}

/// A GIN over `input_dim` vertex features with otherwise default settings.
pub fn seeded_gin(input_dim: usize, seed: u64) -> (GinModel, ParamStore) {
    let cfg = GinConfig {
        input_dim,
        use_input_embedding_mlp: input_dim == 1,
        ..GinConfig::default()
    };
    let mut store = ParamStore::new();
    let model = GinModel::new(cfg, &mut store, &mut ChaCha8Rng::seed_from_u64(seed)).expect("valid config");
    (model, store)
}

/// A cheap nonlinear readout of the flattened tensor.
pub fn weighted_sin(g: &Graph) -> Vec<f64> {
    let s: f64 = g.vec().iter().enumerate().map(|(i, x)| (i as f64 + 1.0).sqrt() * x).sum();
    vec![s.sin(), s.cos()]
}
