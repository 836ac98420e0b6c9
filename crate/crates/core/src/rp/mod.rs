//! Relational pooling: averaging a permutation-sensitive `f` over vertex
//! orderings.
//!
//! Exact sums are split into fixed-size chunks of lexicographic rank, each
//! chunk is accumulated with compensated summation, and chunk totals are
//! merged in rank order. Results are therefore identical for any thread count.

mod exact;
mod gnn;
mod kary;
mod orient;
mod sgd;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{factorial, falling_factorial, Graph};
use crate::stats::VecSum;

pub use exact::{pi_sgd_sample, rp_exact_joint, rp_exact_separate, rp_inference, rp_sample_mean, MonteCarlo};
pub use gnn::{id_patterns, rp_gnn_exact, rp_gnn_sampled, IdGin};
pub use kary::{kary_rp, KaryMode, KaryOutput};
pub use orient::{kary_dfs_sample, orient, orient_with, poly_canonical, visit_order, TieBreak, Traversal};
pub use sgd::{exact_surrogate_losses, pi_sgd_step_with, pi_sgd_train_step, RpGin, SurrogateLosses};

/// Largest `n!` summed by exact joint pooling (`9!`).
pub const JOINT_GUARD: u64 = 362_880;
/// Largest number of terms in any other exact enumeration.
pub const ENUMERATION_GUARD: u64 = 1_000_000;

const CHUNK: u64 = 512;

/// A possibly permutation-sensitive graph function `f`.
pub trait GraphFunction: Sync {
    fn eval(&self, g: &Graph) -> Result<Vec<f64>>;
}

impl<F> GraphFunction for F
where
    F: Fn(&Graph) -> Vec<f64> + Sync,
{
    fn eval(&self, g: &Graph) -> Result<Vec<f64>> {
        Ok(self(g))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Exact,
    PiSgd,
    DfsOrient,
    BfsOrient,
}

/// What the permutation average is taken over before the classifier head.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolTarget {
    /// Average graph embeddings, then apply the linear-softmax head.
    #[default]
    Embedding,
    /// Average the head's logits. With a bias-free linear head this agrees
    /// with `Embedding` on the pooled scores; it differs for the surrogate
    /// loss only if the head is made nonlinear.
    Logits,
}

/// When π-SGD draws new permutations during training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    #[default]
    PerEpoch,
    PerStep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpConfig {
    pub strategy: Strategy,
    #[serde(default)]
    pub k_ary: Option<usize>,
    #[serde(default)]
    pub id_modulus: Option<usize>,
    /// Permutations averaged at inference; 0 asks for the exact average.
    #[serde(default)]
    pub inference_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Give `f ≡ 0` to sampled k-subgraphs that contain an isolated vertex.
    #[serde(default)]
    pub ignore_isolated: bool,
    #[serde(default)]
    pub pool: PoolTarget,
    #[serde(default)]
    pub resample: Resample,
}

impl Default for RpConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Exact,
            k_ary: None,
            id_modulus: None,
            inference_samples: 0,
            seed: 0,
            ignore_isolated: false,
            pool: PoolTarget::Embedding,
            resample: Resample::PerEpoch,
        }
    }
}

impl RpConfig {
    /// Checks the configuration against a graph with `n` vertices.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(m) = self.id_modulus {
            if m == 0 || m > n {
                return Err(Error::Config(format!("id_modulus {m} outside [1, {n}]")));
            }
        }
        if let Some(k) = self.k_ary {
            if k == 0 || k > n {
                return Err(Error::Config(format!("k_ary {k} outside [1, {n}]")));
            }
        }
        let sampled_exact = self.inference_samples == 0;
        match (self.strategy, self.k_ary) {
            (Strategy::Exact, None) => joint_guard(n),
            (Strategy::Exact, Some(k)) => kary_guard(n, k).map(drop),
            (Strategy::PiSgd, None) if sampled_exact => joint_guard(n),
            (Strategy::PiSgd, Some(k)) if sampled_exact => kary_guard(n, k).map(drop),
            _ => Ok(()),
        }
    }
}

pub(crate) fn joint_guard(n: usize) -> Result<()> {
    match factorial(n) {
        Some(c) if c <= JOINT_GUARD => Ok(()),
        _ => Err(Error::Size(format!(
            "exact pooling over {n}! permutations exceeds the {JOINT_GUARD} limit; use pi_sgd sampling or k-ary pooling"
        ))),
    }
}

pub(crate) fn kary_guard(n: usize, k: usize) -> Result<u64> {
    match falling_factorial(n, k) {
        Some(c) if c <= ENUMERATION_GUARD => Ok(c),
        _ => Err(Error::Size(format!(
            "exact {k}-ary pooling on {n} vertices exceeds {ENUMERATION_GUARD} terms; use sampled mode"
        ))),
    }
}

/// Mean of the vectors produced for items `0..total`, evaluated in parallel
/// chunks. `each(start, len, acc)` adds the values for ranks
/// `start..start + len` to `acc` in rank order.
pub(crate) fn chunked_mean<F>(total: u64, each: F) -> Result<Vec<f64>>
where
    F: Fn(u64, u64, &mut Option<VecSum>) -> Result<()> + Sync,
{
    if total == 0 {
        return Err(Error::Usage("mean over an empty set".into()));
    }
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Result<Option<VecSum>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let mut acc = None;
            each(start, CHUNK.min(total - start), &mut acc)?;
            Ok(acc)
        })
        .collect();
    let mut total_sum: Option<VecSum> = None;
    for part in parts {
        let Some(part) = part? else { continue };
        match &mut total_sum {
            Some(t) => {
                if t.dim() != part.dim() {
                    return Err(Error::Dimension("f returned vectors of different lengths".into()));
                }
                t.merge(&part);
            }
            None => total_sum = Some(part),
        }
    }
    Ok(total_sum.map(|s| s.mean()).unwrap_or_default())
}

pub(crate) fn accumulate(acc: &mut Option<VecSum>, x: &[f64]) -> Result<()> {
    let sum = acc.get_or_insert_with(|| VecSum::new(x.len()));
    if sum.dim() != x.len() {
        return Err(Error::Dimension("f returned vectors of different lengths".into()));
    }
    sum.add(x);
    Ok(())
}

/// Pools `f` over `g` as described by `cfg`.
///
/// `id_modulus` is not applied here; wrap `f` in [`IdGin`] for RP-GNN.
pub fn rp_pool<F, R>(g: &Graph, f: &F, cfg: &RpConfig, rng: &mut R) -> Result<Vec<f64>>
where
    F: GraphFunction + ?Sized,
    R: rand::Rng + ?Sized,
{
    cfg.validate(g.n())?;
    let samples = cfg.inference_samples;
    match (cfg.strategy, cfg.k_ary) {
        (Strategy::Exact, None) => rp_exact_joint(g, f),
        (Strategy::Exact, Some(k)) => Ok(kary_rp(g, f, k, KaryMode::Exact, cfg.ignore_isolated, rng)?.value),
        (Strategy::PiSgd, None) => rp_inference(g, f, samples, rng),
        (Strategy::PiSgd, Some(k)) => {
            let mode = if samples == 0 { KaryMode::Exact } else { KaryMode::Sampled { budget: samples } };
            Ok(kary_rp(g, f, k, mode, cfg.ignore_isolated, rng)?.value)
        }
        (Strategy::DfsOrient | Strategy::BfsOrient, k) => {
            let t = if cfg.strategy == Strategy::DfsOrient { Traversal::Dfs } else { Traversal::Bfs };
            poly_canonical(g, f, t, k, samples, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn config_json() {
        let cfg: RpConfig = serde_json::from_str(r#"{"strategy":"pi_sgd","k_ary":3,"inference_samples":5}"#).unwrap();
        assert_eq!(cfg.strategy, Strategy::PiSgd);
        assert_eq!(cfg.k_ary, Some(3));
        assert_eq!(cfg.pool, PoolTarget::Embedding);
        let back: RpConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_guards() {
        let exact = RpConfig::default();
        assert!(exact.validate(9).is_ok());
        assert!(matches!(exact.validate(10), Err(Error::Size(_))));
        let kary = RpConfig { k_ary: Some(4), ..RpConfig::default() };
        assert!(kary.validate(30).is_ok()); // 30·29·28·27 = 657,720
        assert!(matches!(kary.validate(40), Err(Error::Size(_))));
        let sampled = RpConfig { strategy: Strategy::PiSgd, inference_samples: 5, ..RpConfig::default() };
        assert!(sampled.validate(41).is_ok());
        let bad_mod = RpConfig { id_modulus: Some(12), ..sampled.clone() };
        assert!(matches!(bad_mod.validate(11), Err(Error::Config(_))));
        let bad_k = RpConfig { k_ary: Some(0), ..sampled };
        assert!(bad_k.validate(11).is_err());
    }

    #[test]
    fn chunked_mean_is_exact_for_integers() {
        let m = chunked_mean(10_000, |start, len, acc| {
            for r in start..start + len {
                accumulate(acc, &[r as f64, 1.0])?;
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(m, vec![4999.5, 1.0]);
    }

    #[test]
    fn dispatcher_routes() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let f = |g: &Graph| vec![g.adj(0, 1, 0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let exact = rp_pool(&g, &f, &RpConfig::default(), &mut rng).unwrap();
        assert!((exact[0] - 0.5).abs() < 1e-15); // 3 edges of 6 pairs
        let kary = RpConfig { k_ary: Some(2), ..RpConfig::default() };
        assert!((rp_pool(&g, &f, &kary, &mut rng).unwrap()[0] - 0.5).abs() < 1e-15);
        let dfs = RpConfig { strategy: Strategy::DfsOrient, ..RpConfig::default() };
        assert_eq!(rp_pool(&g, &f, &dfs, &mut rng).unwrap(), vec![1.0]);
    }
}
