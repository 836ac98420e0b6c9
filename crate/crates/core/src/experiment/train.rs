use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CslDataset, FoldPlan};
use crate::error::{Error, Result};
use crate::gin::{GinConfig, GinModel};
use crate::graph::{Graph, Permutation};
use crate::nn::{Adam, ParamStore};
use crate::rp::{pi_sgd_step_with, Resample, RpGin};
use crate::stats::{mean, Summary};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// GIN on the constant vertex feature.
    Gin,
    /// GIN with one-hot `π(i) mod m` IDs, trained with π-SGD.
    #[default]
    RpGin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub epochs: usize,
    pub lr: f64,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub id_modulus: usize,
    pub inference_samples: usize,
    /// Random initialisations per fold.
    pub init_seeds: usize,
    /// Base seed for initialisation and permutation sampling.
    pub seed: u64,
    pub resample: Resample,
    pub num_layers: usize,
    pub mlp_hidden: usize,
    pub embed_dim: usize,
    /// ReLU on each GIN layer's output as well as its hidden layers.
    pub activate_layer_output: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::RpGin,
            epochs: 1000,
            lr: 0.001,
            batch_size: Some(4),
            id_modulus: 10,
            inference_samples: 5,
            init_seeds: 5,
            seed: 0,
            resample: Resample::PerEpoch,
            num_layers: 5,
            mlp_hidden: 16,
            embed_dim: 16,
            activate_layer_output: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, ds: &CslDataset) -> Result<()> {
        let n = ds.graphs.iter().map(Graph::n).min().unwrap_or(0);
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.init_seeds == 0 {
            return Err(Error::Config("need at least one initialisation seed".into()));
        }
        if self.model == ModelKind::RpGin {
            if self.id_modulus == 0 || self.id_modulus > n {
                return Err(Error::Config(format!("ID modulus {} outside [1, {n}]", self.id_modulus)));
            }
            if self.inference_samples == 0 {
                return Err(Error::Config("RP-GIN inference needs at least one sample".into()));
            }
        }
        self.gin_config(ds.num_classes()).validate()
    }

    pub fn gin_config(&self, num_classes: usize) -> GinConfig {
        let rp = self.model == ModelKind::RpGin;
        GinConfig {
            num_layers: self.num_layers,
            mlp_hidden: self.mlp_hidden,
            embed_dim: self.embed_dim,
            num_classes,
            input_dim: if rp { 1 + self.id_modulus } else { 1 },
            use_input_embedding_mlp: !rp,
            activate_layer_output: self.activate_layer_output,
            ..GinConfig::default()
        }
    }

    fn id_modulus(&self) -> Option<usize> {
        (self.model == ModelKind::RpGin).then_some(self.id_modulus)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub fold: usize,
    pub seed: usize,
    /// Validation accuracy in percent.
    pub accuracy: f64,
    pub train_loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config: TrainConfig,
    pub data_seed: u64,
    pub folds_seed: u64,
    pub runs: Vec<RunRecord>,
    /// Over every fold × seed run.
    pub by_run: Summary,
    /// Over per-fold mean accuracies.
    pub by_fold: Summary,
    pub wall_clock_secs: f64,
}

impl RunReport {
    pub fn from_runs(config: TrainConfig, data_seed: u64, folds_seed: u64, runs: Vec<RunRecord>, wall_clock_secs: f64) -> Self {
        let (by_run, by_fold) = aggregates(&runs);
        Self {
            config,
            data_seed,
            folds_seed,
            runs,
            by_run,
            by_fold,
            wall_clock_secs,
        }
    }

    /// Mean accuracy of each fold, in fold order.
    pub fn fold_means(&self) -> Vec<f64> {
        fold_means(&self.runs)
    }
}

pub(crate) fn fold_means(runs: &[RunRecord]) -> Vec<f64> {
    let folds = runs.iter().map(|r| r.fold + 1).max().unwrap_or(0);
    (0..folds)
        .map(|f| {
            let acc: Vec<f64> = runs.iter().filter(|r| r.fold == f).map(|r| r.accuracy).collect();
            mean(&acc)
        })
        .collect()
}

pub(crate) fn aggregates(runs: &[RunRecord]) -> (Summary, Summary) {
    let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    (Summary::of(&acc), Summary::of(&fold_means(runs)))
}

/// Percentage of `predicted[i] == labels[i]`.
pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    assert_eq!(predicted.len(), labels.len());
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    100.0 * hits as f64 / labels.len() as f64
}

/// `m[true][predicted]` counts.
pub fn confusion_matrix(predicted: &[usize], labels: &[usize], classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &y) in predicted.iter().zip(labels) {
        m[y][p] += 1;
    }
    m
}

/// Index of the largest entry; the first one on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(base: u64, fold: usize, seed: usize, purpose: u64) -> u64 {
    mix(mix(mix(base ^ purpose) ^ fold as u64) ^ seed as u64)
}

/// A model trained on one fold with one initialisation.
pub struct TrainedRun {
    pub model: RpGin,
    pub store: ParamStore,
    pub record: RunRecord,
}

/// Trains on `fold`'s training split and scores its validation split.
pub fn train_fold(ds: &CslDataset, plan: &FoldPlan, fold: usize, seed: usize, cfg: &TrainConfig) -> Result<TrainedRun> {
    cfg.validate(ds)?;
    let split = plan
        .folds
        .get(fold)
        .ok_or_else(|| Error::Config(format!("fold {fold} not in plan of {}", plan.folds.len())))?;
    let start = Instant::now();
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, fold, seed, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, fold, seed, 2));
    let mut store = ParamStore::new();
    let gin = GinModel::new(cfg.gin_config(ds.num_classes()), &mut store, &mut init_rng)?;
    let model = RpGin::new(gin, cfg.id_modulus());
    let adam = Adam::with_lr(cfg.lr);

    let mut order = split.train.clone();
    let batch_size = cfg.batch_size.unwrap_or(order.len()).min(order.len());
    let draw = |g: &Graph, rng: &mut ChaCha8Rng| match model.id_modulus {
        Some(_) => Permutation::random(g.n(), rng),
        None => Permutation::identity(g.n()),
    };
    let mut train_loss = f64::NAN;
    for _ in 0..cfg.epochs {
        let mut perms: Vec<Option<Permutation>> = vec![None; ds.len()];
        if cfg.resample == Resample::PerEpoch {
            for &i in &split.train {
                perms[i] = Some(draw(&ds.graphs[i], &mut rng));
            }
        }
        if batch_size < order.len() {
            order.shuffle(&mut rng);
        }
        let mut losses = Vec::new();
        for chunk in order.chunks(batch_size) {
            let batch: Vec<(&Graph, usize)> = chunk.iter().map(|&i| (&ds.graphs[i], ds.labels[i])).collect();
            let step_perms: Vec<Permutation> = chunk
                .iter()
                .map(|&i| perms[i].clone().unwrap_or_else(|| draw(&ds.graphs[i], &mut rng)))
                .collect();
            losses.push(pi_sgd_step_with(&model, &mut store, &adam, &batch, &step_perms)?);
        }
        train_loss = mean(&losses);
        if !train_loss.is_finite() {
            return Err(Error::Data(format!("training diverged on fold {fold}, seed {seed}")));
        }
    }

    let val: Vec<&Graph> = split.validation.iter().map(|&i| &ds.graphs[i]).collect();
    let labels: Vec<usize> = split.validation.iter().map(|&i| ds.labels[i]).collect();
    let probs = model.predict(&store, &val, cfg.inference_samples, &mut rng)?;
    let predicted: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let record = RunRecord {
        fold,
        seed,
        accuracy: accuracy(&predicted, &labels),
        train_loss,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(TrainedRun { model, store, record })
}

/// Every fold × initialisation seed, run in parallel.
pub fn run_experiment(ds: &CslDataset, plan: &FoldPlan, cfg: &TrainConfig) -> Result<RunReport> {
    cfg.validate(ds)?;
    let start = Instant::now();
    let jobs: Vec<(usize, usize)> = (0..plan.folds.len())
        .flat_map(|f| (0..cfg.init_seeds).map(move |s| (f, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(f, s)| train_fold(ds, plan, f, s, cfg).map(|t| t.record))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport::from_runs(
        cfg.clone(),
        ds.seed,
        plan.seed,
        runs,
        start.elapsed().as_secs_f64(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{build_csl_dataset, make_folds};

    #[test]
    fn accuracy_matches_confusion_oracle() {
        let labels = [0, 0, 1, 1, 2, 2, 2, 1];
        let predicted = [0, 1, 1, 1, 2, 0, 2, 2];
        let m = confusion_matrix(&predicted, &labels, 3);
        assert_eq!(m, vec![vec![1, 1, 0], vec![0, 2, 1], vec![1, 0, 2]]);
        let diag: usize = (0..3).map(|c| m[c][c]).sum();
        assert_eq!(accuracy(&predicted, &labels), 100.0 * diag as f64 / 8.0);
    }

    #[test]
    fn argmax_takes_first_on_ties() {
        assert_eq!(argmax(&[0.1, 0.1, 0.1]), 0);
        assert_eq!(argmax(&[0.1, 0.3, 0.3]), 1);
    }

    #[test]
    fn config_errors_precede_training() {
        let ds = build_csl_dataset(0).unwrap();
        let plan = make_folds(&ds, 0).unwrap();
        for bad in [
            TrainConfig { lr: 0.0, ..TrainConfig::default() },
            TrainConfig { id_modulus: 42, ..TrainConfig::default() },
            TrainConfig { batch_size: Some(0), ..TrainConfig::default() },
            TrainConfig { init_seeds: 0, ..TrainConfig::default() },
            TrainConfig { inference_samples: 0, ..TrainConfig::default() },
            TrainConfig { num_layers: 0, ..TrainConfig::default() },
        ] {
            assert!(matches!(run_experiment(&ds, &plan, &bad), Err(Error::Config(_))));
        }
    }

    #[test]
    fn untrained_gin_scores_ten_percent() {
        let ds = build_csl_dataset(0).unwrap();
        let plan = make_folds(&ds, 0).unwrap();
        let cfg = TrainConfig {
            model: ModelKind::Gin,
            epochs: 0,
            init_seeds: 2,
            ..TrainConfig::default()
        };
        let report = run_experiment(&ds, &plan, &cfg).unwrap();
        assert_eq!(report.runs.len(), 10);
        assert!(report.runs.iter().all(|r| r.accuracy == 10.0));
        assert_eq!(report.by_run.sd, 0.0);
    }

    #[test]
    fn seeds_are_independent_streams() {
        let a = derive_seed(0, 0, 1, 1);
        let b = derive_seed(0, 1, 0, 1);
        let c = derive_seed(0, 0, 1, 2);
        assert!(a != b && a != c && b != c);
    }
}
