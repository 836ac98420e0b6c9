use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CslDataset;
use crate::error::{Error, Result};

pub const NUM_FOLDS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    pub seed: u64,
}

/// Stratified 5-fold split: each class's indices are shuffled and dealt into
/// five equal validation groups.
pub fn make_folds(ds: &CslDataset, seed: u64) -> Result<FoldPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![
        Fold {
            train: Vec::new(),
            validation: Vec::new(),
        };
        NUM_FOLDS
    ];
    for class in 0..ds.num_classes() {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        if !members.len().is_multiple_of(NUM_FOLDS) {
            return Err(Error::Data(format!(
                "class {class} has {} graphs, not a multiple of {NUM_FOLDS}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let per = members.len() / NUM_FOLDS;
        for (f, fold) in folds.iter_mut().enumerate() {
            fold.validation.extend_from_slice(&members[f * per..(f + 1) * per]);
        }
    }
    for fold in &mut folds {
        fold.validation.sort_unstable();
        fold.train = (0..ds.len()).filter(|i| fold.validation.binary_search(i).is_err()).collect();
    }
    Ok(FoldPlan { folds, seed })
}
