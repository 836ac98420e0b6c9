use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{make_csl, CslParams, Graph, Permutation};

pub const CSL_VERTICES: usize = 41;
/// Skip lengths; class `c` is `CSL_SKIPS[c]`.
pub const CSL_SKIPS: [usize; 10] = [2, 3, 4, 5, 6, 9, 11, 12, 13, 16];
pub const COPIES_PER_CLASS: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub r_skip: usize,
    /// 0 for the canonical construction, 1.. for permuted copies.
    pub copy: usize,
}

#[derive(Clone, Debug)]
pub struct CslDataset {
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    pub provenance: Vec<Provenance>,
    pub seed: u64,
}

impl CslDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        CSL_SKIPS.len()
    }
}

/// 150 graphs: for each skip length the canonical graph and 14 copies under
/// distinct random relabellings. Copies whose tensor coincides with an
/// earlier one (an automorphism) are redrawn.
pub fn build_csl_dataset(seed: u64) -> Result<CslDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for (class, &r) in CSL_SKIPS.iter().enumerate() {
        let base = make_csl(CslParams::new(CSL_VERTICES, r)?)?;
        let mut copies = vec![base.clone()];
        while copies.len() < COPIES_PER_CLASS {
            let g = base.permute(&Permutation::random(CSL_VERTICES, &mut rng))?;
            if !copies.contains(&g) {
                copies.push(g);
            }
        }
        for (copy, g) in copies.into_iter().enumerate() {
            graphs.push(g);
            labels.push(class);
            provenance.push(Provenance { r_skip: r, copy });
        }
    }
    Ok(CslDataset {
        graphs,
        labels,
        provenance,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wl::wl_fingerprint;

    #[test]
    fn shape_and_classes() {
        let ds = build_csl_dataset(0).unwrap();
        assert_eq!(ds.len(), 150);
        for c in 0..10 {
            assert_eq!(ds.labels.iter().filter(|&&y| y == c).count(), 15);
        }
        assert!(ds.graphs.iter().all(|g| g.n() == 41 && g.is_regular(4)));
        assert_eq!(ds.provenance[0], Provenance { r_skip: 2, copy: 0 });
        assert_eq!(ds.provenance[149], Provenance { r_skip: 16, copy: 14 });
    }

    #[test]
    fn one_wl_class_for_everything() {
        let ds = build_csl_dataset(1).unwrap();
        let f0 = wl_fingerprint(&ds.graphs[0]);
        assert!(ds.graphs.iter().all(|g| wl_fingerprint(g) == f0));
    }

    #[test]
    fn copies_are_distinct_and_seeded() {
        let a = build_csl_dataset(2).unwrap();
        for c in 0..10 {
            let class: Vec<&Graph> = (0..15).map(|i| &a.graphs[c * 15 + i]).collect();
            for i in 0..15 {
                for j in 0..i {
                    assert_ne!(class[i], class[j]);
                }
            }
        }
        let b = build_csl_dataset(2).unwrap();
        assert_eq!(a.graphs, b.graphs);
        let c = build_csl_dataset(3).unwrap();
        assert_ne!(a.graphs, c.graphs);
    }
}
