use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{accumulate, chunked_mean, kary_guard, GraphFunction};
use crate::error::{Error, Result};
use crate::graph::{falling_factorial, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KaryMode {
    /// Every ordered k-tuple of distinct vertices.
    Exact,
    /// `budget` uniformly drawn ordered k-tuples.
    Sampled { budget: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KaryOutput {
    pub value: Vec<f64>,
    /// Calls made to `f`.
    pub evaluations: u64,
    /// Subgraphs averaged over, including ignored ones.
    pub terms: u64,
}

/// The ordered k-tuple of rank `rank` in lexicographic order.
pub(crate) fn tuple_at(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let block = falling_factorial(n - i - 1, k - i - 1).expect("guarded");
        let idx = (rank / block) as usize;
        rank %= block;
        out.push(pool.remove(idx));
    }
    out
}

fn has_isolated_vertex(g: &Graph) -> bool {
    (0..g.n()).any(|u| (0..g.n()).all(|v| v == u || !(g.has_edge(u, v) || g.has_edge(v, u))))
}

/// Pools `f` over induced subgraphs on ordered k-tuples of distinct vertices.
///
/// The average over all `n!/(n-k)!` tuples equals the average over all `n!`
/// permutations of `f` applied to the leading `k × k` block. With
/// `ignore_isolated`, subgraphs containing an isolated vertex count as
/// `f ≡ 0` without calling `f`.
pub fn kary_rp<F, R>(g: &Graph, f: &F, k: usize, mode: KaryMode, ignore_isolated: bool, rng: &mut R) -> Result<KaryOutput>
where
    F: GraphFunction + ?Sized,
    R: Rng + ?Sized,
{
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k = {k} outside [1, {n}]")));
    }
    let evaluations = AtomicU64::new(0);
    let eval = |tuple: &[usize]| -> Result<Option<Vec<f64>>> {
        let sub = g.induced_subgraph(tuple)?;
        if ignore_isolated && has_isolated_vertex(&sub) {
            return Ok(None);
        }
        evaluations.fetch_add(1, Ordering::Relaxed);
        f.eval(&sub).map(Some)
    };
    let terms = match mode {
        KaryMode::Exact => kary_guard(n, k)?,
        KaryMode::Sampled { budget } => {
            if budget == 0 {
                return Err(Error::Parameter("sampling budget must be positive".into()));
            }
            budget as u64
        }
    };
    let mean_of_evaluated = match mode {
        KaryMode::Exact => chunked_mean(terms, |start, len, acc| {
            for rank in start..start + len {
                if let Some(v) = eval(&tuple_at(n, k, rank))? {
                    accumulate(acc, &v)?;
                }
            }
            Ok(())
        })?,
        KaryMode::Sampled { budget } => {
            let mut pool: Vec<usize> = (0..n).collect();
            let tuples: Vec<Vec<usize>> = (0..budget)
                .map(|_| pool.partial_shuffle(rng, k).0.to_vec())
                .collect();
            chunked_mean(terms, |start, len, acc| {
                for t in &tuples[start as usize..(start + len) as usize] {
                    if let Some(v) = eval(t)? {
                        accumulate(acc, &v)?;
                    }
                }
                Ok(())
            })?
        }
    };
    let evaluations = evaluations.into_inner();
    if evaluations == 0 {
        return Err(Error::Usage("every k-subgraph was ignored; f was never evaluated".into()));
    }
    let kept = evaluations as f64 / terms as f64;
    Ok(KaryOutput {
        value: mean_of_evaluated.into_iter().map(|x| x * kept).collect(),
        evaluations,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rp::rp_exact_joint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tuples_are_lexicographic_and_complete() {
        let all: Vec<Vec<usize>> = (0..60).map(|r| tuple_at(5, 3, r)).collect();
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[1], vec![0, 1, 3]);
        assert_eq!(all[59], vec![4, 3, 2]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn full_k_matches_joint() {
        let mut g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 1)]).unwrap();
        g.set_vfeat_row(2, &[4.0]).unwrap();
        let f = |g: &Graph| {
            let v = g.vec();
            vec![v.iter().enumerate().map(|(i, x)| x * (i as f64).cos()).sum::<f64>().tanh()]
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let k = kary_rp(&g, &f, 4, KaryMode::Exact, false, &mut rng).unwrap();
        assert_eq!(k.evaluations, 24);
        let j = rp_exact_joint(&g, &f).unwrap();
        assert!((k.value[0] - j[0]).abs() < 1e-12);
    }

    #[test]
    fn ignoring_isolated_subgraphs() {
        // Path 0-1-2 plus isolated 3: with k = 2, only the 4 ordered edge pairs of 12 are kept.
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let f = |_: &Graph| vec![1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = kary_rp(&g, &f, 2, KaryMode::Exact, true, &mut rng).unwrap();
        assert_eq!((out.evaluations, out.terms), (4, 12));
        assert!((out.value[0] - 4.0 / 12.0).abs() < 1e-15);
        let plain = kary_rp(&g, &f, 2, KaryMode::Exact, false, &mut rng).unwrap();
        assert_eq!(plain.evaluations, 12);
        let empty = Graph::from_edges(3, &[]).unwrap();
        assert!(kary_rp(&empty, &f, 2, KaryMode::Exact, true, &mut rng).is_err());
    }

    #[test]
    fn sampled_mode_uses_budget_and_distinct_vertices() {
        let g = Graph::from_edges(6, &[(0, 1), (2, 3)]).unwrap();
        let f = |s: &Graph| vec![s.n() as f64];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = kary_rp(&g, &f, 3, KaryMode::Sampled { budget: 40 }, false, &mut rng).unwrap();
        assert_eq!(out.evaluations, 40);
        assert_eq!(out.value, vec![3.0]);
        assert!(kary_rp(&g, &f, 3, KaryMode::Sampled { budget: 0 }, false, &mut rng).is_err());
        assert!(kary_rp(&g, &f, 7, KaryMode::Exact, false, &mut rng).is_err());
    }

    #[test]
    fn sampled_tuples_cover_uniformly() {
        // Edge density of sampled 2-subgraphs approaches the exact value.
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let f = |s: &Graph| vec![s.adj(0, 1, 0)];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let exact = kary_rp(&g, &f, 2, KaryMode::Exact, false, &mut rng).unwrap().value[0];
        assert!((exact - 0.3).abs() < 1e-15);
        let est = kary_rp(&g, &f, 2, KaryMode::Sampled { budget: 20_000 }, false, &mut rng).unwrap().value[0];
        let se = (0.3f64 * 0.7 / 20_000.0).sqrt();
        assert!((est - exact).abs() < 4.0 * se);
    }
}
