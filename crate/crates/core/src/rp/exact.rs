use rand::Rng;
use rayon::prelude::*;

use super::{accumulate, chunked_mean, joint_guard, GraphFunction, ENUMERATION_GUARD};
use crate::error::{Error, Result};
use crate::graph::{factorial, BipartiteGraph, Graph, Permutation};
use crate::stats::VecSum;

/// `(1/n!) Σ_π f(permute(g, π))`, for `n ≤ 9`.
pub fn rp_exact_joint<F: GraphFunction + ?Sized>(g: &Graph, f: &F) -> Result<Vec<f64>> {
    joint_guard(g.n())?;
    let total = factorial(g.n()).expect("guarded");
    chunked_mean(total, |start, len, acc| {
        let mut p = Permutation::unrank(g.n(), start)?;
        for _ in 0..len {
            accumulate(acc, &f.eval(&g.permute(&p)?)?)?;
            p.next_lexicographic();
        }
        Ok(())
    })
}

/// Average over independent row and column permutations of a bipartite
/// graph, for `|V_r|!·|V_c|! ≤ 10^6`.
pub fn rp_exact_separate<F>(g: &BipartiteGraph, f: &F) -> Result<Vec<f64>>
where
    F: Fn(&BipartiteGraph) -> Vec<f64> + Sync,
{
    let (r, c) = (g.rows(), g.cols());
    let total = factorial(r)
        .zip(factorial(c))
        .and_then(|(a, b)| a.checked_mul(b))
        .filter(|&t| t <= ENUMERATION_GUARD)
        .ok_or_else(|| {
            Error::Size(format!(
                "separate pooling over {r}!·{c}! permutation pairs exceeds the {ENUMERATION_GUARD} limit"
            ))
        })?;
    let col_count = factorial(c).expect("guarded");
    chunked_mean(total, |start, len, acc| {
        for rank in start..start + len {
            let rp = Permutation::unrank(r, rank / col_count)?;
            let cp = Permutation::unrank(c, rank % col_count)?;
            accumulate(acc, &f(&g.permute(&rp, &cp)?))?;
        }
        Ok(())
    })
}

/// One-permutation estimate `f(permute(g, s))` with `s` uniform.
pub fn pi_sgd_sample<F, R>(g: &Graph, f: &F, rng: &mut R) -> Result<Vec<f64>>
where
    F: GraphFunction + ?Sized,
    R: Rng + ?Sized,
{
    f.eval(&g.permute(&Permutation::random(g.n(), rng))?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarlo {
    pub mean: Vec<f64>,
    /// Per-component standard error of the mean (0 for a single sample).
    pub std_err: Vec<f64>,
    pub samples: usize,
}

/// Mean and standard error of `f` over `samples` iid uniform permutations.
///
/// Permutations are drawn from `rng` up front so the result does not depend
/// on how evaluation is scheduled.
pub fn rp_sample_mean<F, R>(g: &Graph, f: &F, samples: usize, rng: &mut R) -> Result<MonteCarlo>
where
    F: GraphFunction + ?Sized,
    R: Rng + ?Sized,
{
    if samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let perms: Vec<Permutation> = (0..samples).map(|_| Permutation::random(g.n(), rng)).collect();
    let values = perms
        .par_iter()
        .map(|p| f.eval(&g.permute(p)?))
        .collect::<Result<Vec<_>>>()?;
    monte_carlo(&values)
}

pub(crate) fn monte_carlo(values: &[Vec<f64>]) -> Result<MonteCarlo> {
    let dim = values[0].len();
    let mut acc = None;
    for v in values {
        accumulate(&mut acc, v)?;
    }
    let mean = acc.map(|a: VecSum| a.mean()).unwrap_or_default();
    let m = values.len();
    let std_err = (0..dim)
        .map(|j| {
            if m < 2 {
                return 0.0;
            }
            let ss: f64 = values.iter().map(|v| (v[j] - mean[j]).powi(2)).sum();
            (ss / (m - 1) as f64 / m as f64).sqrt()
        })
        .collect();
    Ok(MonteCarlo { mean, std_err, samples: m })
}

/// Inference-time pooling: the mean over `samples` random permutations, or
/// the exact average when `samples == 0`.
pub fn rp_inference<F, R>(g: &Graph, f: &F, samples: usize, rng: &mut R) -> Result<Vec<f64>>
where
    F: GraphFunction + ?Sized,
    R: Rng + ?Sized,
{
    if samples == 0 {
        rp_exact_joint(g, f)
    } else {
        Ok(rp_sample_mean(g, f, samples, rng)?.mean)
    }
}
