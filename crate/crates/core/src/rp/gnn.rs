use rand::Rng;

use super::exact::{monte_carlo, MonteCarlo};
use super::{chunked_mean, GraphFunction, ENUMERATION_GUARD};
use crate::error::{Error, Result};
use crate::gin::GinModel;
use crate::graph::{next_permutation, Graph, Permutation};
use crate::nn::{Matrix, ParamStore};
use crate::stats::VecSum;

const BATCH: u64 = 256;

/// GIN applied to a graph whose vertices carry one-hot IDs `i mod m` in row
/// order. Averaging it over permutations of the input is RP-GIN.
#[derive(Clone, Copy)]
pub struct IdGin<'a> {
    pub model: &'a GinModel,
    pub store: &'a ParamStore,
    pub modulus: usize,
    /// Return class logits rather than the graph embedding.
    pub logits: bool,
}

impl<'a> IdGin<'a> {
    pub fn embedding(model: &'a GinModel, store: &'a ParamStore, modulus: usize) -> Self {
        Self { model, store, modulus, logits: false }
    }

    pub fn logits(model: &'a GinModel, store: &'a ParamStore, modulus: usize) -> Self {
        Self { model, store, modulus, logits: true }
    }
}

impl GraphFunction for IdGin<'_> {
    fn eval(&self, g: &Graph) -> Result<Vec<f64>> {
        let x = g.augment_onehot_ids(&Permutation::identity(g.n()), self.modulus)?;
        let e = self.model.graph_embeddings(self.store, &[&x])?.into_vec();
        if self.logits {
            self.model.head_logits(self.store, &e)
        } else {
            Ok(e)
        }
    }
}

fn check_modulus(n: usize, modulus: usize) -> Result<()> {
    if modulus == 0 || modulus > n {
        return Err(Error::Parameter(format!("ID modulus {modulus} outside [1, {n}]")));
    }
    Ok(())
}

/// Number of distinct maps `V → Z_m` of the form `i ↦ π(i) mod m`: the
/// multinomial `n! / Π_r c_r!` built as a product of binomials.
fn pattern_count(n: usize, modulus: usize) -> Option<u64> {
    let mut count: u128 = 1;
    let mut remaining = n as u128;
    for r in 0..modulus {
        let c = (0..n).filter(|i| i % modulus == r).count() as u128;
        let mut binom: u128 = 1;
        for j in 0..c {
            binom = binom.checked_mul(remaining - j)? / (j + 1);
        }
        count = count.checked_mul(binom)?;
        remaining -= c;
    }
    u64::try_from(count).ok()
}

/// Every distinct ID assignment `vertex → π(vertex) mod m`, in lexicographic
/// order. Each arises from the same number of permutations, so the uniform
/// average over patterns equals the average over all `n!` permutations.
pub fn id_patterns(n: usize, modulus: usize) -> Result<Vec<Vec<usize>>> {
    check_modulus(n, modulus)?;
    match pattern_count(n, modulus) {
        Some(c) if c <= ENUMERATION_GUARD => {}
        _ => {
            return Err(Error::Size(format!(
                "ID patterns for n = {n}, modulus {modulus} exceed {ENUMERATION_GUARD}; use rp_gnn_sampled"
            )))
        }
    }
    let mut cur: Vec<usize> = (0..n).map(|i| i % modulus).collect();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    Ok(out)
}

fn with_ids(g: &Graph, ids: &[usize], modulus: usize) -> Result<Graph> {
    let d = g.d_v() + modulus;
    let mut vfeat = vec![0.0; g.n() * d];
    for (i, &id) in ids.iter().enumerate() {
        let row = &mut vfeat[i * d..(i + 1) * d];
        row[..g.d_v()].copy_from_slice(g.vfeat_row(i));
        row[g.d_v() + id] = 1.0;
    }
    Graph::from_parts(g.n(), g.d_e(), d, g.adj_tensor().to_vec(), vfeat)
}

fn embed_rows(model: &GinModel, store: &ParamStore, graphs: &[Graph]) -> Result<Matrix> {
    let refs: Vec<&Graph> = graphs.iter().collect();
    model.graph_embeddings(store, &refs)
}

/// Exact RP-GIN embedding: the tensor stays fixed and the ID block runs over
/// every distinct residue pattern.
pub fn rp_gnn_exact(g: &Graph, model: &GinModel, store: &ParamStore, modulus: usize) -> Result<Vec<f64>> {
    let patterns = id_patterns(g.n(), modulus)?;
    chunked_mean(patterns.len() as u64, |start, len, acc| {
        let mut lo = start;
        while lo < start + len {
            let hi = (lo + BATCH).min(start + len);
            let graphs = patterns[lo as usize..hi as usize]
                .iter()
                .map(|ids| with_ids(g, ids, modulus))
                .collect::<Result<Vec<_>>>()?;
            let emb = embed_rows(model, store, &graphs)?;
            let sum = acc.get_or_insert_with(|| VecSum::new(emb.cols()));
            for r in 0..emb.rows() {
                sum.add(emb.row(r));
            }
            lo = hi;
        }
        Ok(())
    })
}

/// Monte-Carlo RP-GIN embedding over `samples` uniform permutations.
pub fn rp_gnn_sampled<R: Rng + ?Sized>(
    g: &Graph,
    model: &GinModel,
    store: &ParamStore,
    modulus: usize,
    samples: usize,
    rng: &mut R,
) -> Result<MonteCarlo> {
    check_modulus(g.n(), modulus)?;
    if samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let graphs = (0..samples)
        .map(|_| g.augment_onehot_ids(&Permutation::random(g.n(), rng), modulus))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(samples);
    for chunk in graphs.chunks(BATCH as usize) {
        let emb = embed_rows(model, store, chunk)?;
        rows.extend((0..emb.rows()).map(|r| emb.row(r).to_vec()));
    }
    monte_carlo(&rows)
}
