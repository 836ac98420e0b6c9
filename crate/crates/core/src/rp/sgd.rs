use rand::Rng;

use super::{rp_exact_joint, rp_gnn_exact, GraphFunction};
use crate::error::{Error, Result};
use crate::gin::{GinModel, GraphBatch};
use crate::graph::{Graph, Permutation};
use crate::nn::{cross_entropy, softmax, Adam, ParamStore, Tape, Var};

/// A GIN trained with π-SGD. With an ID modulus the input gets one-hot IDs
/// `π(i) mod m` (RP-GIN); without one it is the plain GIN and permutations
/// have no effect.
#[derive(Clone, Debug)]
pub struct RpGin {
    pub model: GinModel,
    pub id_modulus: Option<usize>,
}

impl RpGin {
    pub fn new(model: GinModel, id_modulus: Option<usize>) -> Self {
        Self { model, id_modulus }
    }

    /// The network input for `g` under ID assignment `p`.
    pub fn input_graph(&self, g: &Graph, p: &Permutation) -> Result<Graph> {
        match self.id_modulus {
            Some(m) => g.augment_onehot_ids(p, m),
            None => Ok(g.clone()),
        }
    }

    /// Mean cross-entropy of the batch under the given permutations.
    pub fn loss(&self, tape: &mut Tape, store: &ParamStore, batch: &[(&Graph, usize)], perms: &[Permutation]) -> Result<Var> {
        if batch.is_empty() {
            return Err(Error::Usage("empty training batch".into()));
        }
        if perms.len() != batch.len() {
            return Err(Error::Dimension(format!("{} permutations for {} graphs", perms.len(), batch.len())));
        }
        let inputs = batch
            .iter()
            .zip(perms)
            .map(|((g, _), p)| self.input_graph(g, p))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Graph> = inputs.iter().collect();
        let labels: Vec<usize> = batch.iter().map(|(_, y)| *y).collect();
        let out = self.model.forward(tape, store, &GraphBatch::new(&refs)?)?;
        tape.softmax_cross_entropy(out.logits, &labels)
    }

    /// Class probabilities per graph. Graph embeddings are averaged over
    /// `samples` random ID assignments before the head; `samples == 0` uses
    /// the exact average. Without IDs this is a single pass.
    pub fn predict<R: Rng + ?Sized>(&self, store: &ParamStore, graphs: &[&Graph], samples: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let embeddings: Vec<Vec<f64>> = match self.id_modulus {
            None => {
                let e = self.model.graph_embeddings(store, graphs)?;
                (0..e.rows()).map(|r| e.row(r).to_vec()).collect()
            }
            Some(m) if samples == 0 => graphs
                .iter()
                .map(|g| rp_gnn_exact(g, &self.model, store, m))
                .collect::<Result<_>>()?,
            Some(m) => {
                let mut inputs = Vec::with_capacity(graphs.len() * samples);
                for g in graphs {
                    for _ in 0..samples {
                        inputs.push(g.augment_onehot_ids(&Permutation::random(g.n(), rng), m)?);
                    }
                }
                let refs: Vec<&Graph> = inputs.iter().collect();
                let e = self.model.graph_embeddings(store, &refs)?;
                (0..graphs.len())
                    .map(|b| {
                        let mut mean = vec![0.0; e.cols()];
                        for s in 0..samples {
                            for (acc, x) in mean.iter_mut().zip(e.row(b * samples + s)) {
                                *acc += x;
                            }
                        }
                        mean.iter_mut().for_each(|x| *x /= samples as f64);
                        mean
                    })
                    .collect()
            }
        };
        embeddings
            .iter()
            .map(|e| Ok(softmax(&self.model.head_logits(store, e)?)))
            .collect()
    }
}

/// One optimiser step on the batch with the given permutations. Returns the
/// batch loss before the update.
pub fn pi_sgd_step_with(
    model: &RpGin,
    store: &mut ParamStore,
    adam: &Adam,
    batch: &[(&Graph, usize)],
    perms: &[Permutation],
) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = model.loss(&mut tape, store, batch, perms)?;
    tape.backward(loss)?;
    store.accumulate_grads(&tape);
    adam.step(store);
    Ok(tape.value(loss).item())
}

/// One π-SGD step: an independent uniform permutation per graph.
pub fn pi_sgd_train_step<R: Rng + ?Sized>(
    model: &RpGin,
    store: &mut ParamStore,
    adam: &Adam,
    batch: &[(&Graph, usize)],
    rng: &mut R,
) -> Result<f64> {
    let perms: Vec<Permutation> = batch.iter().map(|(g, _)| Permutation::random(g.n(), rng)).collect();
    pi_sgd_step_with(model, store, adam, batch, &perms)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateLosses {
    /// Mean over permutations of the loss of each permutation's logits.
    pub j_bar: f64,
    /// Loss of the permutation-averaged logits.
    pub l_bar: f64,
}

/// Both sides of the π-SGD surrogate bound for one labelled graph, by exact
/// enumeration. `f` must return class logits.
pub fn exact_surrogate_losses<F: GraphFunction + ?Sized>(g: &Graph, label: usize, f: &F) -> Result<SurrogateLosses> {
    let with_loss = |h: &Graph| -> Result<Vec<f64>> {
        let mut z = f.eval(h)?;
        if label >= z.len() {
            return Err(Error::Data(format!("label {label} with {} classes", z.len())));
        }
        let l = cross_entropy(&z, label);
        z.push(l);
        Ok(z)
    };
    struct Wrap<'a>(&'a (dyn Fn(&Graph) -> Result<Vec<f64>> + Sync));
    impl GraphFunction for Wrap<'_> {
        fn eval(&self, g: &Graph) -> Result<Vec<f64>> {
            (self.0)(g)
        }
    }
    let mut mean = rp_exact_joint(g, &Wrap(&with_loss))?;
    let j_bar = mean.pop().expect("loss component");
    Ok(SurrogateLosses {
        j_bar,
        l_bar: cross_entropy(&mean, label),
    })
}
