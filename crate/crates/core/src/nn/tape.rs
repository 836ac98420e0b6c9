//! Reverse-mode automatic differentiation over 2-D matrices.
//!
//! A [`Tape`] records every operation as a node whose parents have smaller
//! indices, so walking the node list backwards is a reverse topological
//! order. [`Var`] is a cheap handle into the tape.

use std::sync::Arc;

use super::matrix::Matrix;
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Neighbour lists for the constant sparse operator `out[u] = Σ_{v ∈ N(u)} x[v]`.
pub type NeighborLists = Arc<Vec<Vec<usize>>>;

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    MulScalar(Var, Var),
    Relu(Var),
    NeighborSum(Var, NeighborLists),
    SegmentSum(Var, Arc<Vec<usize>>),
    ConcatCols(Vec<Var>),
    Sum(Var),
    SoftmaxCrossEntropy(Var, Vec<usize>, Matrix),
}

struct Node {
    value: Matrix,
    op: Op,
    param: Option<ParamId>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    /// Accumulated gradients of leaves, indexed like `nodes`.
    leaf_grads: Vec<Option<Matrix>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, param: Option<ParamId>) -> Var {
        self.nodes.push(Node { value, op, param });
        self.leaf_grads.push(None);
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// A leaf that participates in differentiation but is not a parameter.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, None)
    }

    /// A leaf bound to a stored parameter; its gradient can be collected
    /// with [`ParamStore::accumulate_grads`].
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Leaf, Some(id))
    }

    /// Accumulated gradient of a leaf (zeros if none has reached it yet).
    pub fn grad(&self, v: Var) -> Matrix {
        match &self.leaf_grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shape(v);
                Matrix::zeros(r, c)
            }
        }
    }

    pub(crate) fn param_grads(&self) -> impl Iterator<Item = (ParamId, &Matrix)> + '_ {
        self.nodes
            .iter()
            .zip(&self.leaf_grads)
            .filter_map(|(node, g)| Some((node.param?, g.as_ref()?)))
    }

    pub fn zero_grads(&mut self) {
        self.leaf_grads.iter_mut().for_each(|g| *g = None);
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b), None))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Dimension(format!(
                "add of {:?} and {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        Ok(self.push(value, Op::Add(a, b), None))
    }

    /// Adds the `1 × c` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (_, c) = self.shape(a);
        if self.shape(bias) != (1, c) {
            return Err(Error::Dimension(format!(
                "bias of shape {:?} for {:?}",
                self.shape(bias),
                self.shape(a)
            )));
        }
        let mut value = self.value(a).clone();
        let b = self.value(bias).as_slice().to_vec();
        for r in 0..value.rows() {
            for (x, y) in value.row_mut(r).iter_mut().zip(&b) {
                *x += y;
            }
        }
        Ok(self.push(value, Op::AddRow(a, bias), None))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let mut value = self.value(a).clone();
        value.scale_assign(c);
        self.push(value, Op::Scale(a, c), None)
    }

    /// Multiplies `a` by the `1 × 1` variable `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.shape(s) != (1, 1) {
            return Err(Error::Dimension(format!("scalar factor has shape {:?}", self.shape(s))));
        }
        let mut value = self.value(a).clone();
        value.scale_assign(self.value(s).item());
        Ok(self.push(value, Op::MulScalar(a, s), None))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for x in value.as_mut_slice() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        self.push(value, Op::Relu(a), None)
    }

    /// `out[u] = Σ_{v ∈ lists[u]} a[v]` (rows).
    pub fn neighbor_sum(&mut self, a: Var, lists: NeighborLists) -> Result<Var> {
        let x = self.value(a);
        if lists.len() != x.rows() {
            return Err(Error::Dimension(format!(
                "{} neighbour lists for {} rows",
                lists.len(),
                x.rows()
            )));
        }
        if lists.iter().flatten().any(|&v| v >= x.rows()) {
            return Err(Error::Dimension("neighbour index out of range".into()));
        }
        let mut value = Matrix::zeros(x.rows(), x.cols());
        for (u, nb) in lists.iter().enumerate() {
            for &v in nb {
                for (o, y) in value.row_mut(u).iter_mut().zip(x.row(v)) {
                    *o += y;
                }
            }
        }
        Ok(self.push(value, Op::NeighborSum(a, lists), None))
    }

    /// Sums rows into `num_segments` groups; row `r` goes to `segment[r]`.
    pub fn segment_sum(&mut self, a: Var, segment: Arc<Vec<usize>>, num_segments: usize) -> Result<Var> {
        let x = self.value(a);
        if segment.len() != x.rows() || segment.iter().any(|&s| s >= num_segments) {
            return Err(Error::Dimension(format!(
                "segment map of length {} for {} rows and {num_segments} segments",
                segment.len(),
                x.rows()
            )));
        }
        let mut value = Matrix::zeros(num_segments, x.cols());
        for (r, &s) in segment.iter().enumerate() {
            for (o, y) in value.row_mut(s).iter_mut().zip(x.row(r)) {
                *o += y;
            }
        }
        Ok(self.push(value, Op::SegmentSum(a, segment), None))
    }

    /// Column sums as a `1 × c` row.
    pub fn row_sum(&mut self, a: Var) -> Var {
        let rows = self.shape(a).0;
        self.segment_sum(a, Arc::new(vec![0; rows]), 1)
            .expect("single segment is always valid")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Dimension("concat of zero tensors".into()));
        };
        let rows = self.shape(first).0;
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(Error::Dimension("concat of tensors with different row counts".into()));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut value = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                value.row_mut(r)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), None))
    }

    /// Sum of all entries as a `1 × 1` variable.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).as_slice().iter().sum();
        self.push(Matrix::scalar(s), Op::Sum(a), None)
    }

    /// Mean over rows of `-log softmax(logits[b])[labels[b]]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let z = self.value(logits);
        if z.rows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} rows of logits",
                labels.len(),
                z.rows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= z.cols()) {
            return Err(Error::Data(format!("label {bad} with {} classes", z.cols())));
        }
        let mut probs = Matrix::zeros(z.rows(), z.cols());
        let mut loss = 0.0;
        for (b, &y) in labels.iter().enumerate() {
            let row = softmax(z.row(b));
            loss -= log_softmax(z.row(b), y);
            probs.row_mut(b).copy_from_slice(&row);
        }
        let value = Matrix::scalar(loss / labels.len().max(1) as f64);
        Ok(self.push(value, Op::SoftmaxCrossEntropy(logits, labels.to_vec(), probs), None))
    }

    /// Backpropagates from the scalar `loss`, adding d(loss)/d(leaf) into
    /// every leaf gradient. Repeated calls accumulate.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::Usage(format!(
                "backward needs a scalar root, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    match &mut self.leaf_grads[idx] {
                        Some(acc) => acc.add_assign(&g),
                        slot @ None => *slot = Some(g),
                    }
                    continue;
                }
                Op::MatMul(a, b) => {
                    let da = g.matmul_t(self.value(*b));
                    let db = self.value(*a).t_matmul(&g);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, g.clone());
                    accumulate(&mut grads, *a, g);
                }
                Op::AddRow(a, bias) => {
                    accumulate(&mut grads, *bias, g.column_sums());
                    accumulate(&mut grads, *a, g);
                }
                Op::Scale(a, c) => {
                    let mut da = g;
                    da.scale_assign(*c);
                    accumulate(&mut grads, *a, da);
                }
                Op::MulScalar(a, s) => {
                    let x = self.value(*a);
                    let ds: f64 = g.as_slice().iter().zip(x.as_slice()).map(|(p, q)| p * q).sum();
                    let mut da = g;
                    da.scale_assign(self.value(*s).item());
                    accumulate(&mut grads, *s, Matrix::scalar(ds));
                    accumulate(&mut grads, *a, da);
                }
                Op::Relu(a) => {
                    let mut da = g;
                    for (d, y) in da.as_mut_slice().iter_mut().zip(node.value.as_slice()) {
                        if *y <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut grads, *a, da);
                }
                Op::NeighborSum(a, lists) => {
                    let mut da = Matrix::zeros(g.rows(), g.cols());
                    for (u, nb) in lists.iter().enumerate() {
                        for &v in nb {
                            for (o, y) in da.row_mut(v).iter_mut().zip(g.row(u)) {
                                *o += y;
                            }
                        }
                    }
                    accumulate(&mut grads, *a, da);
                }
                Op::SegmentSum(a, segment) => {
                    let mut da = Matrix::zeros(segment.len(), g.cols());
                    for (r, &s) in segment.iter().enumerate() {
                        da.row_mut(r).copy_from_slice(g.row(s));
                    }
                    accumulate(&mut grads, *a, da);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (rows, cols) = self.shape(p);
                        let mut dp = Matrix::zeros(rows, cols);
                        for r in 0..rows {
                            dp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + cols]);
                        }
                        offset += cols;
                        accumulate(&mut grads, p, dp);
                    }
                }
                Op::Sum(a) => {
                    let (rows, cols) = self.shape(*a);
                    accumulate(&mut grads, *a, Matrix::filled(rows, cols, g.item()));
                }
                Op::SoftmaxCrossEntropy(logits, labels, probs) => {
                    let scale = g.item() / labels.len().max(1) as f64;
                    let mut dz = probs.clone();
                    for (b, &y) in labels.iter().enumerate() {
                        dz.row_mut(b)[y] -= 1.0;
                    }
                    dz.scale_assign(scale);
                    accumulate(&mut grads, *logits, dz);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `log softmax(z)[y]` via log-sum-exp.
pub fn log_softmax(z: &[f64], y: usize) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    z[y] - lse
}

/// Cross-entropy `-log softmax(z)[y]` without a tape.
pub fn cross_entropy(z: &[f64], y: usize) -> f64 {
    -log_softmax(z, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn uniform_logits_give_ln_classes() {
        let mut t = Tape::new();
        let z = t.leaf(Matrix::zeros(1, 10));
        let loss = t.softmax_cross_entropy(z, &[7]).unwrap();
        assert!((t.value(loss).item() - 10f64.ln()).abs() < 1e-12);
        assert!((t.value(loss).item() - std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let z: Vec<f64> = (0..7).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let s: f64 = softmax(&z).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // Extreme logits stay finite.
        let p = softmax(&[1000.0, -1000.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        assert!(cross_entropy(&[1000.0, -1000.0], 1).is_finite());
    }

    #[test]
    fn relu_negative_input() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::filled(2, 3, -0.5));
        let y = t.relu(x);
        assert!(t.value(y).as_slice().iter().all(|&v| v == 0.0));
        let s = t.sum(y);
        t.backward(s).unwrap();
        assert!(t.grad(x).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sum_grad_is_ones() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::filled(3, 2, 4.0));
        let s = t.sum(x);
        t.backward(s).unwrap();
        assert_eq!(t.grad(x), Matrix::filled(3, 2, 1.0));
    }

    #[test]
    fn repeated_backward_accumulates() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::filled(2, 2, 1.5));
        let y = t.scale(x, 3.0);
        let s = t.sum(y);
        t.backward(s).unwrap();
        t.backward(s).unwrap();
        assert_eq!(t.grad(x), Matrix::filled(2, 2, 6.0));
        t.zero_grads();
        assert_eq!(t.grad(x), Matrix::zeros(2, 2));
    }

    #[test]
    fn unreachable_leaf_has_zero_grad() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::filled(1, 2, 1.0));
        let unused = t.leaf(Matrix::filled(2, 2, 1.0));
        let s = t.sum(x);
        t.backward(s).unwrap();
        assert_eq!(t.grad(unused), Matrix::zeros(2, 2));
    }

    #[test]
    fn backward_needs_scalar() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::zeros(2, 2));
        assert!(matches!(t.backward(x), Err(Error::Usage(_))));
    }

    #[test]
    fn shape_errors() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::zeros(3, 4));
        let b = t.leaf(Matrix::zeros(3, 4));
        assert!(matches!(t.matmul(a, b), Err(Error::Dimension(_))));
        let c = t.leaf(Matrix::zeros(4, 3));
        assert!(matches!(t.add(a, c), Err(Error::Dimension(_))));
        assert!(matches!(t.softmax_cross_entropy(a, &[0, 1]), Err(Error::Dimension(_))));
        assert!(matches!(t.softmax_cross_entropy(a, &[0, 1, 4]), Err(Error::Data(_))));
    }

    /// Central differences of `f` at `x`, one coordinate at a time.
    fn numeric_grad(x: &Matrix, h: f64, f: impl Fn(&Matrix) -> f64) -> Matrix {
        let mut g = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.as_mut_slice()[i] += h;
            let mut xm = x.clone();
            xm.as_mut_slice()[i] -= h;
            g.as_mut_slice()[i] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }

    fn max_rel_err(a: &Matrix, b: &Matrix) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6))
            .fold(0.0, f64::max)
    }

    #[test]
    fn matmul_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a0 = random(&mut rng, 3, 4);
        let b0 = random(&mut rng, 4, 2);
        let c0 = random(&mut rng, 2, 1);
        // loss = Σ (A·B)·C
        let loss_of = |a: &Matrix, b: &Matrix| -> f64 {
            a.matmul(b).unwrap().matmul(&c0).unwrap().as_slice().iter().sum()
        };
        let mut t = Tape::new();
        let a = t.leaf(a0.clone());
        let b = t.leaf(b0.clone());
        let c = t.leaf(c0.clone());
        let p = t.matmul(a, b).unwrap();
        let q = t.matmul(p, c).unwrap();
        let s = t.sum(q);
        t.backward(s).unwrap();
        let na = numeric_grad(&a0, 1e-5, |x| loss_of(x, &b0));
        let nb = numeric_grad(&b0, 1e-5, |x| loss_of(&a0, x));
        assert!(max_rel_err(&t.grad(a), &na) < 1e-6);
        assert!(max_rel_err(&t.grad(b), &nb) < 1e-6);
    }

    #[test]
    fn composite_ops_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x0 = random(&mut rng, 5, 3);
        let w0 = random(&mut rng, 3, 4);
        let b0 = random(&mut rng, 1, 4);
        let e0 = Matrix::scalar(0.3);
        let lists: NeighborLists = Arc::new(vec![vec![1, 2], vec![0], vec![0, 3, 4], vec![2], vec![2]]);
        let seg = Arc::new(vec![0, 0, 1, 1, 1]);
        let labels = [2usize, 0];

        let forward = |t: &mut Tape, x: Var, w: Var, b: Var, e: Var| -> Var {
            let agg = t.neighbor_sum(x, lists.clone()).unwrap();
            let self_term = t.mul_scalar(x, e).unwrap();
            let h = t.add(agg, self_term).unwrap();
            let h = t.add(h, x).unwrap();
            let z = t.matmul(h, w).unwrap();
            let z = t.add_row(z, b).unwrap();
            let z = t.relu(z);
            let g = t.segment_sum(z, seg.clone(), 2).unwrap();
            let g2 = t.scale(g, 0.5);
            let cat = t.concat_cols(&[g, g2]).unwrap();
            let sel = t.leaf(Matrix::from_vec(8, 3, (0..24).map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0).collect()).unwrap());
            let logits = t.matmul(cat, sel).unwrap();
            t.softmax_cross_entropy(logits, &labels).unwrap()
        };
        let eval = |x: &Matrix, w: &Matrix, b: &Matrix, e: &Matrix| -> f64 {
            let mut t = Tape::new();
            let (x, w, b, e) = (t.leaf(x.clone()), t.leaf(w.clone()), t.leaf(b.clone()), t.leaf(e.clone()));
            let l = forward(&mut t, x, w, b, e);
            t.value(l).item()
        };

        let mut t = Tape::new();
        let (x, w, b, e) = (t.leaf(x0.clone()), t.leaf(w0.clone()), t.leaf(b0.clone()), t.leaf(e0.clone()));
        let l = forward(&mut t, x, w, b, e);
        t.backward(l).unwrap();

        let h = 1e-5;
        assert!(max_rel_err(&t.grad(x), &numeric_grad(&x0, h, |v| eval(v, &w0, &b0, &e0))) < 1e-4);
        assert!(max_rel_err(&t.grad(w), &numeric_grad(&w0, h, |v| eval(&x0, v, &b0, &e0))) < 1e-4);
        assert!(max_rel_err(&t.grad(b), &numeric_grad(&b0, h, |v| eval(&x0, &w0, v, &e0))) < 1e-4);
        assert!(max_rel_err(&t.grad(e), &numeric_grad(&e0, h, |v| eval(&x0, &w0, &b0, v))) < 1e-4);
    }
}
