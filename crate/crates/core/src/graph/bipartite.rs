use super::Permutation;
use crate::error::{Error, Result};

/// A bipartite graph stored as a rectangular `rows × cols × (1 + d_e)`
/// tensor with separate feature matrices for the row and column vertex sets.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteGraph {
    rows: usize,
    cols: usize,
    d_e: usize,
    d_r: usize,
    d_c: usize,
    adj: Vec<f64>,
    row_feat: Vec<f64>,
    col_feat: Vec<f64>,
}

impl BipartiteGraph {
    pub fn empty(rows: usize, cols: usize, d_e: usize, d_r: usize, d_c: usize) -> Self {
        Self {
            rows,
            cols,
            d_e,
            d_r,
            d_c,
            adj: vec![0.0; rows * cols * (1 + d_e)],
            row_feat: vec![0.0; rows * d_r],
            col_feat: vec![0.0; cols * d_c],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn offset(&self, r: usize, c: usize) -> usize {
        (r * self.cols + c) * (1 + self.d_e)
    }

    pub fn fiber(&self, r: usize, c: usize) -> &[f64] {
        let o = self.offset(r, c);
        &self.adj[o..o + 1 + self.d_e]
    }

    pub fn set_edge(&mut self, r: usize, c: usize, features: &[f64]) -> Result<()> {
        if r >= self.rows || c >= self.cols {
            return Err(Error::Parameter(format!("edge ({r}, {c}) out of range")));
        }
        if features.len() != self.d_e {
            return Err(Error::Dimension(format!("edge feature of length {} for d_e = {}", features.len(), self.d_e)));
        }
        let o = self.offset(r, c);
        self.adj[o] = 1.0;
        self.adj[o + 1..o + 1 + self.d_e].copy_from_slice(features);
        Ok(())
    }

    pub fn set_row_features(&mut self, r: usize, x: &[f64]) -> Result<()> {
        if x.len() != self.d_r {
            return Err(Error::Dimension(format!("row feature of length {} for d_r = {}", x.len(), self.d_r)));
        }
        self.row_feat[r * self.d_r..(r + 1) * self.d_r].copy_from_slice(x);
        Ok(())
    }

    pub fn set_col_features(&mut self, c: usize, x: &[f64]) -> Result<()> {
        if x.len() != self.d_c {
            return Err(Error::Dimension(format!("column feature of length {} for d_c = {}", x.len(), self.d_c)));
        }
        self.col_feat[c * self.d_c..(c + 1) * self.d_c].copy_from_slice(x);
        Ok(())
    }

    /// `A_{π,σ}` with features `X^(r)_π`, `X^(c)_σ`.
    pub fn permute(&self, row_perm: &Permutation, col_perm: &Permutation) -> Result<BipartiteGraph> {
        if row_perm.len() != self.rows || col_perm.len() != self.cols {
            return Err(Error::Dimension(format!(
                "permutations of sizes ({}, {}) for a {}×{} bipartite graph",
                row_perm.len(),
                col_perm.len(),
                self.rows,
                self.cols
            )));
        }
        let w = 1 + self.d_e;
        let mut out = Self::empty(self.rows, self.cols, self.d_e, self.d_r, self.d_c);
        for r in 0..self.rows {
            let pr = row_perm.apply(r);
            for c in 0..self.cols {
                let src = self.offset(r, c);
                let dst = out.offset(pr, col_perm.apply(c));
                out.adj[dst..dst + w].copy_from_slice(&self.adj[src..src + w]);
            }
            out.row_feat[pr * self.d_r..(pr + 1) * self.d_r]
                .copy_from_slice(&self.row_feat[r * self.d_r..(r + 1) * self.d_r]);
        }
        for c in 0..self.cols {
            let pc = col_perm.apply(c);
            out.col_feat[pc * self.d_c..(pc + 1) * self.d_c]
                .copy_from_slice(&self.col_feat[c * self.d_c..(c + 1) * self.d_c]);
        }
        Ok(out)
    }

    /// Row-by-row flattening (fibers, then row features), followed by the
    /// column feature matrix.
    pub fn vec(&self) -> Vec<f64> {
        let row_len = self.cols * (1 + self.d_e);
        let mut out = Vec::with_capacity(self.adj.len() + self.row_feat.len() + self.col_feat.len());
        for r in 0..self.rows {
            out.extend_from_slice(&self.adj[r * row_len..(r + 1) * row_len]);
            out.extend_from_slice(&self.row_feat[r * self.d_r..(r + 1) * self.d_r]);
        }
        out.extend_from_slice(&self.col_feat);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_row_and_column_permutations() {
        let mut g = BipartiteGraph::empty(2, 3, 1, 1, 0);
        g.set_edge(0, 2, &[5.0]).unwrap();
        g.set_edge(1, 0, &[7.0]).unwrap();
        g.set_row_features(0, &[1.0]).unwrap();
        g.set_row_features(1, &[2.0]).unwrap();
        let rp = Permutation::swap(2, 0, 1).unwrap();
        let cp = Permutation::new(vec![1, 2, 0]).unwrap();
        let h = g.permute(&rp, &cp).unwrap();
        assert_eq!(h.fiber(1, 0), &[1.0, 5.0]);
        assert_eq!(h.fiber(0, 1), &[1.0, 7.0]);
        assert_eq!(h.vec()[h.vec().len() - 1], 1.0);
        let back = h.permute(&rp.inverse(), &cp.inverse()).unwrap();
        assert_eq!(back, g);
    }
}
