//! Dense graph encoding: an `n × n × (1 + d_e)` adjacency tensor whose slice 0
//! is the edge indicator, plus an `n × d_v` vertex-feature matrix.
//!
//! Vertex labels are 0-based throughout. Figures and worked examples that
//! number vertices from 1 are translated by subtracting one.

mod bipartite;
mod csl;
pub mod io;
mod iso;
mod perm;

pub use bipartite::BipartiteGraph;
pub use csl::{make_csl, CslParams};
pub use iso::{brute_force_isomorphic, ISO_GUARD};
pub use perm::{factorial, falling_factorial, next_permutation, AllPermutations, Permutation};

use crate::error::{Error, Result};

/// Feature value given to every vertex of an unattributed graph.
pub const CONSTANT_FEATURE: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    d_e: usize,
    d_v: usize,
    adj: Vec<f64>,
    vfeat: Vec<f64>,
}

impl Graph {
    /// Edgeless graph with zero features.
    pub fn empty(n: usize, d_e: usize, d_v: usize) -> Self {
        Self {
            n,
            d_e,
            d_v,
            adj: vec![0.0; n * n * (1 + d_e)],
            vfeat: vec![0.0; n * d_v],
        }
    }

    /// Undirected, unweighted graph with the constant vertex feature.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n, 0, 1);
        g.vfeat.fill(CONSTANT_FEATURE);
        for &(i, j) in edges {
            g.add_undirected_edge(i, j, &[])?;
        }
        Ok(g)
    }

    pub fn from_parts(n: usize, d_e: usize, d_v: usize, adj: Vec<f64>, vfeat: Vec<f64>) -> Result<Self> {
        if adj.len() != n * n * (1 + d_e) {
            return Err(Error::Dimension(format!(
                "adjacency tensor has {} entries, expected {n}×{n}×{}",
                adj.len(),
                1 + d_e
            )));
        }
        if vfeat.len() != n * d_v {
            return Err(Error::Dimension(format!(
                "vertex features have {} entries, expected {n}×{d_v}",
                vfeat.len()
            )));
        }
        if adj.chunks(1 + d_e).any(|fiber| fiber[0] != 0.0 && fiber[0] != 1.0) {
            return Err(Error::Data("edge indicator must be 0 or 1".into()));
        }
        Ok(Self { n, d_e, d_v, adj, vfeat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn d_v(&self) -> usize {
        self.d_v
    }

    #[inline]
    fn fiber_offset(&self, i: usize, j: usize) -> usize {
        (i * self.n + j) * (1 + self.d_e)
    }

    #[inline]
    pub fn adj(&self, i: usize, j: usize, k: usize) -> f64 {
        self.adj[self.fiber_offset(i, j) + k]
    }

    /// The `1 + d_e` values at `(i, j)`: indicator followed by edge features.
    pub fn fiber(&self, i: usize, j: usize) -> &[f64] {
        let o = self.fiber_offset(i, j);
        &self.adj[o..o + 1 + self.d_e]
    }

    pub fn adj_tensor(&self) -> &[f64] {
        &self.adj
    }

    pub fn vfeat_row(&self, i: usize) -> &[f64] {
        &self.vfeat[i * self.d_v..(i + 1) * self.d_v]
    }

    /// Row-major `n × d_v` feature matrix.
    pub fn vfeat(&self) -> &[f64] {
        &self.vfeat
    }

    pub fn set_vfeat_row(&mut self, i: usize, row: &[f64]) -> Result<()> {
        if row.len() != self.d_v {
            return Err(Error::Dimension(format!("feature row of length {} for d_v = {}", row.len(), self.d_v)));
        }
        self.vfeat[i * self.d_v..(i + 1) * self.d_v].copy_from_slice(row);
        Ok(())
    }

    /// Sets the directed entry `(i, j)`.
    pub fn set_edge(&mut self, i: usize, j: usize, features: &[f64]) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::Parameter(format!("edge ({i}, {j}) out of range for n = {}", self.n)));
        }
        if features.len() != self.d_e {
            return Err(Error::Dimension(format!(
                "edge feature of length {} for d_e = {}",
                features.len(),
                self.d_e
            )));
        }
        let o = self.fiber_offset(i, j);
        self.adj[o] = 1.0;
        self.adj[o + 1..o + 1 + self.d_e].copy_from_slice(features);
        Ok(())
    }

    pub fn add_undirected_edge(&mut self, i: usize, j: usize, features: &[f64]) -> Result<()> {
        self.set_edge(i, j, features)?;
        self.set_edge(j, i, features)
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj(i, j, 0) != 0.0
    }

    /// Out-neighbours of `i` in ascending label order, self-loops excluded.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| j != i && self.has_edge(i, j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Neighbour lists for every vertex, ascending.
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| self.neighbors(i).collect()).collect()
    }

    /// Number of undirected edges (unordered pairs, self-loops counted once).
    pub fn edge_count(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n {
            for j in i..self.n {
                if self.has_edge(i, j) || self.has_edge(j, i) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.fiber(i, j) == self.fiber(j, i)))
    }

    pub fn is_regular(&self, degree: usize) -> bool {
        (0..self.n).all(|i| self.degree(i) == degree)
    }

    /// Relabels vertices: `result[p(i)][p(j)][k] = self[i][j][k]` and
    /// `result.vfeat[p(i)] = self.vfeat[i]`. The edge-feature mode is untouched.
    pub fn permute(&self, p: &Permutation) -> Result<Graph> {
        if p.len() != self.n {
            return Err(Error::Dimension(format!(
                "permutation of size {} applied to graph with {} vertices",
                p.len(),
                self.n
            )));
        }
        let mut out = Graph::empty(self.n, self.d_e, self.d_v);
        let w = 1 + self.d_e;
        for i in 0..self.n {
            let pi = p.apply(i);
            for j in 0..self.n {
                let src = self.fiber_offset(i, j);
                let dst = out.fiber_offset(pi, p.apply(j));
                out.adj[dst..dst + w].copy_from_slice(&self.adj[src..src + w]);
            }
            out.vfeat[pi * self.d_v..(pi + 1) * self.d_v].copy_from_slice(self.vfeat_row(i));
        }
        Ok(out)
    }

    /// Flattens the graph vertex by vertex: for each `i`, every fiber
    /// `adj[i][j][·]` in order of `j`, then `vfeat[i][·]`.
    pub fn vec(&self) -> Vec<f64> {
        let row_len = self.n * (1 + self.d_e);
        let mut out = Vec::with_capacity(self.n * (row_len + self.d_v));
        for i in 0..self.n {
            out.extend_from_slice(&self.adj[i * row_len..(i + 1) * row_len]);
            out.extend_from_slice(self.vfeat_row(i));
        }
        out
    }

    /// The subgraph induced by `vertices`, relabelled `vertices[t] ↦ t`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Graph> {
        let mut seen = vec![false; self.n];
        for &v in vertices {
            if v >= self.n {
                return Err(Error::Parameter(format!("vertex {v} out of range for n = {}", self.n)));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Parameter(format!("vertex {v} listed twice")));
            }
        }
        let k = vertices.len();
        let w = 1 + self.d_e;
        let mut out = Graph::empty(k, self.d_e, self.d_v);
        for (a, &u) in vertices.iter().enumerate() {
            for (b, &v) in vertices.iter().enumerate() {
                let src = self.fiber_offset(u, v);
                let dst = out.fiber_offset(a, b);
                out.adj[dst..dst + w].copy_from_slice(&self.adj[src..src + w]);
            }
            out.vfeat[a * self.d_v..(a + 1) * self.d_v].copy_from_slice(self.vfeat_row(u));
        }
        Ok(out)
    }

    /// Appends `modulus` one-hot ID columns: vertex `i` gets `p(i) mod modulus`.
    ///
    /// This is the "permute the IDs, keep the tensor" form of RP-GNN. With
    /// `p` the identity and `modulus == n` the appended block is `I_n`.
    pub fn augment_onehot_ids(&self, p: &Permutation, modulus: usize) -> Result<Graph> {
        if modulus == 0 || modulus > self.n {
            return Err(Error::Parameter(format!(
                "ID modulus {modulus} outside [1, {}]",
                self.n
            )));
        }
        if p.len() != self.n {
            return Err(Error::Dimension(format!(
                "permutation of size {} for graph with {} vertices",
                p.len(),
                self.n
            )));
        }
        let d_v = self.d_v + modulus;
        let mut vfeat = vec![0.0; self.n * d_v];
        for i in 0..self.n {
            let row = &mut vfeat[i * d_v..(i + 1) * d_v];
            row[..self.d_v].copy_from_slice(self.vfeat_row(i));
            row[self.d_v + p.apply(i) % modulus] = 1.0;
        }
        Ok(Graph {
            n: self.n,
            d_e: self.d_e,
            d_v,
            adj: self.adj.clone(),
            vfeat,
        })
    }

    /// Same topology with every vertex feature replaced by the constant.
    pub fn with_constant_features(&self) -> Graph {
        Graph {
            n: self.n,
            d_e: self.d_e,
            d_v: 1,
            adj: self.adj.clone(),
            vfeat: vec![CONSTANT_FEATURE; self.n],
        }
    }

    /// Vertices of each connected component (weak connectivity), ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut head = 0;
            while head < members.len() {
                let u = members[head];
                head += 1;
                for (v, c) in comp.iter_mut().enumerate() {
                    if v != u && *c == usize::MAX && (self.has_edge(u, v) || self.has_edge(v, u)) {
                        *c = id;
                        members.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}
