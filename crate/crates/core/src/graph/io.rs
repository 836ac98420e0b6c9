//! JSON graph files.
//!
//! ```json
//! { "n": 3, "d_e": 1, "d_v": 1,
//!   "edges": [[0, 1, [0.5]], [1, 2, [2.0]]],
//!   "vfeat": [1.0, 1.0, 1.0] }
//! ```
//!
//! Vertices are 0-based. Undirected edges are listed once and mirrored on
//! load (`"directed": true` disables mirroring). `vfeat` is the row-major
//! `n × d_v` feature matrix.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub d_e: usize,
    pub d_v: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub directed: bool,
    pub edges: Vec<(usize, usize, Vec<f64>)>,
    pub vfeat: Vec<f64>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<Graph> {
        let mut g = Graph::from_parts(
            self.n,
            self.d_e,
            self.d_v,
            vec![0.0; self.n * self.n * (1 + self.d_e)],
            self.vfeat,
        )?;
        for (i, j, f) in &self.edges {
            if self.directed {
                g.set_edge(*i, *j, f)?;
            } else {
                g.add_undirected_edge(*i, *j, f)?;
            }
        }
        Ok(g)
    }

    /// Encodes `g`. Symmetric graphs are written as undirected (`i <= j` only).
    pub fn from_graph(g: &Graph) -> Self {
        let directed = !g.is_symmetric();
        let mut edges = Vec::new();
        for i in 0..g.n() {
            let start = if directed { 0 } else { i };
            for j in start..g.n() {
                if g.has_edge(i, j) {
                    edges.push((i, j, g.fiber(i, j)[1..].to_vec()));
                }
            }
        }
        Self {
            n: g.n(),
            d_e: g.d_e(),
            d_v: g.d_v(),
            directed,
            edges,
            vfeat: g.vfeat().to_vec(),
        }
    }
}

pub fn from_json(s: &str) -> Result<Graph> {
    serde_json::from_str::<GraphFile>(s)?.into_graph()
}

pub fn to_json(g: &Graph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&GraphFile::from_graph(g))?)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    from_json(&text)
}

pub fn write_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json(g)?)?;
    Ok(())
}
