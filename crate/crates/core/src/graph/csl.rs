use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Parameters of a circulant skip-link graph: `m_vertices` on a cycle, with
/// skip links of stride `r_skip`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CslParams {
    pub m_vertices: usize,
    pub r_skip: usize,
}

impl CslParams {
    pub fn new(m_vertices: usize, r_skip: usize) -> Result<Self> {
        let p = Self { m_vertices, r_skip };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, r) = (self.m_vertices, self.r_skip);
        // r = 1 makes every skip link a cycle edge, so the graph would only be 2-regular.
        if r < 2 || r + 1 >= m {
            return Err(Error::Parameter(format!("skip length R = {r} must satisfy 2 <= R < M - 1 (M = {m})")));
        }
        if gcd(m, r) != 1 {
            return Err(Error::Parameter(format!("M = {m} and R = {r} are not co-prime")));
        }
        Ok(())
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Builds `G_skip(M, R)`: the cycle `j — j+1 (mod M)` plus the skip links
/// `s_i — s_{i+1}` where `s_1 = 0`, `s_{i+1} = s_i + R (mod M)`, stopping when
/// the sequence returns to 0. Vertices carry the constant feature.
pub fn make_csl(params: CslParams) -> Result<Graph> {
    params.validate()?;
    let CslParams { m_vertices: m, r_skip: r } = params;
    let mut g = Graph::from_edges(m, &[])?;
    for j in 0..m {
        g.add_undirected_edge(j, (j + 1) % m, &[])?;
    }
    let mut s = 0;
    loop {
        let next = (s + r) % m;
        // Coincident edges are merged by the dense encoding.
        g.add_undirected_edge(s, next, &[])?;
        s = next;
        if s == 0 {
            break;
        }
    }
    debug_assert!(g.is_regular(4));
    Ok(g)
}
