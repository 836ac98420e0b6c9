use std::collections::VecDeque;

use rand::Rng;

use super::{accumulate, GraphFunction};
use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};
use crate::stats::VecSum;
use crate::wl::wl_refine;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traversal {
    Dfs,
    Bfs,
}

/// How neighbours of the current vertex are ordered during a traversal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Ascending vertex label. The orientation then depends on the labelling
    /// as well as the start vertex.
    #[default]
    Label,
    /// Ascending 1-WL colour of the graph refined with the start vertex
    /// singled out, then label. Colour ids are canonical, so on trees the
    /// oriented tensor depends only on the start vertex up to isomorphism.
    Structural,
}

fn structural_colors(g: &Graph, start: usize) -> Result<Vec<usize>> {
    let d = g.d_v() + 1;
    let mut marked = Graph::from_parts(g.n(), g.d_e(), d, g.adj_tensor().to_vec(), vec![0.0; g.n() * d])?;
    for u in 0..g.n() {
        let mut row = g.vfeat_row(u).to_vec();
        row.push(if u == start { 1.0 } else { 0.0 });
        marked.set_vfeat_row(u, &row)?;
    }
    Ok(wl_refine(&marked, g.n() + 1).colors)
}

/// Vertices in the order a DFS or BFS from `start` first reaches them.
/// Unreached components are entered at their first vertex under the same
/// ordering. Stops after `limit` vertices when given. Edges are followed in
/// both directions.
pub fn visit_order(g: &Graph, traversal: Traversal, start: usize, tie: TieBreak, limit: Option<usize>) -> Result<Vec<usize>> {
    let n = g.n();
    if start >= n {
        return Err(Error::Parameter(format!("start vertex {start} out of range for n = {n}")));
    }
    let key: Vec<(usize, usize)> = match tie {
        TieBreak::Label => (0..n).map(|v| (0, v)).collect(),
        TieBreak::Structural => structural_colors(g, start)?.into_iter().zip(0..n).collect(),
    };
    let mut nb: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| v != u && (g.has_edge(u, v) || g.has_edge(v, u))).collect())
        .collect();
    for list in &mut nb {
        list.sort_by_key(|&v| key[v]);
    }
    let mut roots: Vec<usize> = (0..n).collect();
    roots.sort_by_key(|&v| key[v]);

    let limit = limit.unwrap_or(n).min(n);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(limit);
    for root in std::iter::once(start).chain(roots) {
        if order.len() == limit {
            break;
        }
        if visited[root] {
            continue;
        }
        visited[root] = true;
        order.push(root);
        match traversal {
            Traversal::Dfs => {
                let mut stack = vec![(root, 0usize)];
                while let Some((u, next)) = stack.last_mut() {
                    if order.len() == limit {
                        break;
                    }
                    if let Some(&v) = nb[*u].get(*next) {
                        *next += 1;
                        if !visited[v] {
                            visited[v] = true;
                            order.push(v);
                            stack.push((v, 0));
                        }
                    } else {
                        stack.pop();
                    }
                }
            }
            Traversal::Bfs => {
                let mut queue = VecDeque::from([root]);
                'bfs: while let Some(u) = queue.pop_front() {
                    for &v in &nb[u] {
                        if order.len() == limit {
                            break 'bfs;
                        }
                        if !visited[v] {
                            visited[v] = true;
                            order.push(v);
                            queue.push_back(v);
                        }
                    }
                }
            }
        }
    }
    Ok(order)
}

/// Permutation sending the `t`-th visited vertex to position `t`, with
/// ascending-label tie-breaking.
pub fn orient(g: &Graph, traversal: Traversal, start: usize) -> Result<Permutation> {
    orient_with(g, traversal, start, TieBreak::Label)
}

pub fn orient_with(g: &Graph, traversal: Traversal, start: usize, tie: TieBreak) -> Result<Permutation> {
    let order = visit_order(g, traversal, start, tie, None)?;
    let mut map = vec![0; g.n()];
    for (pos, &v) in order.iter().enumerate() {
        map[v] = pos;
    }
    Permutation::new(map)
}

/// Induced subgraph on the first `k` vertices of a traversal from a uniform
/// random start, in visit order.
pub fn kary_dfs_sample<R: Rng + ?Sized>(g: &Graph, k: usize, traversal: Traversal, rng: &mut R) -> Result<Graph> {
    if k == 0 || k > g.n() {
        return Err(Error::Parameter(format!("k = {k} outside [1, {}]", g.n())));
    }
    let start = rng.gen_range(0..g.n());
    g.induced_subgraph(&visit_order(g, traversal, start, TieBreak::Label, Some(k))?)
}

/// Average of `f` over traversal orientations (truncated to `k` vertices
/// when given). `samples == 0` uses every start vertex; otherwise `samples`
/// uniform random starts.
pub fn poly_canonical<F, R>(g: &Graph, f: &F, traversal: Traversal, k: Option<usize>, samples: usize, rng: &mut R) -> Result<Vec<f64>>
where
    F: GraphFunction + ?Sized,
    R: Rng + ?Sized,
{
    if g.n() == 0 {
        return Err(Error::Parameter("cannot orient an empty graph".into()));
    }
    let starts: Vec<usize> = if samples == 0 {
        (0..g.n()).collect()
    } else {
        (0..samples).map(|_| rng.gen_range(0..g.n())).collect()
    };
    let mut acc: Option<VecSum> = None;
    for s in starts {
        let order = visit_order(g, traversal, s, TieBreak::Label, k)?;
        accumulate(&mut acc, &f.eval(&g.induced_subgraph(&order)?)?)?;
    }
    Ok(acc.map(|a| a.mean()).unwrap_or_default())
}
