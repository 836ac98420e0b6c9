use super::{Graph, Permutation};
use crate::error::{Error, Result};

/// Largest vertex count the brute-force search accepts (12! ≈ 4.8e8).
pub const ISO_GUARD: usize = 12;

/// Exhaustive isomorphism test: is there a `π` with `permute(g1, π) == g2`
/// (tensor and features, compared exactly)?
///
/// The search assigns vertices of `g1` one at a time and prunes on partial
/// mismatches, so it is far cheaper than `n!` on most inputs; the worst case
/// is still factorial.
pub fn brute_force_isomorphic(g1: &Graph, g2: &Graph) -> Result<bool> {
    let n = g1.n();
    if n > ISO_GUARD || g2.n() > ISO_GUARD {
        return Err(Error::Size(format!(
            "brute-force isomorphism limited to n <= {ISO_GUARD}, got {} and {}",
            n,
            g2.n()
        )));
    }
    if n != g2.n() || g1.d_e() != g2.d_e() || g1.d_v() != g2.d_v() {
        return Ok(false);
    }
    if g1.edge_count() != g2.edge_count() {
        return Ok(false);
    }
    let mut deg1: Vec<usize> = (0..n).map(|i| g1.degree(i)).collect();
    let mut deg2: Vec<usize> = (0..n).map(|i| g2.degree(i)).collect();
    let (d1, d2) = (deg1.clone(), deg2.clone());
    deg1.sort_unstable();
    deg2.sort_unstable();
    if deg1 != deg2 {
        return Ok(false);
    }

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(extend(g1, g2, &d1, &d2, 0, &mut map, &mut used))
}

fn extend(
    g1: &Graph,
    g2: &Graph,
    d1: &[usize],
    d2: &[usize],
    i: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let n = g1.n();
    if i == n {
        debug_assert_eq!(g1.permute(&Permutation::new(map.to_vec()).unwrap()).unwrap(), *g2);
        return true;
    }
    for t in 0..n {
        if used[t] || d1[i] != d2[t] || g1.vfeat_row(i) != g2.vfeat_row(t) {
            continue;
        }
        if g1.fiber(i, i) != g2.fiber(t, t) {
            continue;
        }
        let consistent = (0..i).all(|j| {
            let u = map[j];
            g1.fiber(i, j) == g2.fiber(t, u) && g1.fiber(j, i) == g2.fiber(u, t)
        });
        if !consistent {
            continue;
        }
        map[i] = t;
        used[t] = true;
        if extend(g1, g2, d1, d2, i + 1, map, used) {
            return true;
        }
        used[t] = false;
    }
    map[i] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_csl, CslParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn permuted_copies_are_isomorphic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let n = rng.gen_range(1..=7);
            let mut g = Graph::empty(n, 1, 1);
            for i in 0..n {
                for j in 0..i {
                    if rng.gen_bool(0.5) {
                        g.add_undirected_edge(i, j, &[rng.gen_range(0..3) as f64]).unwrap();
                    }
                }
                g.set_vfeat_row(i, &[rng.gen_range(0..2) as f64]).unwrap();
            }
            let p = Permutation::random(n, &mut rng);
            assert!(brute_force_isomorphic(&g, &g.permute(&p).unwrap()).unwrap());
        }
    }

    #[test]
    fn csl_11_pair_not_isomorphic() {
        let a = make_csl(CslParams::new(11, 2).unwrap()).unwrap();
        let b = make_csl(CslParams::new(11, 3).unwrap()).unwrap();
        assert!(!brute_force_isomorphic(&a, &b).unwrap());
    }

    #[test]
    fn triangle_vs_path() {
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!brute_force_isomorphic(&tri, &path).unwrap());
    }

    #[test]
    fn features_matter() {
        let a = Graph::from_parts(2, 0, 1, vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let b = Graph::from_parts(2, 0, 1, vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 3.0]).unwrap();
        assert!(!brute_force_isomorphic(&a, &b).unwrap());
        let c = Graph::from_parts(2, 0, 1, vec![0.0, 1.0, 1.0, 0.0], vec![2.0, 1.0]).unwrap();
        assert!(brute_force_isomorphic(&a, &c).unwrap());
    }

    #[test]
    fn refuses_large_graphs() {
        let g = Graph::from_edges(13, &[]).unwrap();
        assert!(matches!(brute_force_isomorphic(&g, &g), Err(Error::Size(_))));
    }
}
