use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relpool::gin::{gin_graph_embedding, GinConfig, GinModel};
use relpool::graph::{brute_force_isomorphic, falling_factorial, make_csl, CslParams, Graph, Permutation};
use relpool::nn::ParamStore;
use relpool::rp::{kary_rp, rp_exact_joint, rp_gnn_exact, KaryMode};
use relpool::wl::{wl_fingerprint, wl_refine};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), pairs), prop::collection::vec(-2.0..2.0f64, n))
    })
    .prop_map(|(n, mask, feats)| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let edges: Vec<_> = pairs.into_iter().zip(mask).filter(|(_, keep)| *keep).map(|(e, _)| e).collect();
        let mut g = Graph::from_edges(n, &edges).unwrap();
        for (i, x) in feats.into_iter().enumerate() {
            g.set_vfeat_row(i, &[x]).unwrap();
        }
        g
    })
}

fn perm(n: usize, seed: u64) -> Permutation {
    Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn nonlinear(g: &Graph) -> Vec<f64> {
    let v = g.vec();
    let s: f64 = v.iter().enumerate().map(|(i, x)| (0.3 * i as f64).cos() * x).sum();
    vec![s.tanh(), (s * s).sin(), v[0]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permute_composes(g in graph_strategy(8), a in any::<u64>(), b in any::<u64>()) {
        let (p, q) = (perm(g.n(), a), perm(g.n(), b));
        let twice = g.permute(&p).unwrap().permute(&q).unwrap();
        prop_assert_eq!(twice, g.permute(&q.compose(&p).unwrap()).unwrap());
        prop_assert_eq!(g.permute(&p).unwrap().permute(&p.inverse()).unwrap(), g);
    }

    #[test]
    fn permutation_preserves_edge_count_and_degrees(g in graph_strategy(8), s in any::<u64>()) {
        let p = perm(g.n(), s);
        let h = g.permute(&p).unwrap();
        prop_assert_eq!(h.edge_count(), g.edge_count());
        for i in 0..g.n() {
            prop_assert_eq!(h.degree(p.apply(i)), g.degree(i));
        }
    }

    #[test]
    fn relabelled_graphs_are_isomorphic_and_wl_equal(g in graph_strategy(7), s in any::<u64>()) {
        let h = g.permute(&perm(g.n(), s)).unwrap();
        prop_assert!(brute_force_isomorphic(&g, &h).unwrap());
        prop_assert_eq!(wl_fingerprint(&g), wl_fingerprint(&h));
        prop_assert_eq!(wl_refine(&g, 8).num_classes(), wl_refine(&h, 8).num_classes());
    }

    #[test]
    fn exact_pooling_is_invariant(g in graph_strategy(5), s in any::<u64>()) {
        let a = rp_exact_joint(&g, &nonlinear).unwrap();
        let b = rp_exact_joint(&g.permute(&perm(g.n(), s)).unwrap(), &nonlinear).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn kary_counts_and_invariance(g in graph_strategy(6), k in 1usize..=6, s in any::<u64>()) {
        let k = k.min(g.n());
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let out = kary_rp(&g, &nonlinear, k, KaryMode::Exact, false, &mut rng).unwrap();
        prop_assert_eq!(out.evaluations, falling_factorial(g.n(), k).unwrap());
        let h = g.permute(&perm(g.n(), s)).unwrap();
        let other = kary_rp(&h, &nonlinear, k, KaryMode::Exact, false, &mut rng).unwrap();
        for (x, y) in out.value.iter().zip(&other.value) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn gin_is_invariant(g in graph_strategy(9), s in any::<u64>()) {
        let cfg = GinConfig { num_layers: 3, ..GinConfig::default() };
        let mut store = ParamStore::new();
        let model = GinModel::new(cfg, &mut store, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
        let a = gin_graph_embedding(&g, &model, &store).unwrap();
        let b = gin_graph_embedding(&g.permute(&perm(g.n(), s)).unwrap(), &model, &store).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn rp_gnn_exact_is_invariant(g in graph_strategy(6), m in 1usize..=6, s in any::<u64>()) {
        let m = m.min(g.n());
        let cfg = GinConfig { input_dim: 1 + m, num_layers: 2, use_input_embedding_mlp: false, ..GinConfig::default() };
        let mut store = ParamStore::new();
        let model = GinModel::new(cfg, &mut store, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
        let a = rp_gnn_exact(&g, &model, &store, m).unwrap();
        let b = rp_gnn_exact(&g.permute(&perm(g.n(), s)).unwrap(), &model, &store, m).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn unrank_follows_lexicographic_order(n in 1usize..=7, r in 0u64..5040) {
        let total = falling_factorial(n, n).unwrap();
        let r = r % total;
        let mut p = Permutation::unrank(n, r).unwrap();
        let more = p.next_lexicographic();
        prop_assert_eq!(more, r + 1 < total);
        if more {
            prop_assert_eq!(p, Permutation::unrank(n, r + 1).unwrap());
        }
    }

    #[test]
    fn csl_graphs_are_four_regular(m in 5usize..60, r in 2usize..30) {
        match CslParams::new(m, r) {
            Ok(params) => {
                let g = make_csl(params).unwrap();
                prop_assert!(g.is_regular(4));
                prop_assert!(g.is_symmetric());
                prop_assert!(g.is_connected());
            }
            Err(_) => prop_assert!(r + 1 >= m || num_gcd(m, r) != 1),
        }
    }
}

fn num_gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { num_gcd(b, a % b) }
}
