use proptest::prelude::*;

use simga::generators::{gen_twin_graph, rng_from_seed};
use simga::graph::{node_homophily, Graph};
use simga::model::{aggregate, fit_with_similarity, HyperParams};
use simga::nn::DenseMatrix;
use simga::simrank::{
    simrank_fixedpoint, simrank_localpush, simrank_power_series, sparse_aggregate, topk_prune,
    SparseSim,
};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..(3 * n)).prop_map(move |edges| {
            Graph::from_edges(n, &edges).expect("ids in range")
        })
    })
}

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |v| DenseMatrix::from_vec(rows, cols, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graphs_are_symmetric_and_simple(g in graph_strategy(30)) {
        prop_assert!(g.check_invariants().is_ok());
        for u in 0..g.num_nodes() {
            prop_assert!(!g.has_edge(u, u));
            for &v in g.neighbors(u) {
                prop_assert!(g.has_edge(v, u));
            }
        }
        let total: usize = g.degrees().iter().sum();
        prop_assert_eq!(total, 2 * g.num_edges());
    }

    #[test]
    fn homophily_ignores_class_names(
        g in graph_strategy(25),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = rng_from_seed(seed);
        let labels: Vec<usize> = (0..g.num_nodes()).map(|_| rng.random_range(0..3)).collect();
        let renamed: Vec<usize> = labels.iter().map(|&y| (y + 1) % 3).collect();
        match (node_homophily(&g, &labels), node_homophily(&g, &renamed)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a, b);
                prop_assert!((0.0..=1.0).contains(&a));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "relabeling changed definedness"),
        }
    }

    #[test]
    fn similarity_is_symmetric_with_unit_diagonal(g in graph_strategy(20)) {
        let s = simrank_fixedpoint(&g, 0.6, 10).unwrap();
        prop_assert!(s.max_asymmetry() <= 1e-14);
        for u in 0..g.num_nodes() {
            prop_assert_eq!(s.get(u, u), 1.0);
            for v in 0..g.num_nodes() {
                prop_assert!((0.0..=1.0).contains(&s.get(u, v)));
            }
        }
    }

    #[test]
    fn fixed_point_grows_with_decay(g in graph_strategy(16), c1 in 0.1f64..0.8, dc in 0.01f64..0.19) {
        let lo = simrank_fixedpoint(&g, c1, 12).unwrap();
        let hi = simrank_fixedpoint(&g, c1 + dc, 12).unwrap();
        for u in 0..g.num_nodes() {
            for v in 0..g.num_nodes() {
                prop_assert!(lo.get(u, v) <= hi.get(u, v) + 1e-15);
            }
        }
    }

    #[test]
    fn localpush_stays_within_eps(g in graph_strategy(40), eps in prop::sample::select(vec![0.1, 0.03, 0.01])) {
        let c = 0.6;
        let raw = simrank_localpush(&g, c, eps).unwrap();
        prop_assert!(raw.max_residual() <= (1.0 - c) * eps);
        let mut est = raw.estimate_dense();
        est.scale(1.0 - c);
        let series = simrank_power_series(&g, c, 60).unwrap();
        prop_assert!(est.max_abs_diff(&series.scores) <= eps);
    }

    #[test]
    fn pruning_with_large_k_is_lossless(g in graph_strategy(24), extra in 0usize..5, h_seed in any::<u64>()) {
        use rand::Rng;
        let n = g.num_nodes();
        let s = simrank_fixedpoint(&g, 0.6, 8).unwrap();
        let sparse = topk_prune(&s, n + extra).unwrap();
        let nonzero = (0..n).map(|u| (0..n).filter(|&v| s.get(u, v) > 0.0).count());
        for (u, count) in nonzero.enumerate() {
            prop_assert_eq!(sparse.row_len(u), count);
        }
        let mut rng = rng_from_seed(h_seed);
        let h = DenseMatrix::from_vec(n, 3, (0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let dense = s.scores.matmul(&h).unwrap();
        prop_assert!(sparse_aggregate(&sparse, &h).unwrap().max_abs_diff(&dense) <= 1e-12);
    }

    #[test]
    fn pruned_rows_keep_the_largest_scores(g in graph_strategy(24), k in 1usize..6) {
        let s = simrank_fixedpoint(&g, 0.6, 8).unwrap();
        let sparse = topk_prune(&s, k).unwrap();
        for u in 0..g.num_nodes() {
            prop_assert!(sparse.row_len(u) <= k);
            let kept_min = sparse.row(u).map(|(_, x)| x).fold(f64::INFINITY, f64::min);
            for v in 0..g.num_nodes() {
                if sparse.get(u, v) == 0.0 {
                    prop_assert!(s.get(u, v) <= kept_min);
                }
            }
        }
    }

    #[test]
    fn aggregation_is_linear(
        (h1, h2) in (1usize..12).prop_flat_map(|n| (matrix_strategy(n, 3), matrix_strategy(n, 3))),
        alpha in 0.0f64..=1.0,
    ) {
        let n = h1.rows();
        let g = Graph::from_edges(n, &(1..n).map(|v| (v - 1, v)).collect::<Vec<_>>()).unwrap();
        let s = topk_prune(&simrank_fixedpoint(&g, 0.6, 8).unwrap(), 4).unwrap();
        let mut sum = h1.clone();
        sum.axpy(1.0, &h2).unwrap();
        let lhs = aggregate(&s, &sum, alpha).unwrap();
        let mut rhs = aggregate(&s, &h1, alpha).unwrap();
        rhs.axpy(1.0, &aggregate(&s, &h2, alpha).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }
}

#[test]
fn skip_only_model_ignores_similarity() {
    let b = gen_twin_graph(12, 3).unwrap().bundle;
    let hp = HyperParams {
        alpha: 1.0,
        hidden: 12,
        max_epochs: 40,
        patience: None,
        ..HyperParams::default()
    };
    let s = topk_prune(&simrank_fixedpoint(&b.graph, 0.6, 10).unwrap(), 16).unwrap();
    let (p1, r1) = fit_with_similarity(&b, &s, &hp, 0.0).unwrap();
    let (p2, r2) = fit_with_similarity(&b, &SparseSim::identity(b.num_nodes(), 0.6), &hp, 0.0).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(r1.without_timing(), r2.without_timing());
}

#[test]
fn twin_bundle_is_memorized() {
    let b = gen_twin_graph(3, 4).unwrap().bundle;
    assert!(b.num_nodes() <= 100);
    let hp = HyperParams {
        max_epochs: 200,
        patience: None,
        ..HyperParams::default()
    };
    let s = simga::model::precompute_similarity(&b, &hp).unwrap();
    let mut params = simga::model::SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(0));
    // Train on the training split until it is fit, independent of early stopping.
    let lens: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let mut adam = simga::nn::AdamState::new(&lens);
    let mut rng = rng_from_seed(1);
    for _ in 0..200 {
        let (_, grads, _) =
            simga::model::loss_and_grad(&b, &s, &params, &hp, &b.splits.train, true, &mut rng).unwrap();
        simga::nn::adam_step(&mut params.tensors_mut(), &grads.tensors(), &mut adam, hp.lr, hp.weight_decay);
    }
    let acc = simga::model::evaluate(&b, &s, &params, &hp, simga::dataset::Split::Train).unwrap();
    assert_eq!(acc, 1.0);
}

#[test]
fn timing_fields_account_for_the_run() {
    let b = gen_twin_graph(5, 3).unwrap().bundle;
    let hp = HyperParams {
        max_epochs: 30,
        hidden: 16,
        ..HyperParams::default()
    };
    let start = std::time::Instant::now();
    let (_, report) = simga::model::fit(&b, &hp).unwrap();
    let wall = start.elapsed().as_secs_f64();
    let accounted = report.precompute_seconds + report.train_seconds;
    assert!(accounted <= wall + 1e-6);
    assert!(wall - accounted <= 0.05 + 0.1 * wall, "wall {wall}, accounted {accounted}");
}
