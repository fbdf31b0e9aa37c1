mod common;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use relwl::corpus::{fixture, rng, PairColorMode};
use relwl::exec::ExecPolicy;
use relwl::kg::KnowledgeGraph;
use relwl::matrix::Matrix;
use relwl::nn::{
    build_cmpnn_simulator, build_rwl1_simulator, build_sign_matrix, cmpnn_forward,
    cmpnn_forward_all, fts_matrix, random_cmpnn, random_features, random_rmpnn, rmpnn_forward,
    score_link, Activation, Aggregation, MessageKind, MlpDecoder, NetworkSpec, RandomInit,
    RandomNetworkConfig,
};
use relwl::numeric::{relu, sign, truncated_relu, Rational, Scalar};
use relwl::wl::{run_test, HistoryFunction, Horizon, TestId};
use rand::Rng;

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn int_matrix(rows: &[&[i64]]) -> Matrix<BigInt> {
    Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
        .unwrap()
}

/// `sign(X B - J)` evaluated directly.
fn signs(x: &Matrix<Rational>, b: &Matrix<BigInt>) -> Vec<Vec<i32>> {
    let (n, p) = (b.rows(), b.cols());
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let v: Rational = (0..n).map(|k| &x[(i, k)] * Rational::from_integer(b[(k, j)].clone())).sum();
                    let d = v - Rational::one();
                    assert!(!d.is_zero(), "pre-activation hits the threshold");
                    if d.is_positive() { 1 } else { -1 }
                })
                .collect()
        })
        .collect()
}

#[test]
fn sign_matrix_of_identity() {
    let s = build_sign_matrix(&int_matrix(&[&[1, 0], &[0, 1]]), 2).unwrap();
    let got = signs(&s.x, &int_matrix(&[&[1, 0], &[0, 1]]));
    let permuted: Vec<Vec<i32>> = got.iter().map(|r| s.order.iter().map(|&j| r[j]).collect()).collect();
    assert_eq!(permuted, vec![vec![-1, -1], vec![1, -1]]);
}

#[test]
fn sign_matrix_single_column() {
    for n in 1..6 {
        let b = Matrix::from_fn(n, 1, |i, _| BigInt::from((i % 3) as i64 + 1));
        let s = build_sign_matrix(&b, n).unwrap();
        let col: Vec<i32> = signs(&s.x, &b).into_iter().map(|r| r[0]).collect();
        let mut want = vec![1; n];
        want[0] = -1;
        assert_eq!(col, want);
    }
}

#[test]
fn sign_matrix_preconditions() {
    assert!(build_sign_matrix(&int_matrix(&[&[1, 1], &[2, 2]]), 2).is_err());
    assert!(build_sign_matrix(&int_matrix(&[&[0, 1], &[0, 2]]), 2).is_err());
    assert!(build_sign_matrix(&int_matrix(&[&[-1]]), 1).is_err());
    assert!(build_sign_matrix(&int_matrix(&[&[1, 2]]), 1).is_err());
}

#[test]
fn fts_definition() {
    let f = fts_matrix::<f64>(3);
    assert_eq!(f.row(0), &[-1.0, -1.0, -1.0]);
    assert_eq!(f.row(1), &[1.0, -1.0, -1.0]);
    assert_eq!(f.row(2), &[1.0, 1.0, -1.0]);
    assert!(fts_matrix::<Rational>(4).inverse().is_ok());
}

fn gb_uniform() -> KnowledgeGraph {
    fixture("gb").unwrap().graph.without_pair_coloring()
}

fn classes(g: &KnowledgeGraph, c: &relwl::wl::Coloring) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = c
        .classes()
        .into_iter()
        .map(|cl| {
            let mut v: Vec<String> = cl.into_iter().map(|i| g.node_name(i).to_string()).collect();
            v.sort();
            v
        })
        .collect();
    out.sort();
    out
}

#[test]
fn edgeless_layer_is_activation_of_self() {
    let mut b = KnowledgeGraph::builder();
    for v in ["a", "b", "c", "d"] {
        b.add_node(v);
    }
    b.add_relation("r");
    let g = b.build();
    for act in [Activation::Sign, Activation::Relu, Activation::TruncatedRelu, Activation::Identity] {
        let spec = random_rmpnn::<Rational>(&RandomNetworkConfig { activation: act, seed: 4, ..Default::default() }).unwrap();
        let x = random_features::<Rational>(9, 4, 3);
        let table = rmpnn_forward(&g, &spec, &x).unwrap();
        let layer = &spec.layers[0];
        for v in 0..4 {
            let mut pre = layer.weight.mul_vec(&x[v]).unwrap();
            for (p, b) in pre.iter_mut().zip(layer.bias.as_ref().unwrap()) {
                *p += b;
            }
            let want: Vec<Rational> = pre
                .iter()
                .map(|p| match act {
                    Activation::Sign => sign(p),
                    Activation::Relu => relu(p),
                    Activation::TruncatedRelu => truncated_relu(p),
                    Activation::Identity => p.clone(),
                })
                .collect();
            assert_eq!(table.vector(1, v), want.as_slice());
        }
    }
}

#[test]
fn random_sign_network_on_gb() {
    let g = gb_uniform();
    let spec = random_rmpnn::<Rational>(&RandomNetworkConfig {
        activation: Activation::Sign,
        layers: 1,
        with_bias: false,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let x = vec![vec![q(1); 3]; g.node_count()];
    let table = rmpnn_forward(&g, &spec, &x).unwrap();
    assert_eq!(classes(&g, &table.partition(1)), vec![vec!["u", "v", "x"], vec!["u'"]]);
}

#[test]
fn rwl1_simulator_on_gb() {
    let g = gb_uniform();
    let sim = build_rwl1_simulator(&g, 1, &HistoryFunction::Identity).unwrap();
    let table = rmpnn_forward(&g, &sim.spec, &sim.initial).unwrap();
    assert_eq!(classes(&g, &table.partition(1)), vec![vec!["u", "v", "x"], vec!["u'"]]);
}

#[test]
fn rwl1_simulator_on_symmetric_graph() {
    let mut b = KnowledgeGraph::builder();
    for v in ["a", "b", "c"] {
        b.add_node(v);
    }
    b.add_relation("r");
    let g = b.build();
    let sim = build_rwl1_simulator(&g, 3, &HistoryFunction::Identity).unwrap();
    let table = rmpnn_forward(&g, &sim.spec, &sim.initial).unwrap();
    for t in 0..=3 {
        assert!(table.layers[t].iter().all(|h| h == &table.layers[t][0]));
    }
}

#[test]
fn cmpnn_simulator_keeps_ga_pairs_together() {
    let g = fixture("ga").unwrap().graph;
    let sim = build_cmpnn_simulator(&g, 2, &HistoryFunction::Identity).unwrap();
    let (u, v, vp) = (g.node_id("u").unwrap(), g.node_id("v").unwrap(), g.node_id("v'").unwrap());
    for qr in 0..g.relation_count() {
        let table = cmpnn_forward_all(&g, &sim.spec, qr, ExecPolicy::Sequential).unwrap();
        for t in 0..=2 {
            assert_eq!(table.pair(t, u, v), table.pair(t, u, vp));
        }
    }
}

#[test]
fn cmpnn_simulator_single_node() {
    let mut b = KnowledgeGraph::builder();
    b.add_fact("a", "r", "a");
    let g = b.build();
    let g = g.clone().with_pair_coloring(relwl::kg::default_pair_coloring(&g, relwl::kg::PairColoringMode::Diagonal)).unwrap();
    let sim = build_cmpnn_simulator(&g, 2, &HistoryFunction::Identity).unwrap();
    let table = cmpnn_forward_all(&g, &sim.spec, 0, ExecPolicy::Sequential).unwrap();
    assert!((0..=2).all(|t| table.partition(t).class_count() == 1));
}

#[test]
fn cmpnn_simulator_needs_target_node_distinguishability() {
    let g = common::graph(11, 5, 2, PairColorMode::Random(1));
    if g.node_count() > 1 {
        assert!(build_cmpnn_simulator(&g, 1, &HistoryFunction::Identity).is_err());
    }
}

#[test]
fn query_initialization() {
    let g = fixture("gc").unwrap().graph;
    let spec = random_cmpnn::<Rational>(&RandomNetworkConfig { relation_count: 2, seed: 3, ..Default::default() }).unwrap();
    for qr in 0..2 {
        for u in 0..g.node_count() {
            let row = cmpnn_forward(&g, &spec, qr, u).unwrap();
            for v in 0..g.node_count() {
                let want = if u == v { spec.query_vectors[qr].clone() } else { vec![q(0); 3] };
                assert_eq!(row.vector(0, v), want.as_slice());
            }
        }
    }
    assert!(spec.target_node_distinguishability(0, g.node_count()));
}

#[test]
fn zero_initialization_is_uniform() {
    let g = fixture("gc").unwrap().graph;
    let spec = random_cmpnn::<Rational>(&RandomNetworkConfig {
        relation_count: 2,
        initialization: RandomInit::Zero,
        ..Default::default()
    })
    .unwrap();
    assert!(!spec.target_node_distinguishability(0, g.node_count()));
    let table = cmpnn_forward_all(&g, &spec, 0, ExecPolicy::Sequential).unwrap();
    assert_eq!(table.partition(0).class_count(), 1);
}

#[test]
fn basic_model_on_ga() {
    let g = fixture("ga").unwrap().graph;
    let (u, v, vp) = (g.node_id("u").unwrap(), g.node_id("v").unwrap(), g.node_id("v'").unwrap());
    for seed in 0..5 {
        let spec = random_cmpnn::<Rational>(&RandomNetworkConfig {
            relation_count: 2,
            message: MessageKind::QueryGated,
            seed,
            ..Default::default()
        })
        .unwrap();
        for qr in 0..2 {
            let table = cmpnn_forward_all(&g, &spec, qr, ExecPolicy::Sequential).unwrap();
            assert_eq!(table.pair(2, u, v), table.pair(2, u, vp));
        }
    }
}

#[test]
fn exact_mode_rejects_irrational_parts() {
    let pna = RandomNetworkConfig { aggregation: Aggregation::Pna { avg_log_degree: 1.0 }, ..Default::default() };
    assert!(random_cmpnn::<Rational>(&pna).is_err());
    assert!(random_cmpnn::<f64>(&pna).is_ok());
    for init in [RandomInit::QueryNoise, RandomInit::Noise] {
        let cfg = RandomNetworkConfig { initialization: init, ..Default::default() };
        assert!(random_cmpnn::<Rational>(&cfg).is_err());
        assert!(random_cmpnn::<f64>(&cfg).is_ok());
    }
}

#[test]
fn zero_decoder_scores_one_half() {
    let g = fixture("gd").unwrap().graph;
    let spec = random_cmpnn::<f64>(&RandomNetworkConfig { relation_count: 2, ..Default::default() }).unwrap();
    let dec = MlpDecoder::zeros(3, 4);
    for u in 0..g.node_count() {
        for v in 0..g.node_count() {
            assert_eq!(score_link(&spec, &dec, &g, 1, u, v).unwrap(), 0.5);
        }
    }
    let exact = random_cmpnn::<Rational>(&RandomNetworkConfig { relation_count: 2, ..Default::default() }).unwrap();
    assert!(score_link(&exact, &dec, &g, 0, 0, 0).is_err());
}

#[test]
fn ga_scores_agree_on_unseparated_pairs() {
    let g = fixture("ga").unwrap().graph;
    let (u, v, vp) = (g.node_id("u").unwrap(), g.node_id("v").unwrap(), g.node_id("v'").unwrap());
    for seed in 0..4 {
        let spec = random_cmpnn::<f64>(&RandomNetworkConfig {
            relation_count: 2,
            message: MessageKind::QueryGated,
            seed,
            ..Default::default()
        })
        .unwrap();
        let dec = MlpDecoder::random(seed, 3, 8);
        for qr in 0..2 {
            let a = score_link(&spec, &dec, &g, qr, u, v).unwrap();
            let b = score_link(&spec, &dec, &g, qr, u, vp).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn network_json_round_trip() {
    let spec = random_cmpnn::<Rational>(&RandomNetworkConfig { relation_count: 3, layers: 3, ..Default::default() }).unwrap();
    assert_eq!(NetworkSpec::<Rational>::from_json(&spec.to_json()).unwrap(), spec);
    let float = random_cmpnn::<f64>(&RandomNetworkConfig {
        aggregation: Aggregation::Pna { avg_log_degree: 0.7 },
        initialization: RandomInit::QueryNoise,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(NetworkSpec::<f64>::from_json(&float.to_json()).unwrap(), float);
    assert!(NetworkSpec::<Rational>::from_json(&float.to_json()).is_err());
}

fn pick<T: Clone>(r: &mut impl Rng, items: &[T]) -> T {
    items[r.random_range(0..items.len())].clone()
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(common::cases(32))]

    #[test]
    fn sign_matrix_matches_fts_prefix(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let p = r.random_range(1..=n);
        let mut cols: Vec<Vec<i64>> = Vec::new();
        while cols.len() < p {
            let c: Vec<i64> = (0..n).map(|_| r.random_range(0..4)).collect();
            if c.iter().any(|&x| x != 0) && !cols.contains(&c) {
                cols.push(c);
            }
        }
        let b = Matrix::from_fn(n, p, |i, j| BigInt::from(cols[j][i]));
        let s = build_sign_matrix(&b, n).unwrap();
        let got = signs(&s.x, &b);
        for i in 0..n {
            for j in 0..p {
                let fts = if j >= i { -1 } else { 1 };
                prop_assert_eq!(got[i][s.order[j]], fts);
            }
        }
    }

    #[test]
    fn rwl1_simulator_matches_rwl1(seed in any::<u64>(), layers in 1usize..=4, zero in any::<bool>()) {
        let g = common::graph(seed, 7, 3, PairColorMode::None);
        let f = if zero { HistoryFunction::Zero } else { HistoryFunction::Identity };
        let sim = build_rwl1_simulator(&g, layers, &f).unwrap();
        let table = rmpnn_forward(&g, &sim.spec, &sim.initial).unwrap();
        let oracle = common::naive_rwl1(&g, &f, layers);
        for t in 0..=layers {
            prop_assert!(common::same_partition(&table.layers[t], &oracle[t]));
        }
    }

    #[test]
    fn builders_ignore_history(seed in any::<u64>(), layers in 1usize..=3) {
        let g = common::graph(seed, 6, 2, PairColorMode::None);
        let run = |f: HistoryFunction| {
            let sim = build_rwl1_simulator(&g, layers, &f).unwrap();
            rmpnn_forward(&g, &sim.spec, &sim.initial).unwrap()
        };
        let (a, b) = (run(HistoryFunction::Identity), run(HistoryFunction::Zero));
        for t in 0..=layers {
            prop_assert!(common::same_partition(&a.layers[t], &b.layers[t]));
        }
    }

    #[test]
    fn upper_bound_for_exact_networks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = common::graph(seed, 5, 3, PairColorMode::Diagonal);
        let f = pick(&mut r, &[HistoryFunction::Identity, HistoryFunction::Zero]);
        let spec = random_cmpnn::<Rational>(&RandomNetworkConfig {
            layers: 3,
            relation_count: g.relation_count(),
            initialization: pick(&mut r, &[RandomInit::Ones, RandomInit::Query]),
            message: pick(&mut r, &[MessageKind::QueryGated, MessageKind::VectorGated, MessageKind::Linear]),
            activation: pick(&mut r, &[Activation::Sign, Activation::Relu, Activation::Identity]),
            history: f.clone(),
            seed,
            ..Default::default()
        }).unwrap();
        let qr = r.random_range(0..g.relation_count());
        let table = cmpnn_forward_all(&g, &spec, qr, ExecPolicy::Sequential).unwrap();
        let oracle = common::naive_pairs(&g, 3, false);
        for t in 0..=3 {
            prop_assert!(common::finer(&oracle[t], &table.layers[t]));
        }
    }

    #[test]
    fn cmpnn_features_are_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = common::graph(seed, 5, 2, PairColorMode::None);
        let n = g.node_count();
        let spec = random_cmpnn::<f64>(&RandomNetworkConfig {
            relation_count: g.relation_count(),
            initialization: pick(&mut r, &[RandomInit::Zero, RandomInit::Ones, RandomInit::Query, RandomInit::QueryNoise, RandomInit::Noise]),
            message: pick(&mut r, &[MessageKind::QueryGated, MessageKind::VectorGated, MessageKind::Linear, MessageKind::Scaling]),
            aggregation: pick(&mut r, &[Aggregation::Sum, Aggregation::Pna { avg_log_degree: 0.9 }]),
            activation: pick(&mut r, &[Activation::Relu, Activation::Identity]),
            seed,
            ..Default::default()
        }).unwrap();
        let perm = common::permutation(seed, n);
        let h = g.permuted(&perm).unwrap();
        let qr = r.random_range(0..g.relation_count());
        let a = cmpnn_forward_all(&g, &spec, qr, ExecPolicy::Parallel).unwrap();
        let b = cmpnn_forward_all(&h, &spec, qr, ExecPolicy::Sequential).unwrap();
        for t in 0..=spec.layer_count() {
            for u in 0..n {
                for v in 0..n {
                    prop_assert!(close(a.pair(t, u, v), b.pair(t, perm[u], perm[v])));
                }
            }
        }
    }

    #[test]
    fn link_scores_are_invariant(seed in any::<u64>()) {
        let g = common::graph(seed, 5, 2, PairColorMode::None);
        let spec = random_cmpnn::<f64>(&RandomNetworkConfig { relation_count: g.relation_count(), seed, ..Default::default() }).unwrap();
        let dec = MlpDecoder::random(seed, 3, 5);
        let perm = common::permutation(seed, g.node_count());
        let h = g.permuted(&perm).unwrap();
        for u in 0..g.node_count() {
            for v in 0..g.node_count() {
                let a = score_link(&spec, &dec, &g, 0, u, v).unwrap();
                let b = score_link(&spec, &dec, &h, 0, perm[u], perm[v]).unwrap();
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}

#[test]
fn cmpnn_simulator_matches_rawl2() {
    for seed in 0..12u64 {
        let mode = if seed % 2 == 0 { PairColorMode::Diagonal } else { PairColorMode::ColoredDiagonal };
        let g = common::graph(seed, 4, 2, mode);
        let layers = 1 + (seed % 3) as usize;
        let sim = build_cmpnn_simulator(&g, layers, &HistoryFunction::Identity).unwrap();
        let trace = run_test(TestId::Rawl2, &g, &HistoryFunction::Identity, Horizon::Iterations(layers)).unwrap();
        let table = cmpnn_forward_all(&g, &sim.spec, 0, ExecPolicy::Parallel).unwrap();
        for t in 0..=layers {
            assert!(common::same_partition(&table.layers[t], trace.colorings[t].colors()), "seed {seed} t {t}");
        }
    }
}

#[test]
fn scalar_modes() {
    assert_eq!(<f64 as Scalar>::from_ratio(1, 4), 0.25);
    assert_eq!(Rational::from_ratio(2, 4), Rational::new(BigInt::from(1), BigInt::from(2)));
    assert_eq!(sign(&0.0f64), -1.0);
    assert_eq!(truncated_relu(&q(3)), q(1));
}
