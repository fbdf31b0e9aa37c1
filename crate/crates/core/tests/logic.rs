mod common;

use proptest::prelude::*;
use relwl::corpus::{fixture, random_formula, rng, FormulaConfig, PairColorMode};
use relwl::error::Error;
use relwl::exec::ExecPolicy;
use relwl::kg::{product_square, KnowledgeGraph};
use relwl::logic::{
    classify_pairs_via_compile, compile_gml_to_rmpnn, eval_gml, eval_gml_all,
    eval_gml_subformulas, eval_rgfo3, eval_rgfo3_all, parse_formula, translate_gml_to_rgfo3,
    translate_rgfo3_to_gml, Arity, Expr, Formula,
};
use rand::Rng;

fn unary(text: &str) -> Formula {
    parse_formula(text, Arity::Unary).unwrap()
}

fn binary(text: &str) -> Formula {
    parse_formula(text, Arity::Binary).unwrap()
}

/// gb with `x` colored `c` and every other node `d`.
fn gb_colored() -> KnowledgeGraph {
    let g = fixture("gb").unwrap().graph;
    let labels: Vec<&str> = g.nodes().iter().map(|v| if v == "x" { "c" } else { "d" }).collect();
    g.with_node_labels(&labels).unwrap()
}

#[test]
fn parses_examples() {
    assert_eq!(unary("A:eq").expr, Expr::atom("eq"));
    assert_eq!(binary("DIA[r,2](A:eq)").expr, Expr::exists(2, "r", Expr::atom("eq")));
    assert_eq!(
        binary("(A:eq & !A:eq)").expr,
        Expr::and(Expr::atom("eq"), Expr::not(Expr::atom("eq")))
    );
}

#[test]
fn parse_errors_carry_offsets() {
    for (text, offset) in [("DIA[r,0](A:c)", 6), ("(A:c & A:d", 10), ("A:", 2), ("A:c junk", 4)] {
        match parse_formula(text, Arity::Unary) {
            Err(Error::Syntax { offset: o, .. }) => assert_eq!(o, offset, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn binary_evaluation_on_ga() {
    let g = fixture("ga").unwrap().graph;
    let (u, v) = (g.node_id("u").unwrap(), g.node_id("v").unwrap());
    let phi = binary("DIA[r1,1](A:neq)");
    assert!(eval_rgfo3(&g, &phi, u, u).unwrap());
    assert!(!eval_rgfo3(&g, &phi, u, v).unwrap());
    assert!(eval_rgfo3(&g, &binary("A:eq"), u, u).unwrap());
    let classified = classify_pairs_via_compile(&phi, &g).unwrap();
    let n = g.node_count();
    assert!(classified[u * n + u]);
    assert!(!classified[u * n + v]);
}

#[test]
fn diagonal_atom_holds_on_diagonal_only() {
    let g = fixture("ga").unwrap().graph;
    let n = g.node_count();
    let truth = eval_rgfo3_all(&g, &binary("A:eq"), ExecPolicy::Parallel).unwrap();
    let via = classify_pairs_via_compile(&binary("A:eq"), &g).unwrap();
    for i in 0..n * n {
        assert_eq!(truth[i], i / n == i % n);
        assert_eq!(via[i], truth[i]);
    }
    assert_eq!(truth.iter().filter(|&&b| b).count(), 3);
}

#[test]
fn modal_evaluation_on_gb() {
    let g = gb_colored();
    let up = g.node_id("u'").unwrap();
    let x = g.node_id("x").unwrap();
    assert!(eval_gml(&g, &unary("A:c"), x).unwrap());
    assert!(eval_gml(&g, &unary("DIA[r,1](A:c)"), up).unwrap());
    assert!(!eval_gml(&g, &unary("DIA[r,2](A:c)"), up).unwrap());
}

#[test]
fn unknown_vocabulary_is_rejected() {
    let g = gb_colored();
    assert!(eval_gml_all(&g, &unary("A:nope")).is_err());
    assert!(eval_gml_all(&g, &unary("DIA[s,1](A:c)")).is_err());
}

#[test]
fn translation_preserves_structure() {
    let phi = unary("DIA[r,3]((A:a & !DIA[s,1](A:b)))");
    let bin = translate_gml_to_rgfo3(&phi).unwrap();
    assert_eq!(bin.arity, Arity::Binary);
    assert_eq!(bin.expr, phi.expr);
    assert_eq!(translate_rgfo3_to_gml(&bin).unwrap().to_string(), phi.to_string());
    assert_eq!(translate_gml_to_rgfo3(&unary("A:a")).unwrap().expr, Expr::atom("a"));
}

#[test]
fn compile_single_atom() {
    let g = gb_colored();
    let c = compile_gml_to_rmpnn(&unary("A:c"), g.color_labels(), g.relations()).unwrap();
    assert_eq!(c.spec.dims[1], 1);
    let out = c.run(&g).unwrap();
    for v in 0..g.node_count() {
        let want = if g.node_name(v) == "x" { 1.0 } else { 0.0 };
        assert_eq!(out.vector(1, v), &[want]);
    }
}

#[test]
fn compile_counting_quantifier() {
    let g = gb_colored();
    let phi = unary("DIA[r,2](A:c)");
    let c = compile_gml_to_rmpnn(&phi, g.color_labels(), g.relations()).unwrap();
    let bias = c.spec.layers[0].bias.as_ref().unwrap();
    assert_eq!(bias[c.index.root()], -1.0);
    let up = g.node_id("u'").unwrap();
    assert!(!c.classify(&g).unwrap()[up]);
    assert_eq!(c.classify(&g).unwrap(), eval_gml_all(&g, &phi).unwrap());
}

#[test]
fn compile_rejects_binary_formulas() {
    assert!(compile_gml_to_rmpnn(&binary("A:eq"), &[], &[]).is_err());
}

fn pair_graph(seed: u64) -> KnowledgeGraph {
    common::graph(seed, 5, 2, PairColorMode::Random(3))
}

fn shape(r: &mut impl Rng, atoms: &[&str], relations: &[String], positive: bool) -> Expr {
    random_formula(
        r,
        &FormulaConfig {
            max_depth: 3,
            max_count: 3,
            atoms: atoms.iter().map(|s| s.to_string()).collect(),
            relations: relations.to_vec(),
            positive,
        },
    )
}

/// Brute-force binary semantics over the fact list.
fn reference(g: &KnowledgeGraph, e: &Expr, u: usize, v: usize) -> bool {
    let pc = g.pair_coloring().unwrap();
    match e {
        Expr::Atom(a) => pc.label(u, v) == a,
        Expr::Not(b) => !reference(g, b, u, v),
        Expr::And(a, b) => reference(g, a, u, v) && reference(g, b, u, v),
        Expr::Exists { count, relation, body } => {
            let r = g.relation_id(relation).unwrap();
            let hits = g
                .facts()
                .iter()
                .filter(|f| f.relation == r && f.target == v && reference(g, body, u, f.source))
                .count();
            hits >= *count as usize
        }
    }
}

fn with_extra_facts(g: &KnowledgeGraph, seed: u64) -> KnowledgeGraph {
    let mut r = rng(seed ^ 0xfac7);
    let mut b = KnowledgeGraph::builder();
    for v in g.nodes() {
        b.add_node(v);
    }
    for rel in g.relations() {
        b.add_relation(rel);
    }
    for f in g.facts() {
        b.add_fact_ids(f.relation, f.source, f.target);
    }
    let n = g.node_count();
    for _ in 0..3 {
        b.add_fact_ids(r.random_range(0..g.relation_count()), r.random_range(0..n), r.random_range(0..n));
    }
    let labels: Vec<&str> = (0..n).map(|v| g.node_color_label(v)).collect();
    b.build().with_node_labels(&labels).unwrap()
}

proptest! {
    #![proptest_config(common::cases(48))]

    #[test]
    fn display_parse_round_trip(seed in any::<u64>(), bin in any::<bool>()) {
        let arity = if bin { Arity::Binary } else { Arity::Unary };
        let e = shape(&mut rng(seed), &["a", "b_1", "p0"], &["r0".into(), "has.part".into()], false);
        let phi = Formula::new(e, arity).unwrap();
        prop_assert_eq!(parse_formula(&phi.to_string(), arity).unwrap(), phi);
    }

    #[test]
    fn binary_evaluation_matches_reference(seed in any::<u64>()) {
        let g = pair_graph(seed);
        let labels: Vec<&str> = g.pair_coloring().unwrap().labels().iter().map(String::as_str).collect();
        let phi = Formula::new(shape(&mut rng(seed), &labels, g.relations(), false), Arity::Binary).unwrap();
        let n = g.node_count();
        let all = eval_rgfo3_all(&g, &phi, ExecPolicy::Parallel).unwrap();
        for i in 0..n * n {
            prop_assert_eq!(all[i], reference(&g, &phi.expr, i / n, i % n));
        }
    }

    #[test]
    fn translations_agree_through_pair_graph(seed in any::<u64>()) {
        let g = pair_graph(seed);
        let sq = product_square(&g).unwrap();
        let labels: Vec<&str> = g.pair_coloring().unwrap().labels().iter().map(String::as_str).collect();
        let e = shape(&mut rng(seed), &labels, g.relations(), false);
        let un = Formula::new(e.clone(), Arity::Unary).unwrap();
        let bi = Formula::new(e, Arity::Binary).unwrap();
        let direct = eval_rgfo3_all(&g, &bi, ExecPolicy::Sequential).unwrap();
        prop_assert_eq!(&eval_gml_all(&sq, &translate_rgfo3_to_gml(&bi).unwrap()).unwrap(), &direct);
        prop_assert_eq!(&eval_rgfo3_all(&g, &translate_gml_to_rgfo3(&un).unwrap(), ExecPolicy::Sequential).unwrap(), &eval_gml_all(&sq, &un).unwrap());
        prop_assert_eq!(classify_pairs_via_compile(&bi, &g).unwrap(), direct);
    }

    #[test]
    fn compiled_components_are_exact(seed in any::<u64>()) {
        let g = common::graph(seed, 8, 2, PairColorMode::None);
        let colors: Vec<&str> = g.color_labels().iter().map(String::as_str).collect();
        let phi = Formula::new(shape(&mut rng(seed), &colors, g.relations(), false), Arity::Unary).unwrap();
        let c = compile_gml_to_rmpnn(&phi, g.color_labels(), g.relations()).unwrap();
        let table = c.run(&g).unwrap();
        let truth = eval_gml_subformulas(&g, &c.index).unwrap();
        let l = c.index.len();
        for (i, row) in truth.iter().enumerate() {
            for t in i + 1..=l {
                for (v, &b) in row.iter().enumerate() {
                    prop_assert_eq!(table.vector(t, v)[i], if b { 1.0 } else { 0.0 });
                }
            }
        }
        let out: Vec<bool> = (0..g.node_count()).map(|v| table.vector(l + 1, v)[0] == 1.0).collect();
        prop_assert_eq!(&out, &eval_gml_all(&g, &phi).unwrap());
        prop_assert_eq!(c.classify(&g).unwrap(), out);
    }

    #[test]
    fn classifiers_are_invariant(seed in any::<u64>()) {
        let g = pair_graph(seed);
        let labels: Vec<&str> = g.pair_coloring().unwrap().labels().iter().map(String::as_str).collect();
        let phi = Formula::new(shape(&mut rng(seed), &labels, g.relations(), false), Arity::Binary).unwrap();
        let n = g.node_count();
        let perm = common::permutation(seed, n);
        let h = g.permuted(&perm).unwrap();
        let a = eval_rgfo3_all(&g, &phi, ExecPolicy::Sequential).unwrap();
        let b = eval_rgfo3_all(&h, &phi, ExecPolicy::Sequential).unwrap();
        for i in 0..n * n {
            prop_assert_eq!(a[i], b[perm[i / n] * n + perm[i % n]]);
        }
    }

    #[test]
    fn positive_formulas_are_monotone(seed in any::<u64>()) {
        let g = common::graph(seed, 6, 2, PairColorMode::None);
        let colors: Vec<&str> = g.color_labels().iter().map(String::as_str).collect();
        let phi = Formula::new(shape(&mut rng(seed), &colors, g.relations(), true), Arity::Unary).unwrap();
        prop_assert!(!phi.expr.has_negation());
        let before = eval_gml_all(&g, &phi).unwrap();
        let after = eval_gml_all(&with_extra_facts(&g, seed), &phi).unwrap();
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(!b || *a);
        }
    }
}
