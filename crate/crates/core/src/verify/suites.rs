use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{graph_witness, monotonicity_violation, trial_rng, Check, Suite, VerifyOptions};
use crate::corpus::{
    all_fixtures, random_formula, random_history, random_kg_with, FormulaConfig, PairColorMode,
    RandomGraphConfig,
};
use crate::error::Result;
use crate::exec::ExecPolicy;
use crate::kg::{
    canonical_tree_code, product_square, unravel_with_budget, KnowledgeGraph, PairColoring,
};
use crate::logic::{
    classify_pairs_via_compile, compile_gml_to_rmpnn, eval_gml_all, eval_gml_subformulas,
    eval_rgfo3_all, translate_gml_to_rgfo3, translate_rgfo3_to_gml, Arity, Expr, Formula,
};
use crate::nn::{
    build_cmpnn_simulator, build_rwl1_simulator, cmpnn_forward_all, random_cmpnn, rmpnn_forward,
    Activation, MessageKind, RandomInit, RandomNetworkConfig,
};
use crate::numeric::Rational;
use crate::wl::{
    equivalent, refines, run_test_with, Coloring, HistoryFunction, Horizon, RunOptions, TestId,
    WLTrace,
};

const SEQ: ExecPolicy = ExecPolicy::Sequential;

/// Per-instance outcome: the first failure plus monotonicity of every trace
/// the instance produced.
#[derive(Default)]
struct Trial {
    failure: Option<Value>,
    traces: usize,
    non_monotone: Option<Value>,
}

impl Trial {
    fn fail(&mut self, witness: Value) {
        if self.failure.is_none() {
            self.failure = Some(witness);
        }
    }

    fn trace(&mut self, g: &KnowledgeGraph, test: TestId, opts: &RunOptions) -> Result<WLTrace> {
        let trace = run_test_with(test, g, opts)?;
        self.traces += 1;
        if let Some(t) = monotonicity_violation(&trace) {
            if self.non_monotone.is_none() {
                self.non_monotone = Some(json!({
                    "graph": graph_witness(g),
                    "test": test.name(),
                    "iteration": t + 1,
                }));
            }
        }
        Ok(trace)
    }
}

struct Ctx<'a> {
    opts: &'a VerifyOptions,
    suite: Suite,
    checks: Vec<Check>,
    traces: usize,
    non_monotone: Option<Value>,
}

impl Ctx<'_> {
    /// Runs `count` independent instances of one property, in parallel when
    /// allowed, and records the aggregated check.
    fn check<F>(&mut self, name: &str, default_count: usize, f: F)
    where
        F: Fn(&mut ChaCha8Rng, &mut Trial) -> Result<()> + Sync + Send,
    {
        let count = self.opts.trials.unwrap_or(default_count);
        let start = Instant::now();
        let seed = self.opts.seed;
        let label = format!("{}/{name}", self.suite.name());
        let results = self.opts.exec.map(count, |i| {
            let mut rng = trial_rng(seed, &label, i);
            let mut trial = Trial::default();
            if let Err(e) = f(&mut rng, &mut trial) {
                trial.fail(json!({ "error": e.to_string() }));
            }
            trial
        });
        let mut witness = None;
        for (i, t) in results.into_iter().enumerate() {
            self.traces += t.traces;
            if witness.is_none() {
                witness = t.failure.map(|w| json!({ "trial": i, "detail": w }));
            }
            if self.non_monotone.is_none() {
                self.non_monotone = t.non_monotone.map(|w| json!({ "check": name, "trial": i, "detail": w }));
            }
        }
        self.checks.push(Check {
            suite: self.suite,
            name: name.to_string(),
            passed: witness.is_none(),
            instances: count,
            witness,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    fn finish(mut self) -> Vec<Check> {
        self.checks.push(Check {
            suite: self.suite,
            name: format!("{}: monotone refinement", self.suite.name()),
            passed: self.non_monotone.is_none(),
            instances: self.traces,
            witness: self.non_monotone,
            elapsed_ms: 0.0,
        });
        self.checks
    }
}

pub(super) fn run(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut ctx = Ctx {
        opts,
        suite,
        checks: Vec::new(),
        traces: 0,
        non_monotone: None,
    };
    match suite {
        Suite::Reduction => reduction(&mut ctx),
        Suite::History => history(&mut ctx),
        Suite::Hierarchy => hierarchy(&mut ctx),
        Suite::Simulation => simulation(&mut ctx),
        Suite::Logic => logic(&mut ctx),
        Suite::Fixtures => fixtures(&mut ctx)?,
        Suite::All => unreachable!("expanded by the caller"),
    }
    Ok(ctx.finish())
}

fn corpus_graph(rng: &mut ChaCha8Rng, pair_colors: PairColorMode) -> KnowledgeGraph {
    let node_colors = rng.random_range(1..=3);
    random_kg_with(
        rng,
        &RandomGraphConfig {
            n_max: 10,
            r_max: 3,
            density: 0.3,
            node_colors,
            pair_colors,
            ..Default::default()
        },
    )
}

fn first_split(a: &WLTrace, b: &WLTrace, upto: usize) -> Result<Option<usize>> {
    for t in 0..=upto {
        if !equivalent(&a.colorings[t], &b.colorings[t])? {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

fn reduction(ctx: &mut Ctx) {
    ctx.check("reduction: rawl2 on G equals rwl1 on the pair graph", 200, |rng, trial| {
        let mode = if rng.random_bool(0.5) {
            PairColorMode::Random(rng.random_range(1..=3))
        } else {
            PairColorMode::Diagonal
        };
        let g = corpus_graph(rng, mode);
        let opts = RunOptions::new(HistoryFunction::Identity, Horizon::Iterations(4))
            .waive_tnd()
            .exec(SEQ);
        let pairwise = trial.trace(&g, TestId::Rawl2, &opts)?;
        let square = product_square(&g)?;
        let unary = trial.trace(&square, TestId::Rwl1, &opts)?;
        if let Some(t) = first_split(&pairwise, &unary, 4)? {
            trial.fail(json!({ "graph": graph_witness(&g), "iteration": t }));
        }
        Ok(())
    });
}

fn history(ctx: &mut Ctx) {
    ctx.check("history independence of rwl1", 200, |rng, trial| {
        let g = corpus_graph(rng, PairColorMode::None);
        let table = random_history(rng, 5);
        let horizon = Horizon::Iterations(5);
        let run = |trial: &mut Trial, f: &HistoryFunction| {
            trial.trace(&g, TestId::Rwl1, &RunOptions::new(f.clone(), horizon).exec(SEQ))
        };
        let id = run(trial, &HistoryFunction::Identity)?;
        for f in [HistoryFunction::Zero, table] {
            let other = run(trial, &f)?;
            if let Some(t) = first_split(&id, &other, 5)? {
                trial.fail(json!({
                    "graph": graph_witness(&g),
                    "history": format!("{f:?}"),
                    "iteration": t,
                }));
            }
        }
        Ok(())
    });
}

fn hierarchy(ctx: &mut Ctx) {
    const ORDER: [(TestId, TestId); 4] = [
        (TestId::Rwl2Plus, TestId::Rwl2),
        (TestId::Rwl2, TestId::Rawl2),
        (TestId::Rwl2Plus, TestId::Rawl2Plus),
        (TestId::Rawl2Plus, TestId::Rawl2),
    ];
    ctx.check("hierarchy of pairwise tests", 100, |rng, trial| {
        let mode = if rng.random_bool(0.5) {
            PairColorMode::Diagonal
        } else {
            PairColorMode::ColoredDiagonal
        };
        let g = random_kg_with(
            rng,
            &RandomGraphConfig {
                n_max: 8,
                r_max: 3,
                density: 0.3,
                node_colors: 2,
                pair_colors: mode,
                ..Default::default()
            },
        );
        let opts = RunOptions::new(HistoryFunction::Identity, Horizon::Stabilize).exec(SEQ);
        let mut traces = Vec::new();
        for test in [TestId::Rawl2, TestId::Rwl2, TestId::Rawl2Plus, TestId::Rwl2Plus] {
            traces.push((test, trial.trace(&g, test, &opts)?));
        }
        let get = |t: TestId| &traces.iter().find(|(x, _)| *x == t).expect("ran").1;
        let horizon = traces.iter().map(|(_, tr)| tr.horizon()).max().unwrap_or(0);
        for (finer, coarser) in ORDER {
            for t in 0..=horizon {
                let a = get(finer).at(t).expect("stabilized");
                let b = get(coarser).at(t).expect("stabilized");
                if !refines(a, b)? {
                    trial.fail(json!({
                        "graph": graph_witness(&g),
                        "finer": finer.name(),
                        "coarser": coarser.name(),
                        "iteration": t,
                    }));
                }
            }
        }
        Ok(())
    });
}

fn simulation(ctx: &mut Ctx) {
    ctx.check("rwl1 simulator matches rwl1", 50, |rng, trial| {
        let node_colors = rng.random_range(1..=3);
        let g = random_kg_with(
            rng,
            &RandomGraphConfig {
                n_max: 7,
                r_max: 3,
                density: 0.3,
                node_colors,
                ..Default::default()
            },
        );
        let layers = rng.random_range(1..=4);
        let f = if rng.random_bool(0.5) {
            HistoryFunction::Identity
        } else {
            HistoryFunction::Zero
        };
        let sim = build_rwl1_simulator(&g, layers, &f)?;
        let table = rmpnn_forward(&g, &sim.spec, &sim.initial)?;
        let opts = RunOptions::new(f.clone(), Horizon::Iterations(layers)).exec(SEQ);
        let trace = trial.trace(&g, TestId::Rwl1, &opts)?;
        for t in 0..=layers {
            if !equivalent(&table.partition(t), &trace.colorings[t])? {
                trial.fail(json!({
                    "graph": graph_witness(&g),
                    "history": format!("{f:?}"),
                    "iteration": t,
                }));
                break;
            }
        }
        Ok(())
    });

    ctx.check("simulators ignore the history function", 50, |rng, _trial| {
        let g = random_kg_with(
            rng,
            &RandomGraphConfig {
                n_max: 6,
                r_max: 2,
                density: 0.3,
                node_colors: 2,
                ..Default::default()
            },
        );
        let layers = rng.random_range(1..=4);
        let run = |f: &HistoryFunction| -> Result<Vec<Coloring>> {
            let sim = build_rwl1_simulator(&g, layers, f)?;
            let table = rmpnn_forward(&g, &sim.spec, &sim.initial)?;
            Ok((0..=layers).map(|t| table.partition(t)).collect())
        };
        let (a, b) = (run(&HistoryFunction::Identity)?, run(&HistoryFunction::Zero)?);
        for t in 0..=layers {
            if !equivalent(&a[t], &b[t])? {
                _trial.fail(json!({ "graph": graph_witness(&g), "iteration": t }));
                break;
            }
        }
        Ok(())
    });

    ctx.check("C-MPNN simulator matches rawl2", 30, |rng, trial| {
        let mode = if rng.random_bool(0.5) {
            PairColorMode::Diagonal
        } else {
            PairColorMode::ColoredDiagonal
        };
        let node_colors = rng.random_range(1..=2);
        let g = random_kg_with(
            rng,
            &RandomGraphConfig {
                n_max: 5,
                r_max: 3,
                density: 0.3,
                node_colors,
                pair_colors: mode,
                ..Default::default()
            },
        );
        let layers = rng.random_range(1..=3);
        let f = if rng.random_bool(0.5) {
            HistoryFunction::Identity
        } else {
            HistoryFunction::Zero
        };
        let sim = build_cmpnn_simulator(&g, layers, &f)?;
        let q = rng.random_range(0..g.relation_count());
        let table = cmpnn_forward_all(&g, &sim.spec, q, SEQ)?;
        let opts = RunOptions::new(f.clone(), Horizon::Iterations(layers)).exec(SEQ);
        let trace = trial.trace(&g, TestId::Rawl2, &opts)?;
        for t in 0..=layers {
            if !equivalent(&table.partition(t), &trace.colorings[t])? {
                trial.fail(json!({
                    "graph": graph_witness(&g),
                    "history": format!("{f:?}"),
                    "iteration": t,
                }));
                break;
            }
        }
        Ok(())
    });

    ctx.check("rawl2 bounds exact C-MPNNs", 100, |rng, trial| {
        let g = random_kg_with(
            rng,
            &RandomGraphConfig {
                n_min: 2,
                n_max: 6,
                r_max: 3,
                density: 0.3,
                pair_colors: PairColorMode::Diagonal,
                ..Default::default()
            },
        );
        let f = if rng.random_bool(0.5) {
            HistoryFunction::Identity
        } else {
            HistoryFunction::Zero
        };
        let layers = 3;
        let cfg = RandomNetworkConfig {
            layers,
            width: 3,
            relation_count: g.relation_count(),
            initialization: *[RandomInit::Ones, RandomInit::Query].choose(rng).expect("non-empty"),
            message: *[MessageKind::QueryGated, MessageKind::VectorGated, MessageKind::Linear]
                .choose(rng)
                .expect("non-empty"),
            activation: *[
                Activation::Relu,
                Activation::Sign,
                Activation::TruncatedRelu,
                Activation::Identity,
            ]
            .choose(rng)
            .expect("non-empty"),
            history: f.clone(),
            seed: rng.random(),
            ..Default::default()
        };
        let spec = random_cmpnn::<Rational>(&cfg)?;
        let q = rng.random_range(0..g.relation_count());
        let table = cmpnn_forward_all(&g, &spec, q, SEQ)?;
        let opts = RunOptions::new(f, Horizon::Iterations(layers)).exec(SEQ);
        let trace = trial.trace(&g, TestId::Rawl2, &opts)?;
        for t in 0..=layers {
            if !refines(&trace.colorings[t], &table.partition(t))? {
                trial.fail(json!({
                    "graph": graph_witness(&g),
                    "network": spec.to_json(),
                    "query": q,
                    "iteration": t,
                }));
                break;
            }
        }
        Ok(())
    });
}

/// Formula shapes over placeholder atoms `0..3` and relations `r0`, `r1`.
fn formula_shape(rng: &mut ChaCha8Rng) -> Expr {
    random_formula(
        rng,
        &FormulaConfig {
            max_depth: 3,
            max_count: 3,
            atoms: (0..3).map(|i| i.to_string()).collect(),
            relations: vec!["r0".into(), "r1".into()],
            positive: false,
        },
    )
}

fn rename_atoms(e: &Expr, names: &[&str]) -> Expr {
    match e {
        Expr::Atom(a) => Expr::atom(names[a.parse::<usize>().expect("placeholder atom")]),
        Expr::Not(b) => Expr::not(rename_atoms(b, names)),
        Expr::And(a, b) => Expr::and(rename_atoms(a, names), rename_atoms(b, names)),
        Expr::Exists {
            count,
            relation,
            body,
        } => Expr::exists(*count, relation, rename_atoms(body, names)),
    }
}

const PAIR_ATOMS: [&str; 3] = ["eq", "a", "b"];
const NODE_ATOMS: [&str; 3] = ["c0", "c1", "c2"];
const LOGIC_GRAPHS: usize = 20;

/// Graph with relations `r0`, `r1`; node colors `c0..c2` and pair colors
/// `eq` (diagonal), `a`, `b`, each occurring at least once.
fn logic_graph(seed: u64, i: usize) -> KnowledgeGraph {
    let mut rng = trial_rng(seed, "logic/graphs", i);
    let g = random_kg_with(
        &mut rng,
        &RandomGraphConfig {
            n_min: 3,
            n_max: 8,
            r_max: 1,
            density: 0.3,
            ..Default::default()
        },
    );
    let n = g.node_count();
    let mut b = KnowledgeGraph::builder();
    for name in g.nodes() {
        b.add_node(name);
    }
    b.add_relation("r0");
    b.add_relation("r1");
    for f in g.facts() {
        b.add_fact_ids(f.relation, f.source, f.target);
    }
    for u in 0..n {
        for v in 0..n {
            if rng.random_bool(0.15) {
                b.add_fact_ids(1, u, v);
            }
        }
    }
    let labels: Vec<&str> = (0..n)
        .map(|v| if v < 3 { NODE_ATOMS[v] } else { *NODE_ATOMS.choose(&mut rng).expect("non-empty") })
        .collect();
    let pairs: Vec<&str> = (0..n * n)
        .map(|i| match (i / n, i % n) {
            (u, v) if u == v => "eq",
            (0, 1) => "a",
            (1, 0) => "b",
            _ => if rng.random_bool(0.5) { "a" } else { "b" },
        })
        .collect();
    b.build()
        .with_node_labels(&labels)
        .and_then(|g| g.with_pair_coloring(PairColoring::from_fn(n, |u, v| pairs[u * n + v].into())))
        .expect("sizes agree")
}

fn logic(ctx: &mut Ctx) {
    let seed = ctx.opts.seed;
    let graphs: Vec<KnowledgeGraph> = (0..LOGIC_GRAPHS).map(|i| logic_graph(seed, i)).collect();
    let squares: Vec<KnowledgeGraph> = graphs
        .iter()
        .map(|g| product_square(g).expect("pair coloring present"))
        .collect();
    let graphs = &graphs;
    let squares = &squares;

    ctx.check("translation: graded modal to binary", 100, |rng, trial| {
        let phi = Formula::new(rename_atoms(&formula_shape(rng), &PAIR_ATOMS), Arity::Unary)?;
        let binary = translate_gml_to_rgfo3(&phi)?;
        for (g, sq) in graphs.iter().zip(squares) {
            if eval_gml_all(sq, &phi)? != eval_rgfo3_all(g, &binary, SEQ)? {
                trial.fail(json!({ "graph": graph_witness(g), "formula": phi.to_string() }));
            }
        }
        Ok(())
    });

    ctx.check("translation: binary to graded modal", 100, |rng, trial| {
        let phi = Formula::new(rename_atoms(&formula_shape(rng), &PAIR_ATOMS), Arity::Binary)?;
        let unary = translate_rgfo3_to_gml(&phi)?;
        for (g, sq) in graphs.iter().zip(squares) {
            if eval_rgfo3_all(g, &phi, SEQ)? != eval_gml_all(sq, &unary)? {
                trial.fail(json!({ "graph": graph_witness(g), "formula": phi.to_string() }));
            }
        }
        Ok(())
    });

    ctx.check("pair classification through compilation", 100, |rng, trial| {
        let phi = Formula::new(rename_atoms(&formula_shape(rng), &PAIR_ATOMS), Arity::Binary)?;
        for g in graphs {
            if classify_pairs_via_compile(&phi, g)? != eval_rgfo3_all(g, &phi, SEQ)? {
                trial.fail(json!({ "graph": graph_witness(g), "formula": phi.to_string() }));
            }
        }
        Ok(())
    });

    ctx.check("compiled R-MPNN components are exact", 100, |rng, trial| {
        let phi = Formula::new(rename_atoms(&formula_shape(rng), &NODE_ATOMS), Arity::Unary)?;
        let colors: Vec<String> = NODE_ATOMS.iter().map(|s| s.to_string()).collect();
        for g in graphs {
            let compiled = compile_gml_to_rmpnn(&phi, &colors, g.relations())?;
            let table = compiled.run(g)?;
            let truth = eval_gml_subformulas(g, &compiled.index)?;
            let l = compiled.index.len();
            for (i, row) in truth.iter().enumerate() {
                for t in i + 1..=l {
                    for (v, &b) in row.iter().enumerate() {
                        let x = table.vector(t, v)[i];
                        if x != if b { 1.0 } else { 0.0 } {
                            trial.fail(json!({
                                "graph": graph_witness(g),
                                "formula": phi.to_string(),
                                "subformula": i,
                                "layer": t,
                                "node": g.node_name(v),
                                "value": x,
                            }));
                        }
                    }
                }
            }
            if compiled.classify(g)? != truth[l - 1] {
                trial.fail(json!({ "graph": graph_witness(g), "formula": phi.to_string() }));
            }
        }
        Ok(())
    });

    let budget = ctx.opts.node_budget;
    ctx.check("unravelling codes match rwl1", 50, move |rng, trial| {
        let acyclic = rng.random_bool(0.5);
        let node_colors = rng.random_range(1..=2);
        let g = random_kg_with(
            rng,
            &RandomGraphConfig {
                n_max: if acyclic { 7 } else { 5 },
                r_max: 2,
                density: if acyclic { 0.3 } else { 0.15 },
                node_colors,
                acyclic,
                ..Default::default()
            },
        );
        let depth = rng.random_range(0..=3);
        let opts = RunOptions::new(HistoryFunction::Identity, Horizon::Iterations(depth)).exec(SEQ);
        let trace = trial.trace(&g, TestId::Rwl1, &opts)?;
        let codes = (0..g.node_count())
            .map(|v| unravel_with_budget(&g, v, depth, budget).map(|t| canonical_tree_code(&t)))
            .collect::<Result<Vec<_>>>()?;
        let colors = &trace.colorings[depth];
        for v in 0..g.node_count() {
            for w in v + 1..g.node_count() {
                if (codes[v] == codes[w]) != (colors.color(v) == colors.color(w)) {
                    trial.fail(json!({
                        "graph": graph_witness(&g),
                        "nodes": [g.node_name(v), g.node_name(w)],
                        "depth": depth,
                    }));
                }
            }
        }
        Ok(())
    });
}

fn fixtures(ctx: &mut Ctx) -> Result<()> {
    for fx in all_fixtures() {
        let start = Instant::now();
        let results = fx.check()?;
        let per_claim = start.elapsed().as_secs_f64() * 1e3 / results.len().max(1) as f64;
        for r in results {
            let c = &r.claim;
            let passed = r.passed();
            ctx.checks.push(Check {
                suite: Suite::Fixtures,
                name: format!(
                    "fixture {}: {} on ({},{}) vs ({},{}) {}",
                    fx.name, c.test, c.a.0, c.a.1, c.b.0, c.b.1, c.verdict
                ),
                passed,
                instances: 1,
                witness: (!passed).then(|| {
                    json!({
                        "graph": graph_witness(&fx.graph),
                        "observed": format!("{:?}", r.observed),
                    })
                }),
                elapsed_ms: per_claim,
            });
        }
        let opts = RunOptions::new(HistoryFunction::Identity, Horizon::Stabilize);
        for test in TestId::ALL {
            let trace = run_test_with(test, &fx.graph, &opts)?;
            ctx.traces += 1;
            if let Some(t) = monotonicity_violation(&trace) {
                ctx.non_monotone.get_or_insert_with(|| {
                    json!({ "fixture": fx.name, "test": test.name(), "iteration": t + 1 })
                });
            }
        }
    }
    Ok(())
}
