use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use relwl::corpus::fixture;
use relwl::exec::ExecPolicy;
use relwl::kg::{
    canonical_tree_code, default_pair_coloring, load_graph, product_square, unravel_with_budget,
    KnowledgeGraph, PairColoringMode, DEFAULT_NODE_BUDGET,
};
use relwl::logic::{
    compile_gml_to_rmpnn, eval_gml_all, eval_rgfo3_all, parse_formula, translate_gml_to_rgfo3,
    translate_rgfo3_to_gml, Arity, Formula,
};
use relwl::nn::{
    build_cmpnn_simulator, build_rwl1_simulator, cmpnn_forward_all, rmpnn_forward, FeatureTable,
};
use relwl::verify::{run_suite, Suite, VerifyOptions};
use relwl::wl::{
    distinguishes, equivalent, run_test_with, Distinction, HistoryFunction, Horizon, RunOptions,
    TestId, WLTrace,
};

const NODE_BUDGET_VAR: &str = "RELWL_NODE_BUDGET";

#[derive(Parser)]
#[command(name = "relwl", version, about = "Relational Weisfeiler-Leman tests and their neural and logical counterparts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a refinement test and print its trace.
    Run(RunArgs),
    /// Report when two nodes or pairs are first separated.
    Compare(CompareArgs),
    /// Run seeded property suites.
    Verify(VerifyArgs),
    /// Evaluate, compile or translate a formula.
    Logic(LogicArgs),
    /// Build a simulating network and check it against its test.
    Simulate(SimulateArgs),
    /// Canonical code of a node's unravelling tree.
    Unravel(UnravelArgs),
    /// Write a built-in fixture as TSV files.
    Fixture(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Args)]
struct GraphArgs {
    /// Triples file: `head<TAB>relation<TAB>tail` per line.
    #[arg(long)]
    graph: PathBuf,
    /// Node colors: `node<TAB>color` per line.
    #[arg(long)]
    colors: Option<PathBuf>,
    /// Pair colors: `u<TAB>v<TAB>color` per line.
    #[arg(long)]
    pair_colors: Option<PathBuf>,
}

impl GraphArgs {
    fn load(&self) -> Result<KnowledgeGraph> {
        Ok(load_graph(&self.graph, self.colors.as_deref(), self.pair_colors.as_deref())?)
    }

    /// Loads the graph, falling back to the diagonal pair coloring when
    /// `pairs` is set and none was given.
    fn load_for(&self, pairs: bool) -> Result<KnowledgeGraph> {
        let g = self.load()?;
        if pairs && g.pair_coloring().is_none() {
            eprintln!("warning: no pair coloring given, using the diagonal default");
            let pc = default_pair_coloring(&g, PairColoringMode::Diagonal);
            return Ok(g.with_pair_coloring(pc)?);
        }
        Ok(g)
    }
}

#[derive(Args)]
struct HorizonArgs {
    /// `id`, `zero`, or a file holding a history table.
    #[arg(long, default_value = "id")]
    history: String,
    /// Number of refinement rounds.
    #[arg(long, conflicts_with = "stabilize")]
    iters: Option<usize>,
    /// Refine until the partition stops changing (the default).
    #[arg(long)]
    stabilize: bool,
    /// Run without rayon.
    #[arg(long)]
    sequential: bool,
}

impl HorizonArgs {
    fn options(&self) -> Result<RunOptions> {
        let horizon = match self.iters {
            Some(n) => Horizon::Iterations(n),
            None => Horizon::Stabilize,
        };
        Ok(RunOptions::new(parse_history(&self.history)?, horizon).exec(exec(self.sequential)))
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_test)]
    test: TestId,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    horizon: HorizonArgs,
    #[arg(long, value_enum, default_value = "json")]
    out: Output,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_parser = parse_test)]
    test: TestId,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    horizon: HorizonArgs,
    /// A node, or a pair written `u,v`.
    first: String,
    second: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instances per check; defaults to each check's own corpus size.
    #[arg(long)]
    trials: Option<usize>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_enum, default_value = "json")]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogicAction {
    Eval,
    Compile,
    Translate,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArityArg {
    Unary,
    Binary,
}

#[derive(Args)]
struct LogicArgs {
    action: LogicAction,
    /// File holding the formula text.
    #[arg(long)]
    formula: PathBuf,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    colors: Option<PathBuf>,
    #[arg(long)]
    pair_colors: Option<PathBuf>,
    /// Binary formulas are evaluated on pairs: `all` or `u,v`.
    #[arg(long)]
    pairs: Option<String>,
    /// Defaults to binary when `--pairs` is given and unary otherwise.
    #[arg(long, value_enum)]
    arity: Option<ArityArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimulatorKind {
    Rwl1,
    Cmpnn,
}

#[derive(Args)]
struct SimulateArgs {
    kind: SimulatorKind,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value = "id")]
    history: String,
    /// Query relation for C-MPNNs.
    #[arg(long)]
    query: Option<String>,
    /// Print the network instead of the comparison.
    #[arg(long)]
    emit_network: bool,
}

#[derive(Args)]
struct UnravelArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    node: String,
    #[arg(long)]
    depth: usize,
}

#[derive(Args)]
struct FixtureArgs {
    name: String,
    #[arg(long)]
    dir: PathBuf,
}

fn parse_test(s: &str) -> std::result::Result<TestId, String> {
    s.parse().map_err(|e: relwl::Error| e.to_string())
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: relwl::Error| e.to_string())
}

fn parse_history(s: &str) -> Result<HistoryFunction> {
    match s {
        "id" | "identity" | "zero" => Ok(HistoryFunction::parse(s)?),
        path => {
            let text = read(Path::new(path))?;
            Ok(HistoryFunction::parse(&text)?)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn exec(sequential: bool) -> ExecPolicy {
    if sequential {
        ExecPolicy::Sequential
    } else {
        ExecPolicy::Parallel
    }
}

fn node_budget() -> Result<usize> {
    match std::env::var(NODE_BUDGET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{NODE_BUDGET_VAR} must be a positive integer, got `{v}`")),
        Err(_) => Ok(DEFAULT_NODE_BUDGET),
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Outcome of a command that ran to completion.
enum Status {
    Pass,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<Status> {
    match cmd {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Verify(a) => verify(a),
        Command::Logic(a) => logic(a),
        Command::Simulate(a) => simulate(a),
        Command::Unravel(a) => unravel(a),
        Command::Fixture(a) => {
            std::fs::create_dir_all(&a.dir)
                .with_context(|| format!("creating {}", a.dir.display()))?;
            fixture(&a.name)?.export(&a.dir)?;
            Ok(Status::Pass)
        }
    }
}

fn run(a: RunArgs) -> Result<Status> {
    let g = a.graph.load_for(a.test.arity() == 2)?;
    let trace = run_test_with(a.test, &g, &a.horizon.options()?)?;
    match a.out {
        Output::Json => print_json(&trace.to_json(&g)),
        Output::Text => print_trace(&trace, &g),
    }
    Ok(Status::Pass)
}

fn print_trace(trace: &WLTrace, g: &KnowledgeGraph) {
    let n = trace.node_count;
    let name = |i: usize| {
        if trace.arity() == 1 {
            g.node_name(i).to_string()
        } else {
            format!("({},{})", g.node_name(i / n), g.node_name(i % n))
        }
    };
    println!("test {}", trace.test);
    for (t, c) in trace.colorings.iter().enumerate() {
        let classes: Vec<String> = c
            .classes()
            .into_iter()
            .map(|cl| format!("{{{}}}", cl.into_iter().map(name).collect::<Vec<_>>().join(" ")))
            .collect();
        println!("t={t} classes={} {}", c.class_count(), classes.join(" "));
    }
    match trace.stabilized_at {
        Some(t) => println!("stabilized at {t}"),
        None => println!("not stabilized within {} iterations", trace.horizon()),
    }
}

/// Index of a node (`v`) or pair (`u,v`) in the trace's domain.
fn element(g: &KnowledgeGraph, arity: usize, text: &str) -> Result<usize> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match (arity, parts.as_slice()) {
        (1, [v]) => Ok(g.node_id(v)?),
        (2, [u, v]) => Ok(g.node_id(u)? * g.node_count() + g.node_id(v)?),
        _ => bail!("`{text}` is not a {}", if arity == 1 { "node" } else { "pair u,v" }),
    }
}

fn compare(a: CompareArgs) -> Result<Status> {
    let g = a.graph.load_for(a.test.arity() == 2)?;
    let trace = run_test_with(a.test, &g, &a.horizon.options()?)?;
    let x = element(&g, a.test.arity(), &a.first)?;
    let y = element(&g, a.test.arity(), &a.second)?;
    let verdict = match distinguishes(&trace, x, y)? {
        Distinction::At(t) => json!({ "distinguished_at": t }),
        Distinction::Never => json!("never"),
        Distinction::UnknownBeyondHorizon => json!("unknown beyond horizon"),
    };
    print_json(&json!({
        "test": a.test.name(),
        "first": a.first,
        "second": a.second,
        "verdict": verdict,
        "stabilized_at": trace.stabilized_at,
    }));
    Ok(Status::Pass)
}

fn verify(a: VerifyArgs) -> Result<Status> {
    let command = format!(
        "verify --suite {} --seed {}{}",
        a.suite,
        a.seed,
        a.trials.map(|t| format!(" --trials {t}")).unwrap_or_default()
    );
    let opts = VerifyOptions {
        seed: a.seed,
        trials: a.trials,
        exec: exec(a.sequential),
        node_budget: node_budget()?,
    };
    let report = run_suite(a.suite, &opts, &command)?;
    match a.out {
        Output::Json => print_json(&report.to_json(a.timings)),
        Output::Text => {
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                if a.timings {
                    println!("{mark} [{}] {} ({} instances, {:.0} ms)", c.suite, c.name, c.instances, c.elapsed_ms);
                } else {
                    println!("{mark} [{}] {} ({} instances)", c.suite, c.name, c.instances);
                }
                if let Some(w) = &c.witness {
                    println!("  witness: {w}");
                }
            }
            let failed = report.failures().count();
            println!("{} checks, {failed} failed", report.checks.len());
        }
    }
    Ok(if report.passed() {
        Status::Pass
    } else {
        Status::Violation
    })
}

fn logic(a: LogicArgs) -> Result<Status> {
    let arity = match (a.arity, &a.pairs) {
        (Some(ArityArg::Unary), _) => Arity::Unary,
        (Some(ArityArg::Binary), _) | (None, Some(_)) => Arity::Binary,
        (None, None) => Arity::Unary,
    };
    let phi = parse_formula(read(&a.formula)?.trim(), arity)?;
    let graph = |pairs: bool| -> Result<KnowledgeGraph> {
        let Some(path) = &a.graph else {
            bail!("--graph is required for this action");
        };
        GraphArgs {
            graph: path.clone(),
            colors: a.colors.clone(),
            pair_colors: a.pair_colors.clone(),
        }
        .load_for(pairs)
    };
    match a.action {
        LogicAction::Translate => {
            let other = match arity {
                Arity::Unary => translate_gml_to_rgfo3(&phi)?,
                Arity::Binary => translate_rgfo3_to_gml(&phi)?,
            };
            println!("{other}");
        }
        LogicAction::Eval => eval(&phi, &graph(arity == Arity::Binary)?, a.pairs.as_deref())?,
        LogicAction::Compile => {
            let compiled = match (arity, &a.graph) {
                (Arity::Unary, Some(_)) => {
                    let g = graph(false)?;
                    compile_gml_to_rmpnn(&phi, g.color_labels(), g.relations())?
                }
                (Arity::Unary, None) => {
                    let (colors, relations) = vocabulary(&phi);
                    compile_gml_to_rmpnn(&phi, &colors, &relations)?
                }
                (Arity::Binary, _) => {
                    let g = graph(true)?;
                    let square = product_square(&g)?;
                    let pc = g.pair_coloring().expect("loaded with a pair coloring");
                    compile_gml_to_rmpnn(&translate_rgfo3_to_gml(&phi)?, pc.labels(), square.relations())?
                }
            };
            print_json(&json!({
                "formula": phi.to_string(),
                "subformulas": compiled.index.len(),
                "colors": compiled.colors,
                "relations": compiled.relations,
                "network": compiled.spec.to_json(),
            }));
        }
    }
    Ok(Status::Pass)
}

fn vocabulary(phi: &Formula) -> (Vec<String>, Vec<String>) {
    let idx = relwl::logic::SubformulaIndex::new(&phi.expr);
    let mut colors: Vec<String> = idx.atoms().map(String::from).collect();
    let mut relations: Vec<String> = idx.relations().map(String::from).collect();
    colors.sort();
    colors.dedup();
    relations.sort();
    relations.dedup();
    (colors, relations)
}

fn eval(phi: &Formula, g: &KnowledgeGraph, pairs: Option<&str>) -> Result<()> {
    match phi.arity {
        Arity::Unary => {
            let truth = eval_gml_all(g, phi)?;
            let nodes: Vec<Value> = (0..g.node_count())
                .map(|v| json!({ "node": g.node_name(v), "value": truth[v] }))
                .collect();
            print_json(&json!({ "formula": phi.to_string(), "nodes": nodes }));
        }
        Arity::Binary => {
            let n = g.node_count();
            let truth = eval_rgfo3_all(g, phi, ExecPolicy::default())?;
            let selected: Vec<usize> = match pairs.unwrap_or("all") {
                "all" => (0..n * n).collect(),
                one => vec![element(g, 2, one)?],
            };
            let rows: Vec<Value> = selected
                .into_iter()
                .map(|i| json!({ "pair": [g.node_name(i / n), g.node_name(i % n)], "value": truth[i] }))
                .collect();
            print_json(&json!({ "formula": phi.to_string(), "pairs": rows }));
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<Status> {
    let history = parse_history(&a.history)?;
    let (test, g, table, network): (TestId, KnowledgeGraph, FeatureTable<_>, Value) = match a.kind {
        SimulatorKind::Rwl1 => {
            let g = a.graph.load()?;
            let sim = build_rwl1_simulator(&g, a.layers, &history)?;
            let table = rmpnn_forward(&g, &sim.spec, &sim.initial)?;
            (TestId::Rwl1, g, table, sim.spec.to_json())
        }
        SimulatorKind::Cmpnn => {
            let g = a.graph.load_for(true)?;
            let sim = build_cmpnn_simulator(&g, a.layers, &history)?;
            let q = match &a.query {
                Some(r) => g.relation_id(r)?,
                None => 0,
            };
            if g.relation_count() == 0 {
                bail!("the graph has no relations to query");
            }
            let table = cmpnn_forward_all(&g, &sim.spec, q, ExecPolicy::default())?;
            (TestId::Rawl2, g, table, sim.spec.to_json())
        }
    };
    if a.emit_network {
        print_json(&network);
        return Ok(Status::Pass);
    }
    let trace = run_test_with(test, &g, &RunOptions::new(history, Horizon::Iterations(a.layers)))?;
    let mut layers = Vec::new();
    let mut all = true;
    for t in 0..=a.layers {
        let features = table.partition(t);
        let same = equivalent(&features, &trace.colorings[t])?;
        all &= same;
        layers.push(json!({
            "layer": t,
            "feature_classes": features.class_count(),
            "test_classes": trace.colorings[t].class_count(),
            "match": same,
        }));
    }
    print_json(&json!({ "test": test.name(), "layers": layers, "match": all }));
    Ok(if all { Status::Pass } else { Status::Violation })
}

fn unravel(a: UnravelArgs) -> Result<Status> {
    let g = a.graph.load()?;
    let v = g.node_id(&a.node)?;
    let tree = unravel_with_budget(&g, v, a.depth, node_budget()?)?;
    print_json(&json!({
        "node": a.node,
        "depth": a.depth,
        "tree_nodes": tree.len(),
        "code": canonical_tree_code(&tree).as_str(),
    }));
    Ok(Status::Pass)
}
