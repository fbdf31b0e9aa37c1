use super::{translate_rgfo3_to_gml, Arity, Formula, Subformula, SubformulaIndex};
use crate::error::{Error, Result};
use crate::kg::{product_square, KnowledgeGraph};
use crate::matrix::Matrix;
use crate::nn::{
    rmpnn_forward, Activation, Aggregation, Combine, FeatureTable, Initialization, Layer,
    MessageKind, NetworkConfig, NetworkKind, NetworkSpec, RelationParam,
};
use crate::wl::HistoryFunction;

/// An R-MPNN computing the truth of a graded modal formula.
///
/// Layers `1..=L` keep one component per subformula; component `ℓ` is exact
/// from layer `ℓ + 1` on (components are 0-based). Layer `L + 1` extracts
/// the root component.
#[derive(Clone, Debug)]
pub struct CompiledClassifier {
    pub index: SubformulaIndex,
    pub spec: NetworkSpec<f64>,
    pub colors: Vec<String>,
    pub relations: Vec<String>,
}

pub fn compile_gml_to_rmpnn(
    phi: &Formula,
    colors: &[String],
    relations: &[String],
) -> Result<CompiledClassifier> {
    if phi.arity != Arity::Unary {
        return Err(Error::Validation("only unary formulas compile to R-MPNNs".into()));
    }
    let index = SubformulaIndex::new(&phi.expr);
    let l = index.len();
    let mut w = Matrix::<f64>::zeros(l, l);
    let mut w_r = vec![Matrix::<f64>::zeros(l, l); relations.len()];
    let mut b = vec![0.0; l];
    for (i, s) in index.entries().iter().enumerate() {
        match s {
            Subformula::Atom(a) => {
                if !colors.contains(a) {
                    return Err(Error::lookup("color", a));
                }
                w[(i, i)] = 1.0;
            }
            Subformula::Not(k) => {
                w[(i, *k)] = -1.0;
                b[i] = 1.0;
            }
            Subformula::And(j, k) => {
                w[(i, *j)] += 1.0;
                w[(i, *k)] += 1.0;
                b[i] = -1.0;
            }
            Subformula::Exists {
                count,
                relation,
                body,
            } => {
                let r = relations
                    .iter()
                    .position(|x| x == relation)
                    .ok_or_else(|| Error::lookup("relation", relation))?;
                w_r[r][(i, *body)] = 1.0;
                b[i] = 1.0 - f64::from(*count);
            }
        }
    }
    let layer = Layer {
        weight: w,
        bias: Some(b),
        relations: w_r.into_iter().map(RelationParam::Matrix).collect(),
        pna_mixer: None,
    };
    let extract = Layer {
        weight: Matrix::from_fn(1, l, |_, j| if j == l - 1 { 1.0 } else { 0.0 }),
        bias: Some(vec![0.0]),
        relations: vec![RelationParam::Matrix(Matrix::zeros(1, l)); relations.len()],
        pna_mixer: None,
    };
    let mut layers = vec![layer; l];
    layers.push(extract);
    let mut dims = vec![l; l + 1];
    dims.push(1);
    let spec = NetworkSpec::new(NetworkConfig {
        kind: NetworkKind::Rmpnn,
        dims,
        layers,
        relation_count: relations.len(),
        query_vectors: Vec::new(),
        initialization: Initialization::Zero,
        message: MessageKind::Linear,
        aggregation: Aggregation::Sum,
        activation: Activation::TruncatedRelu,
        combine: Combine::SelfWeighted,
        history: HistoryFunction::Identity,
        rng_seed: 0,
        strict_sign: false,
    })?;
    Ok(CompiledClassifier {
        index,
        spec,
        colors: colors.to_vec(),
        relations: relations.to_vec(),
    })
}

impl CompiledClassifier {
    /// Component `ℓ` is 1 iff subformula `ℓ` is an atom naming the node's color.
    pub fn initial_features(&self, g: &KnowledgeGraph) -> Result<Vec<Vec<f64>>> {
        self.check_graph(g)?;
        Ok((0..g.node_count())
            .map(|v| {
                let c = g.node_color_label(v);
                self.index
                    .entries()
                    .iter()
                    .map(|s| match s {
                        Subformula::Atom(a) if a == c => 1.0,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect())
    }

    fn check_graph(&self, g: &KnowledgeGraph) -> Result<()> {
        if g.relations() != self.relations.as_slice() {
            return Err(Error::Validation(
                "graph relations differ from the compiled vocabulary".into(),
            ));
        }
        if let Some(c) = g.color_labels().iter().find(|c| !self.colors.contains(c)) {
            return Err(Error::lookup("color", c));
        }
        Ok(())
    }

    pub fn run(&self, g: &KnowledgeGraph) -> Result<FeatureTable<f64>> {
        rmpnn_forward(g, &self.spec, &self.initial_features(g)?)
    }

    /// Node truth values read from the extraction layer.
    pub fn classify(&self, g: &KnowledgeGraph) -> Result<Vec<bool>> {
        let table = self.run(g)?;
        let last = table.layer_count() - 1;
        (0..g.node_count())
            .map(|v| match table.vector(last, v)[0] {
                x if x == 1.0 => Ok(true),
                x if x == 0.0 => Ok(false),
                x => Err(Error::Validation(format!(
                    "compiled output {x} at node {v} is not Boolean"
                ))),
            })
            .collect()
    }
}

/// Classifies every pair `(u, v)` of `g` by compiling the graded modal
/// reading of `phi` and running it on the pair graph. Indexed `u·n + v`.
pub fn classify_pairs_via_compile(phi: &Formula, g: &KnowledgeGraph) -> Result<Vec<bool>> {
    let unary = translate_rgfo3_to_gml(phi)?;
    let square = product_square(g)?;
    let pc = g.pair_coloring().expect("product_square checked the pair coloring");
    let compiled = compile_gml_to_rmpnn(&unary, pc.labels(), square.relations())?;
    compiled.classify(&square)
}
