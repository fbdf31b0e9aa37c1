use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

use super::{
    Activation, Aggregation, Combine, Initialization, MessageKind, NetworkKind, NetworkSpec,
    RelationParam,
};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::kg::{KnowledgeGraph, NodeId, RelId};
use crate::numeric::{relu, sign, truncated_relu, Scalar};
use crate::wl::Coloring;

/// Feature vectors per recorded layer `t = 0..=T`.
///
/// Arity 1 tables are indexed by node; arity 2 tables by the pair index
/// `u·n + v` and hold `h_{v|u,q}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable<S> {
    pub arity: usize,
    pub node_count: usize,
    pub layers: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> FeatureTable<S> {
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn vector(&self, t: usize, i: usize) -> &[S] {
        &self.layers[t][i]
    }

    pub fn pair(&self, t: usize, u: NodeId, v: NodeId) -> &[S] {
        &self.layers[t][u * self.node_count + v]
    }

    /// Groups indices with exactly equal vectors at layer `t`.
    pub fn partition(&self, t: usize) -> Coloring {
        Coloring::from_keys(self.layers[t].iter().map(|h| {
            let mut key = Vec::new();
            for x in h {
                x.key_bytes(&mut key);
            }
            key
        }))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "arity": self.arity,
            "node_count": self.node_count,
            "layers": self
                .layers
                .iter()
                .map(|layer| {
                    layer
                        .iter()
                        .map(|h| Value::Array(h.iter().map(S::to_json).collect()))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        })
    }
}

/// Runs an R-MPNN from the initial features `x` (one vector per node).
pub fn rmpnn_forward<S: Scalar>(
    g: &KnowledgeGraph,
    spec: &NetworkSpec<S>,
    x: &[Vec<S>],
) -> Result<FeatureTable<S>> {
    if spec.kind != NetworkKind::Rmpnn {
        return Err(Error::Validation("rmpnn_forward needs an R-MPNN".into()));
    }
    check_graph(g, spec)?;
    if x.len() != g.node_count() {
        return Err(Error::Dimension(format!(
            "{} initial features for {} nodes",
            x.len(),
            g.node_count()
        )));
    }
    if let Some(bad) = x.iter().position(|h| h.len() != spec.dims[0]) {
        return Err(Error::Dimension(format!(
            "initial feature of node {bad} has length {}, expected {}",
            x[bad].len(),
            spec.dims[0]
        )));
    }
    Ok(FeatureTable {
        arity: 1,
        node_count: g.node_count(),
        layers: propagate(g, spec, None, x.to_vec())?,
    })
}

/// Runs a C-MPNN for query `q` and source `u`. The returned table has arity
/// 1 and is indexed by the target node `v`.
pub fn cmpnn_forward<S: Scalar>(
    g: &KnowledgeGraph,
    spec: &NetworkSpec<S>,
    q: RelId,
    u: NodeId,
) -> Result<FeatureTable<S>> {
    check_cmpnn(g, spec, q)?;
    if u >= g.node_count() {
        return Err(Error::lookup("node", u.to_string()));
    }
    Ok(FeatureTable {
        arity: 1,
        node_count: g.node_count(),
        layers: source_row(g, spec, q, u)?,
    })
}

/// All conditional rows for query `q`, merged into an arity 2 table.
pub fn cmpnn_forward_all<S: Scalar>(
    g: &KnowledgeGraph,
    spec: &NetworkSpec<S>,
    q: RelId,
    exec: ExecPolicy,
) -> Result<FeatureTable<S>> {
    check_cmpnn(g, spec, q)?;
    let n = g.node_count();
    let rows = exec
        .map(n, |u| source_row(g, spec, q, u))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut layers = vec![Vec::with_capacity(n * n); spec.layer_count() + 1];
    for row in rows {
        for (t, layer) in row.into_iter().enumerate() {
            layers[t].extend(layer);
        }
    }
    Ok(FeatureTable {
        arity: 2,
        node_count: n,
        layers,
    })
}

fn check_graph<S: Scalar>(g: &KnowledgeGraph, spec: &NetworkSpec<S>) -> Result<()> {
    if g.relation_count() != spec.relation_count {
        return Err(Error::Dimension(format!(
            "network expects {} relations, graph has {}",
            spec.relation_count,
            g.relation_count()
        )));
    }
    Ok(())
}

fn check_cmpnn<S: Scalar>(g: &KnowledgeGraph, spec: &NetworkSpec<S>, q: RelId) -> Result<()> {
    if spec.kind != NetworkKind::Cmpnn {
        return Err(Error::Validation("cmpnn_forward needs a C-MPNN".into()));
    }
    check_graph(g, spec)?;
    if q >= g.relation_count() {
        return Err(Error::lookup("relation", q.to_string()));
    }
    if let Initialization::PairTable(table) = &spec.initialization {
        let n = g.node_count();
        if table.len() != n * n {
            return Err(Error::Dimension(format!(
                "pair table has {} entries, graph needs {}",
                table.len(),
                n * n
            )));
        }
    }
    Ok(())
}

fn source_row<S: Scalar>(
    g: &KnowledgeGraph,
    spec: &NetworkSpec<S>,
    q: RelId,
    u: NodeId,
) -> Result<Vec<Vec<Vec<S>>>> {
    let n = g.node_count();
    let d0 = spec.dims[0];
    let zero = vec![S::zero(); d0];
    let diagonal: Vec<S> = match &spec.initialization {
        Initialization::Zero | Initialization::PairTable(_) => zero.clone(),
        Initialization::Ones => vec![S::one(); d0],
        Initialization::Query => spec.query_vectors[q].clone(),
        Initialization::QueryNoise => {
            let eps = noise::<S>(spec.rng_seed, "node", g.node_name(u), d0);
            spec.query_vectors[q]
                .iter()
                .zip(eps)
                .map(|(z, e)| z.clone() + e)
                .collect()
        }
        Initialization::Noise => noise(spec.rng_seed, "relation", g.relation_name(q), d0),
    };
    let h0 = (0..n)
        .map(|v| match &spec.initialization {
            Initialization::PairTable(table) => table[u * n + v].clone(),
            _ if v == u => diagonal.clone(),
            _ => zero.clone(),
        })
        .collect();
    propagate(g, spec, Some(q), h0)
}

/// Standard normal vector keyed by `(seed, kind, name)`, so that it follows
/// nodes and relations through renaming of indices.
fn noise<S: Scalar>(seed: u64, kind: &str, name: &str, d: usize) -> Vec<S> {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in kind.bytes().chain([0]).chain(name.bytes()) {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ hash);
    (0..d)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            S::from_f64(x).expect("finite noise")
        })
        .collect()
}

fn propagate<S: Scalar>(
    g: &KnowledgeGraph,
    spec: &NetworkSpec<S>,
    q: Option<RelId>,
    h0: Vec<Vec<S>>,
) -> Result<Vec<Vec<Vec<S>>>> {
    let n = g.node_count();
    let mut layers = vec![h0];
    for (t, layer) in spec.layers.iter().enumerate() {
        let gates: Option<Vec<Vec<S>>> = match (spec.message, q) {
            (MessageKind::QueryGated, Some(q)) => Some(
                layer
                    .relations
                    .iter()
                    .map(|p| match p {
                        RelationParam::Matrix(w) => w.mul_vec(&spec.query_vectors[q]),
                        _ => unreachable!("validated"),
                    })
                    .collect::<Result<_>>()?,
            ),
            (MessageKind::QueryGated, None) => {
                return Err(Error::Validation(
                    "query-gated messages need a query relation".into(),
                ))
            }
            _ => None,
        };
        let own = &layers[spec.history.apply(t)];
        let cur = &layers[t];
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let messages = g
                .incoming(v)
                .iter()
                .map(|&(r, w)| message(spec.message, &layer.relations[r], gates.as_ref().map(|gs| &gs[r][..]), &cur[w]))
                .collect::<Result<Vec<_>>>()?;
            let m = match spec.combine {
                Combine::Shared => spec.dims[t],
                Combine::SelfWeighted => spec.dims[t + 1],
            };
            let mut agg = match spec.aggregation {
                Aggregation::Sum => sum(&messages, m),
                Aggregation::Pna { avg_log_degree } => {
                    let mixer = layer.pna_mixer.as_ref().expect("validated");
                    mixer.mul_vec(&pna(&messages, m, avg_log_degree))?
                }
            };
            let mut pre = match spec.combine {
                Combine::Shared => {
                    for (a, s) in agg.iter_mut().zip(&own[v]) {
                        *a = a.clone() + s.clone();
                    }
                    layer.weight.mul_vec(&agg)?
                }
                Combine::SelfWeighted => {
                    let mut x = layer.weight.mul_vec(&own[v])?;
                    for (a, s) in x.iter_mut().zip(agg) {
                        *a = a.clone() + s;
                    }
                    x
                }
            };
            if let Some(b) = &layer.bias {
                for (a, s) in pre.iter_mut().zip(b) {
                    *a = a.clone() + s.clone();
                }
            }
            let out = pre
                .iter()
                .enumerate()
                .map(|(k, x)| match spec.activation {
                    Activation::Sign => {
                        if spec.strict_sign && x.is_zero() {
                            Err(Error::ZeroSign {
                                context: format!("layer {t}, index {v}, component {k}"),
                            })
                        } else {
                            Ok(sign(x))
                        }
                    }
                    Activation::Relu => Ok(relu(x)),
                    Activation::TruncatedRelu => Ok(truncated_relu(x)),
                    Activation::Identity => Ok(x.clone()),
                })
                .collect::<Result<Vec<_>>>()?;
            next.push(out);
        }
        layers.push(next);
    }
    Ok(layers)
}

fn message<S: Scalar>(
    kind: MessageKind,
    param: &RelationParam<S>,
    gate: Option<&[S]>,
    h: &[S],
) -> Result<Vec<S>> {
    Ok(match (kind, param) {
        (MessageKind::Scaling, RelationParam::Scale(a)) => {
            h.iter().map(|x| x.clone() * a.clone()).collect()
        }
        (MessageKind::VectorGated, RelationParam::Vector(b)) => {
            h.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).collect()
        }
        (MessageKind::QueryGated, _) => h
            .iter()
            .zip(gate.expect("gate computed"))
            .map(|(x, y)| x.clone() * y.clone())
            .collect(),
        (MessageKind::Linear, RelationParam::Matrix(w)) => w.mul_vec(h)?,
        _ => unreachable!("validated"),
    })
}

fn sum<S: Scalar>(messages: &[Vec<S>], m: usize) -> Vec<S> {
    let mut acc = vec![S::zero(); m];
    for msg in messages {
        for (a, x) in acc.iter_mut().zip(msg) {
            *a = a.clone() + x.clone();
        }
    }
    acc
}

/// `[mean, max, min, std] × [1, amplification, attenuation]`, length `12m`.
fn pna<S: Scalar>(messages: &[Vec<S>], m: usize, avg_log_degree: f64) -> Vec<S> {
    let k = messages.len();
    let mut stats = vec![0.0f64; 4 * m];
    if k > 0 {
        for j in 0..m {
            let xs = messages.iter().map(|msg| msg[j].approx_f64());
            let mean = xs.clone().sum::<f64>() / k as f64;
            let sq = xs.clone().map(|x| x * x).sum::<f64>() / k as f64;
            stats[j] = mean;
            stats[m + j] = xs.clone().fold(f64::NEG_INFINITY, f64::max);
            stats[2 * m + j] = xs.fold(f64::INFINITY, f64::min);
            stats[3 * m + j] = (sq - mean * mean).max(0.0).sqrt();
        }
    }
    let log_degree = ((k.max(1) + 1) as f64).ln();
    let scalers = [1.0, log_degree / avg_log_degree, avg_log_degree / log_degree];
    scalers
        .iter()
        .flat_map(|s| stats.iter().map(move |x| S::from_f64(x * s).expect("finite")))
        .collect()
}
