//! Relational and conditional message passing networks.
//!
//! A network is described by a [`NetworkSpec`] over a scalar type: `f64` for
//! float evaluation or [`Rational`](crate::numeric::Rational) for exact
//! evaluation. The update of layer `t` reads
//!
//! ```text
//! shared:         h' = σ(W (h[f(t)] + ψ{{θ_r(h_w)}}) + b)
//! self-weighted:  h' = σ(W h[f(t)] + ψ{{θ_r(h_w)}} + b)
//! ```
//!
//! where the multiset ranges over `w ∈ N_r(v)` for every relation `r`.

mod build;
mod decoder;
mod forward;
mod io;
mod random;

pub use build::{
    build_cmpnn_simulator, build_rwl1_simulator, build_sign_matrix, fts_matrix, CmpnnSimulator,
    Rwl1Simulator, SignMatrix,
};
pub use decoder::{score_link, MlpDecoder};
pub use forward::{cmpnn_forward, cmpnn_forward_all, rmpnn_forward, FeatureTable};
pub use random::{random_cmpnn, random_features, random_rmpnn, RandomInit, RandomNetworkConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{NumericMode, Scalar};
use crate::wl::HistoryFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Rmpnn,
    Cmpnn,
}

/// Initialization `δ(u, v, q)` of a conditional network.
#[derive(Clone, Debug, PartialEq)]
pub enum Initialization<S> {
    /// δ0 = 0
    Zero,
    /// δ1 = 1[u=v]·1
    Ones,
    /// δ2 = 1[u=v]·z_q
    Query,
    /// δ3 = 1[u=v]·(z_q + ε_u), ε_u ~ N(0,1) fixed per (seed, node name)
    QueryNoise,
    /// δ4 = 1[u=v]·ε_q, ε_q ~ N(0,1) fixed per (seed, relation name)
    Noise,
    /// δ(u, v, q) = table[u·n + v], independent of q
    PairTable(Vec<Vec<S>>),
}

impl<S> Initialization<S> {
    pub fn name(&self) -> &'static str {
        match self {
            Initialization::Zero => "delta0",
            Initialization::Ones => "delta1",
            Initialization::Query => "delta2",
            Initialization::QueryNoise => "delta3",
            Initialization::Noise => "delta4",
            Initialization::PairTable(_) => "pair-table",
        }
    }
}

/// Relation-specific message function `θ_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    /// θ¹: h ⊙ W_r z_q
    QueryGated,
    /// θ²: h ⊙ b_r
    VectorGated,
    /// θ³: W_r h
    Linear,
    /// α_r h
    Scaling,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    Sum,
    /// mean/max/min/std aggregators under identity, amplification and
    /// attenuation degree scalers, mixed back by the layer's `pna_mixer`.
    Pna { avg_log_degree: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    /// sign with sign(0) = -1
    Sign,
    Relu,
    /// min(max(0, x), 1)
    TruncatedRelu,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    Shared,
    SelfWeighted,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RelationParam<S> {
    Scale(S),
    Vector(Vec<S>),
    Matrix(Matrix<S>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<S> {
    /// `d(t+1) × d(t)`
    pub weight: Matrix<S>,
    pub bias: Option<Vec<S>>,
    /// One entry per relation of the graph the network runs on.
    pub relations: Vec<RelationParam<S>>,
    /// `m × 12m`, required for PNA aggregation.
    pub pna_mixer: Option<Matrix<S>>,
}

/// Unvalidated network description. Turn it into a [`NetworkSpec`] with
/// [`NetworkSpec::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig<S> {
    pub kind: NetworkKind,
    /// `d(0), …, d(T)`
    pub dims: Vec<usize>,
    pub layers: Vec<Layer<S>>,
    pub relation_count: usize,
    /// `z_q` per relation, each of length `d(0)`. Needed by δ2, δ3 and θ¹.
    pub query_vectors: Vec<Vec<S>>,
    pub initialization: Initialization<S>,
    pub message: MessageKind,
    pub aggregation: Aggregation,
    pub activation: Activation,
    pub combine: Combine,
    pub history: HistoryFunction,
    pub rng_seed: u64,
    /// Fail evaluation whenever a sign activation sees an exact zero.
    pub strict_sign: bool,
}

/// A validated network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec<S>(NetworkConfig<S>);

impl<S> std::ops::Deref for NetworkSpec<S> {
    type Target = NetworkConfig<S>;

    fn deref(&self) -> &NetworkConfig<S> {
        &self.0
    }
}

impl<S: Scalar> NetworkSpec<S> {
    pub fn new(config: NetworkConfig<S>) -> Result<Self> {
        config.validate()?;
        Ok(NetworkSpec(config))
    }

    pub fn config(&self) -> &NetworkConfig<S> {
        &self.0
    }

    pub fn into_config(self) -> NetworkConfig<S> {
        self.0
    }

    pub fn numeric_mode(&self) -> NumericMode {
        S::MODE
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Whether `δ(u,u,q) ≠ δ(u,v,q)` for all `u ≠ v` on a graph with
    /// `node_count` nodes. Noise initializations count as distinguishing.
    pub fn target_node_distinguishability(&self, q: usize, node_count: usize) -> bool {
        match &self.initialization {
            Initialization::Zero => node_count <= 1,
            Initialization::Ones | Initialization::QueryNoise | Initialization::Noise => true,
            Initialization::Query => self
                .query_vectors
                .get(q)
                .is_some_and(|z| z.iter().any(|x| !x.is_zero())),
            Initialization::PairTable(table) => (0..node_count).all(|u| {
                (0..node_count)
                    .all(|v| v == u || table[u * node_count + v] != table[u * node_count + u])
            }),
        }
    }
}

impl<S: Scalar> NetworkConfig<S> {
    fn message_dim(&self, t: usize) -> usize {
        match self.combine {
            Combine::Shared => self.dims[t],
            Combine::SelfWeighted => self.dims[t + 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.dims.len() != self.layers.len() + 1 {
            return bad(format!(
                "{} dims for {} layers",
                self.dims.len(),
                self.layers.len()
            ));
        }
        if S::MODE == NumericMode::ExactRational {
            if matches!(self.aggregation, Aggregation::Pna { .. }) {
                return bad("PNA aggregation is not available in exact mode".into());
            }
            if matches!(
                self.initialization,
                Initialization::QueryNoise | Initialization::Noise
            ) {
                return bad(format!(
                    "{} is stochastic and not available in exact mode",
                    self.initialization.name()
                ));
            }
        }
        let d0 = self.dims[0];
        let needs_query = matches!(
            self.initialization,
            Initialization::Query | Initialization::QueryNoise
        ) || self.message == MessageKind::QueryGated;
        if needs_query {
            if self.kind == NetworkKind::Rmpnn && self.message == MessageKind::QueryGated {
                return bad("query-gated messages need a conditional network".into());
            }
            if self.query_vectors.len() != self.relation_count {
                return bad(format!(
                    "{} query vectors for {} relations",
                    self.query_vectors.len(),
                    self.relation_count
                ));
            }
            if self.query_vectors.iter().any(|z| z.len() != d0) {
                return bad(format!("query vectors must have length d(0) = {d0}"));
            }
        }
        if let Initialization::PairTable(table) = &self.initialization {
            if table.iter().any(|x| x.len() != d0) {
                return bad(format!("pair-table vectors must have length d(0) = {d0}"));
            }
        }
        for (t, layer) in self.layers.iter().enumerate() {
            let (din, dout) = (self.dims[t], self.dims[t + 1]);
            let m = self.message_dim(t);
            if layer.weight.rows() != dout || layer.weight.cols() != din {
                return Err(Error::Dimension(format!(
                    "layer {t}: weight is {}x{}, expected {dout}x{din}",
                    layer.weight.rows(),
                    layer.weight.cols()
                )));
            }
            if layer.bias.as_ref().is_some_and(|b| b.len() != dout) {
                return Err(Error::Dimension(format!("layer {t}: bias length != {dout}")));
            }
            let f = self.history.apply(t);
            if f > t {
                return bad(format!("history function has f({t}) = {f}"));
            }
            if self.dims[f] != din {
                return Err(Error::Dimension(format!(
                    "layer {t} reads history layer {f} of width {} but expects {din}",
                    self.dims[f]
                )));
            }
            if self.message != MessageKind::Linear && m != din {
                return Err(Error::Dimension(format!(
                    "layer {t}: elementwise messages need d(t) = d(t+1) with self-weighted updates"
                )));
            }
            if layer.relations.len() != self.relation_count {
                return bad(format!(
                    "layer {t}: {} relation parameters for {} relations",
                    layer.relations.len(),
                    self.relation_count
                ));
            }
            for (r, p) in layer.relations.iter().enumerate() {
                let ok = match (self.message, p) {
                    (MessageKind::Scaling, RelationParam::Scale(_)) => true,
                    (MessageKind::VectorGated, RelationParam::Vector(b)) => b.len() == din,
                    (MessageKind::QueryGated, RelationParam::Matrix(w)) => {
                        w.rows() == din && w.cols() == d0
                    }
                    (MessageKind::Linear, RelationParam::Matrix(w)) => {
                        w.rows() == m && w.cols() == din
                    }
                    _ => false,
                };
                if !ok {
                    return Err(Error::Dimension(format!(
                        "layer {t}: parameter of relation {r} does not fit {:?} messages",
                        self.message
                    )));
                }
            }
            match (&self.aggregation, &layer.pna_mixer) {
                (Aggregation::Pna { .. }, Some(mix)) => {
                    if mix.rows() != m || mix.cols() != 12 * m {
                        return Err(Error::Dimension(format!(
                            "layer {t}: PNA mixer must be {m}x{}",
                            12 * m
                        )));
                    }
                }
                (Aggregation::Pna { .. }, None) => {
                    return bad(format!("layer {t}: PNA aggregation needs a mixer"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
