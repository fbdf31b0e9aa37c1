use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Activation, Aggregation, Combine, Initialization, Layer, MessageKind, NetworkConfig,
    NetworkKind, NetworkSpec, RelationParam,
};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::numeric::Scalar;
use crate::wl::HistoryFunction;

/// Shape of a random network with constant width. Weights are small random
/// rationals `a/b` with `|a| ≤ 3` and `1 ≤ b ≤ 3`, so exact evaluation stays
/// cheap.
#[derive(Clone, Debug)]
pub struct RandomNetworkConfig {
    pub layers: usize,
    pub width: usize,
    pub relation_count: usize,
    pub initialization: RandomInit,
    pub message: MessageKind,
    pub aggregation: Aggregation,
    pub activation: Activation,
    pub combine: Combine,
    pub history: HistoryFunction,
    pub with_bias: bool,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomInit {
    Zero,
    Ones,
    Query,
    QueryNoise,
    Noise,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        RandomNetworkConfig {
            layers: 2,
            width: 3,
            relation_count: 1,
            initialization: RandomInit::Query,
            message: MessageKind::Linear,
            aggregation: Aggregation::Sum,
            activation: Activation::Relu,
            combine: Combine::Shared,
            history: HistoryFunction::Identity,
            with_bias: true,
            seed: 0,
        }
    }
}

fn scalar<S: Scalar>(rng: &mut ChaCha8Rng) -> S {
    S::from_ratio(rng.random_range(-3..=3), rng.random_range(1..=3))
}

fn vector<S: Scalar>(rng: &mut ChaCha8Rng, d: usize) -> Vec<S> {
    (0..d).map(|_| scalar(rng)).collect()
}

fn matrix<S: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<S> {
    Matrix::from_fn(rows, cols, |_, _| scalar(rng))
}

fn build<S: Scalar>(kind: NetworkKind, cfg: &RandomNetworkConfig) -> Result<NetworkSpec<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.width;
    let query_vectors = (0..cfg.relation_count)
        .map(|_| {
            let mut z: Vec<S> = vector(&mut rng, d);
            if z.iter().all(|x| x.is_zero()) && d > 0 {
                z[0] = S::one();
            }
            z
        })
        .collect();
    let layers = (0..cfg.layers)
        .map(|_| Layer {
            weight: matrix(&mut rng, d, d),
            bias: cfg.with_bias.then(|| vector(&mut rng, d)),
            relations: (0..cfg.relation_count)
                .map(|_| match cfg.message {
                    MessageKind::Scaling => RelationParam::Scale(scalar(&mut rng)),
                    MessageKind::VectorGated => RelationParam::Vector(vector(&mut rng, d)),
                    MessageKind::QueryGated | MessageKind::Linear => {
                        RelationParam::Matrix(matrix(&mut rng, d, d))
                    }
                })
                .collect(),
            pna_mixer: matches!(cfg.aggregation, Aggregation::Pna { .. })
                .then(|| matrix(&mut rng, d, 12 * d)),
        })
        .collect();
    NetworkSpec::new(NetworkConfig {
        kind,
        dims: vec![d; cfg.layers + 1],
        layers,
        relation_count: cfg.relation_count,
        query_vectors,
        initialization: match cfg.initialization {
            RandomInit::Zero => Initialization::Zero,
            RandomInit::Ones => Initialization::Ones,
            RandomInit::Query => Initialization::Query,
            RandomInit::QueryNoise => Initialization::QueryNoise,
            RandomInit::Noise => Initialization::Noise,
        },
        message: cfg.message,
        aggregation: cfg.aggregation,
        activation: cfg.activation,
        combine: cfg.combine,
        history: cfg.history.clone(),
        rng_seed: cfg.seed,
        strict_sign: false,
    })
}

pub fn random_cmpnn<S: Scalar>(cfg: &RandomNetworkConfig) -> Result<NetworkSpec<S>> {
    build(NetworkKind::Cmpnn, cfg)
}

/// The query-dependent parts of `cfg` are ignored.
pub fn random_rmpnn<S: Scalar>(cfg: &RandomNetworkConfig) -> Result<NetworkSpec<S>> {
    let cfg = RandomNetworkConfig {
        message: match cfg.message {
            MessageKind::QueryGated => MessageKind::Linear,
            other => other,
        },
        initialization: RandomInit::Zero,
        ..cfg.clone()
    };
    build(NetworkKind::Rmpnn, &cfg)
}

/// Random initial node features for an R-MPNN.
pub fn random_features<S: Scalar>(seed: u64, n: usize, d: usize) -> Vec<Vec<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| vector(&mut rng, d)).collect()
}
