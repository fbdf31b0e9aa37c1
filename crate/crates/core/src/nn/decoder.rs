use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{cmpnn_forward, NetworkSpec};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeId, RelId};
use crate::numeric::{NumericMode, Scalar};

/// Two-layer perceptron `f(h) = w2 · relu(W1 h + b1) + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpDecoder {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpDecoder {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        MlpDecoder {
            w1: vec![vec![0.0; input]; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Glorot-scaled normal weights.
    pub fn random(seed: u64, input: usize, hidden: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1 = Normal::new(0.0, (2.0 / (input + hidden) as f64).sqrt()).expect("valid std");
        let n2 = Normal::new(0.0, (2.0 / (hidden + 1) as f64).sqrt()).expect("valid std");
        MlpDecoder {
            w1: (0..hidden)
                .map(|_| (0..input).map(|_| n1.sample(&mut rng)).collect())
                .collect(),
            b1: (0..hidden).map(|_| rng.random_range(-0.1..0.1)).collect(),
            w2: (0..hidden).map(|_| n2.sample(&mut rng)).collect(),
            b2: 0.0,
        }
    }

    pub fn logit(&self, h: &[f64]) -> Result<f64> {
        if self.w1.iter().any(|row| row.len() != h.len()) {
            return Err(Error::Dimension(format!(
                "decoder input width differs from feature length {}",
                h.len()
            )));
        }
        let hidden = self.w1.iter().zip(&self.b1).map(|(row, b)| {
            let x: f64 = row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>() + b;
            x.max(0.0)
        });
        Ok(hidden.zip(&self.w2).map(|(x, w)| x * w).sum::<f64>() + self.b2)
    }
}

/// `p(v | u, q) = sigmoid(f(h^(T)_{v|u,q}))`.
pub fn score_link<S: Scalar>(
    spec: &NetworkSpec<S>,
    decoder: &MlpDecoder,
    g: &KnowledgeGraph,
    q: RelId,
    u: NodeId,
    v: NodeId,
) -> Result<f64> {
    if S::MODE == NumericMode::ExactRational {
        return Err(Error::Unsupported(
            "link scores use a sigmoid and need float mode".into(),
        ));
    }
    if v >= g.node_count() {
        return Err(Error::lookup("node", v.to_string()));
    }
    let row = cmpnn_forward(g, spec, q, u)?;
    let h: Vec<f64> = row
        .vector(row.layer_count() - 1, v)
        .iter()
        .map(Scalar::approx_f64)
        .collect();
    let z = decoder.logit(&h)?;
    Ok(1.0 / (1.0 + (-z).exp()))
}
