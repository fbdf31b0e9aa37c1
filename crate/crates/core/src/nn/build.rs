use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{
    Activation, Aggregation, Combine, Initialization, Layer, MessageKind, NetworkConfig,
    NetworkKind, NetworkSpec, RelationParam,
};
use crate::error::{Error, Result};
use crate::kg::{product_square, KnowledgeGraph};
use crate::matrix::Matrix;
use crate::numeric::{Rational, Scalar};
use crate::wl::HistoryFunction;

/// `n × n` matrix with `(Fts)_ij = -1` iff `j ≥ i`, else `1`.
pub fn fts_matrix<S: Scalar>(n: usize) -> Matrix<S> {
    Matrix::from_fn(n, n, |i, j| if j >= i { -S::one() } else { S::one() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignMatrix {
    /// `n × n`
    pub x: Matrix<Rational>,
    /// `order[j]` is the column of `B` that lands on Fts column `j`.
    pub order: Vec<usize>,
}

/// For an `n × p` non-negative integer matrix `B` whose `p ≤ n` columns are
/// pairwise distinct and nonzero, finds `X` with `sign(XB - J)` equal to the
/// first `p` Fts columns, permuted by `order`.
pub fn build_sign_matrix(b: &Matrix<BigInt>, n: usize) -> Result<SignMatrix> {
    let p = b.cols();
    if b.rows() != n {
        return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.rows())));
    }
    if p > n {
        return Err(Error::Precondition(format!("{p} columns exceed {n} rows")));
    }
    let mut max = BigInt::zero();
    for i in 0..n {
        for j in 0..p {
            let e = &b[(i, j)];
            if e < &BigInt::zero() {
                return Err(Error::Precondition("B has a negative entry".into()));
            }
            if e > &max {
                max = e.clone();
            }
        }
    }
    let base = max + 1;
    let mut z = Vec::with_capacity(n);
    let mut power = BigInt::one();
    for _ in 0..n {
        z.push(power.clone());
        power *= &base;
    }
    let weights: Vec<BigInt> = (0..p)
        .map(|j| (0..n).map(|i| &z[i] * &b[(i, j)]).sum())
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &c| weights[c].cmp(&weights[a]));
    for w in order.windows(2) {
        if weights[w[0]] == weights[w[1]] {
            return Err(Error::Precondition(format!(
                "columns {} and {} of B are equal",
                w[0].min(w[1]),
                w[0].max(w[1])
            )));
        }
    }
    if order.last().is_some_and(|&j| weights[j].is_zero()) {
        return Err(Error::Precondition("B has a zero column".into()));
    }
    let sorted: Vec<Rational> = order
        .iter()
        .map(|&j| Rational::from_integer(weights[j].clone()))
        .collect();
    let two = Rational::from_integer(BigInt::from(2));
    let x: Vec<Rational> = (0..n)
        .map(|i| {
            if i == 0 {
                match sorted.first() {
                    Some(b1) => (b1 + Rational::one()).recip(),
                    None => Rational::one(),
                }
            } else if i < p {
                &two / (&sorted[i] + &sorted[i - 1])
            } else {
                &two / &sorted[p - 1]
            }
        })
        .collect();
    let zq: Vec<Rational> = z.into_iter().map(Rational::from_integer).collect();
    Ok(SignMatrix {
        x: Matrix::from_fn(n, n, |i, j| &x[i] * &zq[j]),
        order,
    })
}

/// An exact R-MPNN whose layer partitions coincide with relational 1-WL.
#[derive(Clone, Debug)]
pub struct Rwl1Simulator {
    pub spec: NetworkSpec<Rational>,
    /// Fts column of each node's initial color.
    pub initial: Vec<Vec<Rational>>,
}

pub fn build_rwl1_simulator(
    g: &KnowledgeGraph,
    layers: usize,
    history: &HistoryFunction,
) -> Result<Rwl1Simulator> {
    let n = g.node_count();
    let rel = g.relation_count();
    let fts = fts_matrix::<Rational>(n);
    let m = fts.inverse()?;
    // column index of each node's feature, per layer
    let mut cols: Vec<Vec<usize>> = vec![dense(g.node_colors())];
    let mut net_layers = Vec::with_capacity(layers);
    let big_n = BigInt::from(n as u64 + 1);
    let alphas: Vec<BigInt> = (1..=rel as u32).map(|i| big_n.pow(i)).collect();
    for t in 0..layers {
        let own = &cols[history.apply(t)];
        let cur = &cols[t];
        let mut e = vec![vec![BigInt::zero(); n]; n];
        for v in 0..n {
            e[v][own[v]] += 1;
            for &(r, w) in g.incoming(v) {
                e[v][cur[w]] += &alphas[r];
            }
        }
        let mut distinct: Vec<&Vec<BigInt>> = Vec::new();
        let mut slot: HashMap<&Vec<BigInt>, usize> = HashMap::new();
        for col in &e {
            slot.entry(col).or_insert_with(|| {
                distinct.push(col);
                distinct.len() - 1
            });
        }
        let b = Matrix::from_fn(n, distinct.len(), |i, j| distinct[j][i].clone());
        let sm = build_sign_matrix(&b, n)?;
        let mut rank = vec![0; distinct.len()];
        for (pos, &j) in sm.order.iter().enumerate() {
            rank[j] = pos;
        }
        cols.push(e.iter().map(|col| rank[slot[col]]).collect());
        net_layers.push(Layer {
            weight: sm.x.mul(&m)?,
            bias: Some(vec![-Rational::one(); n]),
            relations: alphas
                .iter()
                .map(|a| RelationParam::Scale(Rational::from_integer(a.clone())))
                .collect(),
            pna_mixer: None,
        });
    }
    let spec = NetworkSpec::new(NetworkConfig {
        kind: NetworkKind::Rmpnn,
        dims: vec![n; layers + 1],
        layers: net_layers,
        relation_count: rel,
        query_vectors: Vec::new(),
        initialization: Initialization::Zero,
        message: MessageKind::Scaling,
        aggregation: Aggregation::Sum,
        activation: Activation::Sign,
        combine: Combine::Shared,
        history: history.clone(),
        rng_seed: 0,
        strict_sign: true,
    })?;
    let initial = cols[0].iter().map(|&c| fts.column(c)).collect();
    Ok(Rwl1Simulator { spec, initial })
}

/// An exact C-MPNN whose pair partitions coincide with asymmetric local 2-WL.
/// It is the 1-WL simulator of the pair graph, read back as conditional rows:
/// `h_{v|u,q}` is the feature of pair node `(u, v)` for every query `q`.
#[derive(Clone, Debug)]
pub struct CmpnnSimulator {
    pub spec: NetworkSpec<Rational>,
    pub node_count: usize,
}

impl CmpnnSimulator {
    pub fn pair_index(&self, u: usize, v: usize) -> usize {
        u * self.node_count + v
    }
}

pub fn build_cmpnn_simulator(
    g: &KnowledgeGraph,
    layers: usize,
    history: &HistoryFunction,
) -> Result<CmpnnSimulator> {
    let pc = g
        .pair_coloring()
        .ok_or_else(|| Error::Precondition("the C-MPNN simulator needs a pair coloring".into()))?;
    if !pc.tnd_flag() {
        return Err(Error::Precondition(
            "the pair coloring lacks target node distinguishability".into(),
        ));
    }
    let square = product_square(g)?;
    let sim = build_rwl1_simulator(&square, layers, history)?;
    let mut config = sim.spec.into_config();
    config.kind = NetworkKind::Cmpnn;
    config.initialization = Initialization::PairTable(sim.initial);
    Ok(CmpnnSimulator {
        spec: NetworkSpec::new(config)?,
        node_count: g.node_count(),
    })
}

fn dense(colors: &[u32]) -> Vec<usize> {
    let mut ids: HashMap<u32, usize> = HashMap::new();
    colors
        .iter()
        .map(|&c| {
            let next = ids.len();
            *ids.entry(c).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::sign;

    fn int_matrix(rows: &[&[i64]]) -> Matrix<BigInt> {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn signs(sm: &SignMatrix, b: &Matrix<BigInt>) -> Vec<Vec<i64>> {
        let bq = Matrix::from_fn(b.rows(), b.cols(), |i, j| Rational::from_integer(b[(i, j)].clone()));
        let xb = sm.x.mul(&bq).unwrap();
        (0..xb.rows())
            .map(|i| {
                sm.order
                    .iter()
                    .map(|&j| {
                        let v = &xb[(i, j)] - Rational::one();
                        assert!(!v.is_zero());
                        if sign(&v) == Rational::one() { 1 } else { -1 }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn fts_shape() {
        let f = fts_matrix::<f64>(3);
        assert_eq!(f.row(0), &[-1.0, -1.0, -1.0]);
        assert_eq!(f.row(2), &[1.0, 1.0, -1.0]);
    }

    #[test]
    fn identity_gives_fts_prefix() {
        let b = int_matrix(&[&[1, 0], &[0, 1]]);
        let sm = build_sign_matrix(&b, 2).unwrap();
        assert_eq!(signs(&sm, &b), vec![vec![-1, -1], vec![1, -1]]);
    }

    #[test]
    fn single_column() {
        let b = int_matrix(&[&[2], &[0], &[1]]);
        let sm = build_sign_matrix(&b, 3).unwrap();
        assert_eq!(signs(&sm, &b), vec![vec![-1], vec![1], vec![1]]);
    }

    #[test]
    fn rejects_bad_columns() {
        assert!(build_sign_matrix(&int_matrix(&[&[1, 1], &[0, 0]]), 2).is_err());
        assert!(build_sign_matrix(&int_matrix(&[&[1, 0], &[0, 0]]), 2).is_err());
        assert!(build_sign_matrix(&int_matrix(&[&[1, 0, 2], &[0, 1, 0]]), 2).is_err());
    }

    #[test]
    fn cmpnn_simulator_needs_tnd() {
        let mut b = KnowledgeGraph::builder();
        b.add_fact("a", "r", "b");
        let g = b.build();
        assert!(matches!(
            build_cmpnn_simulator(&g, 1, &HistoryFunction::Identity),
            Err(Error::Precondition(_))
        ));
    }
}
