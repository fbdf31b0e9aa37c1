use serde_json::{json, Map, Value};

use super::{
    Activation, Aggregation, Combine, Initialization, Layer, MessageKind, NetworkConfig,
    NetworkKind, NetworkSpec, RelationParam,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{NumericMode, Scalar};
use crate::wl::HistoryFunction;

fn vector<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(S::to_json).collect())
}

fn parse_vector<S: Scalar>(v: &Value) -> Result<Vec<S>> {
    v.as_array()
        .ok_or_else(|| Error::Json(format!("expected an array, found {v}")))?
        .iter()
        .map(S::from_json)
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Json(format!("missing field `{key}`")))
}

fn enum_value<T: serde::de::DeserializeOwned>(obj: &Map<String, Value>, key: &str) -> Result<T> {
    serde_json::from_value(field(obj, key)?.clone())
        .map_err(|e| Error::Json(format!("field `{key}`: {e}")))
}

fn history_json(f: &HistoryFunction) -> Value {
    match f {
        HistoryFunction::Identity => json!("id"),
        HistoryFunction::Zero => json!("zero"),
        HistoryFunction::Table(t) => json!(t),
    }
}

fn parse_history(v: &Value) -> Result<HistoryFunction> {
    match v {
        Value::String(s) => HistoryFunction::parse(s),
        Value::Array(items) => HistoryFunction::table(
            items
                .iter()
                .map(|x| {
                    x.as_u64()
                        .map(|x| x as usize)
                        .ok_or_else(|| Error::Json(format!("bad history entry {x}")))
                })
                .collect::<Result<_>>()?,
        ),
        _ => Err(Error::Json(format!("bad history function {v}"))),
    }
}

impl<S: Scalar> NetworkSpec<S> {
    /// JSON document; exact rationals are written as `{num, den}` strings.
    pub fn to_json(&self) -> Value {
        let init = match &self.initialization {
            Initialization::PairTable(table) => json!({
                "kind": "pair-table",
                "table": table.iter().map(|x| vector(x)).collect::<Vec<_>>(),
            }),
            other => json!({ "kind": other.name() }),
        };
        let aggregation = match self.aggregation {
            Aggregation::Sum => json!({ "kind": "sum" }),
            Aggregation::Pna { avg_log_degree } => {
                json!({ "kind": "pna", "avg_log_degree": avg_log_degree })
            }
        };
        let layers: Vec<Value> = self
            .layers
            .iter()
            .map(|l| {
                json!({
                    "weight": l.weight.to_json(),
                    "bias": l.bias.as_ref().map(|b| vector(b)),
                    "relations": l.relations.iter().map(|p| match p {
                        RelationParam::Scale(a) => json!({ "scale": a.to_json() }),
                        RelationParam::Vector(b) => json!({ "vector": vector(b) }),
                        RelationParam::Matrix(w) => json!({ "matrix": w.to_json() }),
                    }).collect::<Vec<_>>(),
                    "pna_mixer": l.pna_mixer.as_ref().map(Matrix::to_json),
                })
            })
            .collect();
        json!({
            "kind": self.kind,
            "numeric_mode": S::MODE,
            "dims": self.dims,
            "relation_count": self.relation_count,
            "query_vectors": self.query_vectors.iter().map(|z| vector(z)).collect::<Vec<_>>(),
            "initialization": init,
            "message": self.message,
            "aggregation": aggregation,
            "activation": self.activation,
            "combine": self.combine,
            "history": history_json(&self.history),
            "rng_seed": self.rng_seed,
            "strict_sign": self.strict_sign,
            "layers": layers,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Json("network spec must be an object".into()))?;
        let mode: NumericMode = enum_value(obj, "numeric_mode")?;
        if mode != S::MODE {
            return Err(Error::Json(format!(
                "spec is in {mode:?} mode, reader expects {:?}",
                S::MODE
            )));
        }
        let dims: Vec<usize> = enum_value(obj, "dims")?;
        let kind: NetworkKind = enum_value(obj, "kind")?;
        let message: MessageKind = enum_value(obj, "message")?;
        let init_obj = field(obj, "initialization")?;
        let initialization = match init_obj.get("kind").and_then(Value::as_str) {
            Some("delta0") => Initialization::Zero,
            Some("delta1") => Initialization::Ones,
            Some("delta2") => Initialization::Query,
            Some("delta3") => Initialization::QueryNoise,
            Some("delta4") => Initialization::Noise,
            Some("pair-table") => Initialization::PairTable(
                init_obj
                    .get("table")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Json("pair-table needs a `table` array".into()))?
                    .iter()
                    .map(parse_vector)
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(Error::Json(format!("bad initialization {init_obj}"))),
        };
        let agg_obj = field(obj, "aggregation")?;
        let aggregation = match agg_obj.get("kind").and_then(Value::as_str) {
            Some("sum") => Aggregation::Sum,
            Some("pna") => Aggregation::Pna {
                avg_log_degree: agg_obj
                    .get("avg_log_degree")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::Json("pna needs `avg_log_degree`".into()))?,
            },
            _ => return Err(Error::Json(format!("bad aggregation {agg_obj}"))),
        };
        let layer_values = field(obj, "layers")?
            .as_array()
            .ok_or_else(|| Error::Json("`layers` must be an array".into()))?;
        let mut layers = Vec::with_capacity(layer_values.len());
        for (t, lv) in layer_values.iter().enumerate() {
            let lo = lv
                .as_object()
                .ok_or_else(|| Error::Json(format!("layer {t} must be an object")))?;
            let din = *dims
                .get(t)
                .ok_or_else(|| Error::Json(format!("no width for layer {t}")))?;
            let relations = field(lo, "relations")?
                .as_array()
                .ok_or_else(|| Error::Json(format!("layer {t}: `relations` must be an array")))?
                .iter()
                .map(|p| {
                    if let Some(a) = p.get("scale") {
                        Ok(RelationParam::Scale(S::from_json(a)?))
                    } else if let Some(b) = p.get("vector") {
                        Ok(RelationParam::Vector(parse_vector(b)?))
                    } else if let Some(w) = p.get("matrix") {
                        Ok(RelationParam::Matrix(Matrix::from_json(w, din)?))
                    } else {
                        Err(Error::Json(format!("layer {t}: bad relation parameter {p}")))
                    }
                })
                .collect::<Result<_>>()?;
            let optional = |key: &str| lo.get(key).filter(|x| !x.is_null());
            layers.push(Layer {
                weight: Matrix::from_json(field(lo, "weight")?, din)?,
                bias: optional("bias").map(parse_vector).transpose()?,
                relations,
                pna_mixer: optional("pna_mixer")
                    .map(|m| Matrix::from_json(m, 0))
                    .transpose()?,
            });
        }
        NetworkSpec::new(NetworkConfig {
            kind,
            dims,
            layers,
            relation_count: enum_value(obj, "relation_count")?,
            query_vectors: field(obj, "query_vectors")?
                .as_array()
                .ok_or_else(|| Error::Json("`query_vectors` must be an array".into()))?
                .iter()
                .map(parse_vector)
                .collect::<Result<_>>()?,
            initialization,
            message,
            aggregation,
            activation: enum_value::<Activation>(obj, "activation")?,
            combine: enum_value::<Combine>(obj, "combine")?,
            history: parse_history(field(obj, "history")?)?,
            rng_seed: enum_value(obj, "rng_seed")?,
            strict_sign: enum_value(obj, "strict_sign")?,
        })
    }
}
