use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSpace, SparseVector};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Random,
    Zero,
    PassiveAggressive,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub learner: LearnerKind,
    /// Number of non-passive updates (PA) or training examples (SVM).
    pub updates: u64,
}

/// `margin(x) = w·x + b`. The weight vector is dense over the feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub space: FeatureSpace,
    pub w: Vec<f64>,
    pub b: f64,
    pub meta: ModelMeta,
}

/// Seeded random classifier, `w_i ~ U[-0.01, 0.01]`, `b = 0`.
pub fn random_model(space: FeatureSpace, seed: u64) -> LinearModel {
    let mut rng = rng::stream(seed, Stream::InitialModel);
    let w = (0..space.dim).map(|_| rng.gen_range(-0.01..=0.01)).collect();
    LinearModel {
        space,
        w,
        b: 0.0,
        meta: ModelMeta {
            learner: LearnerKind::Random,
            updates: 0,
        },
    }
}

#[inline]
pub fn logistic(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

pub fn margin(model: &LinearModel, x: &SparseVector) -> Result<f64> {
    model.check_dim(x)?;
    Ok(model.margin_unchecked(x))
}

pub fn confidence(model: &LinearModel, x: &SparseVector) -> Result<f64> {
    margin(model, x).map(logistic)
}

impl LinearModel {
    pub fn zeros(space: FeatureSpace) -> Self {
        Self {
            space,
            w: vec![0.0; space.dim],
            b: 0.0,
            meta: ModelMeta {
                learner: LearnerKind::Zero,
                updates: 0,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn check_dim(&self, x: &SparseVector) -> Result<()> {
        if x.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn margin_unchecked(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.w) + self.b
    }

    /// Positive iff `margin(x) >= 0`.
    pub fn predict(&self, x: &SparseVector) -> Result<bool> {
        margin(self, x).map(|m| m >= 0.0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, &SerializedModel::from(self))?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = BufReader::new(File::open(path)?);
        let raw: SerializedModel = serde_json::from_reader(file)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SerializedModel::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<SerializedModel>(s)?.try_into()
    }
}

impl Serialize for LinearModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SerializedModel::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SerializedModel::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

const MODEL_FORMAT: &str = "verbacode-linear-model";

/// On-disk JSON layout. Weights are stored sparsely; floats are written in
/// shortest round-trip form, so save/load is bit exact.
///
/// ```text
/// {"format": "verbacode-linear-model", "version": 1,
///  "dim": 262144, "hash_seed": 0, "bias": -0.25,
///  "learner": "passive_aggressive", "updates": 42,
///  "weights": {"indices": [3, 17, ...], "values": [0.1, -0.02, ...]}}
/// ```
#[derive(Serialize, Deserialize)]
struct SerializedModel {
    format: String,
    version: u32,
    dim: usize,
    hash_seed: u32,
    bias: f64,
    learner: LearnerKind,
    updates: u64,
    weights: SparseWeights,
}

#[derive(Serialize, Deserialize)]
struct SparseWeights {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl From<&LinearModel> for SerializedModel {
    fn from(m: &LinearModel) -> Self {
        let (indices, values) = m
            .w
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0 || v.is_sign_negative())
            .map(|(i, v)| (i as u32, *v))
            .unzip();
        Self {
            format: MODEL_FORMAT.to_owned(),
            version: 1,
            dim: m.space.dim,
            hash_seed: m.space.hash_seed,
            bias: m.b,
            learner: m.meta.learner,
            updates: m.meta.updates,
            weights: SparseWeights { indices, values },
        }
    }
}

impl TryFrom<SerializedModel> for LinearModel {
    type Error = Error;

    fn try_from(raw: SerializedModel) -> Result<Self> {
        if raw.format != MODEL_FORMAT || raw.version != 1 {
            return Err(Error::Config(format!(
                "unsupported model format {} v{}",
                raw.format, raw.version
            )));
        }
        let space = FeatureSpace::new(raw.dim, raw.hash_seed)?;
        if raw.weights.indices.len() != raw.weights.values.len() {
            return Err(Error::Config("weight indices/values length differ".into()));
        }
        let mut w = vec![0.0; space.dim];
        for (i, v) in raw.weights.indices.into_iter().zip(raw.weights.values) {
            let slot = w.get_mut(i as usize).ok_or(Error::DimensionMismatch {
                expected: space.dim,
                actual: i as usize + 1,
            })?;
            *slot = v;
        }
        Ok(Self {
            space,
            w,
            b: raw.bias,
            meta: ModelMeta {
                learner: raw.learner,
                updates: raw.updates,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> FeatureSpace {
        FeatureSpace::new(1 << 18, 0).unwrap()
    }

    #[test]
    fn random_model_is_seeded_and_bounded() {
        let a = random_model(space(), 0);
        let b = random_model(space(), 0);
        assert_eq!(a, b);
        assert_eq!(a.b, 0.0);
        assert!(a.w.iter().all(|v| v.abs() <= 0.01));
        assert_ne!(a, random_model(space(), 1));
        let x = SparseVector::from_pairs(space().dim, [(5, 0.6), (90_000, 0.8)]).unwrap();
        let c = confidence(&a, &x).unwrap();
        assert!(c > 0.0 && c < 1.0);
    }

    #[test]
    fn confidence_semantics() {
        assert_eq!(logistic(0.0), 0.5);
        assert!(logistic(10.0) > 0.9999);
        for m in [0.1, 1.0, 3.7, 20.0] {
            assert!((logistic(m) + logistic(-m) - 1.0).abs() < 1e-15);
            assert!(logistic(m) > logistic(m - 0.05));
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = LinearModel::zeros(FeatureSpace::new(8, 0).unwrap());
        let x = SparseVector::zeros(16);
        assert!(matches!(
            margin(&m, &x),
            Err(Error::DimensionMismatch { expected: 8, actual: 16 })
        ));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut m = random_model(FeatureSpace::new(64, 9).unwrap(), 4);
        m.b = -0.1 + 1e-17;
        m.w[3] = 0.0;
        let back = LinearModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.space, m.space);
        assert_eq!(back.b.to_bits(), m.b.to_bits());
        assert!(back.w.iter().zip(&m.w).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
