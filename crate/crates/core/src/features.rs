//! Hashed tf-idf features.
//!
//! Tokens are lowercased alphanumeric runs. Each token is hashed with
//! MurmurHash3 (x86, 32-bit) under `hash_seed` and reduced modulo the
//! dimension `D` (a power of two). No sign hashing is applied. Because the
//! index of a token depends only on `(D, hash_seed)`, weight vectors trained
//! on one corpus line up with vectors built for another, whatever their
//! respective idf tables.
//!
//! A document's value at index `i` is `(1 + ln tf) * idf(i)` summed over the
//! distinct tokens hashed to `i`, after which the vector is scaled to unit
//! length. `idf(i) = ln((1 + n) / (1 + df(i))) + 1`, where `n` is the number of
//! documents the vectorizer was fitted on.

use std::collections::HashMap;
use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 1 << 18;

/// Identity of a hashed feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub dim: usize,
    pub hash_seed: u32,
}

impl FeatureSpace {
    pub fn new(dim: usize, hash_seed: u32) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() || dim > (u32::MAX as usize) + 1 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { dim, hash_seed })
    }

    pub fn index(&self, token: &str) -> u32 {
        let h = murmur3::murmur3_32(&mut Cursor::new(token.as_bytes()), self.hash_seed)
            .expect("reading from memory cannot fail");
        h & (self.dim as u32 - 1)
    }

    pub fn check_compatible(&self, other: &FeatureSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::IncompatibleFeatureSpace(format!(
                "dim {} / hash seed {} vs dim {} / hash seed {}",
                self.dim, self.hash_seed, other.dim, other.hash_seed
            )))
        }
    }
}

impl Default for FeatureSpace {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            hash_seed: 0,
        }
    }
}

/// Lowercase, split on anything that is not alphanumeric, drop empty pieces.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unordered `(index, value)` pairs; duplicate indices are
    /// summed and exact zeros dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut pairs: Vec<(u32, f64)> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i as usize >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: i as usize + 1,
                });
            }
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = Self {
            dim,
            indices,
            values,
        };
        out.prune_zeros();
        Ok(out)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let pairs = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v));
        Self::from_pairs(values.len(), pairs).expect("indices are in range")
    }

    fn prune_zeros(&mut self) {
        if self.values.iter().all(|v| *v != 0.0) {
            return;
        }
        let (indices, values) = self
            .indices
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (*i, *v))
            .unzip();
        self.indices = indices;
        self.values = values;
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(i, v)| (*i as usize, *v))
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Dot product against a dense vector of the same dimension.
    #[inline]
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(i, v)| dense[*i as usize] * v)
            .sum()
    }

    /// `dense += scale * self`
    #[inline]
    pub fn add_to(&self, dense: &mut [f64], scale: f64) {
        debug_assert_eq!(dense.len(), self.dim);
        for (i, v) in self.indices.iter().zip(&self.values) {
            dense[*i as usize] += scale * v;
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= factor);
        self
    }

    pub fn normalized(self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            self.scaled(1.0 / norm)
        } else {
            self
        }
    }
}

/// Document-frequency statistics of a pool, in a hashed feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vectorizer {
    pub space: FeatureSpace,
    pub n_docs: usize,
    pub idf: Vec<f64>,
}

impl Vectorizer {
    /// Fits idf over `texts`. The pool must be nonempty.
    pub fn fit<'a, I>(texts: I, space: FeatureSpace) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut df = vec![0u32; space.dim];
        let mut n_docs = 0usize;
        let mut seen: Vec<u32> = Vec::new();
        for text in texts {
            n_docs += 1;
            seen.clear();
            seen.extend(tokenize(text).map(|t| space.index(&t)));
            seen.sort_unstable();
            seen.dedup();
            for &i in &seen {
                df[i as usize] += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyCorpus("vectorizer pool".into()));
        }
        let n = n_docs as f64;
        let idf = df
            .into_iter()
            .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Ok(Self { space, n_docs, idf })
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        let mut tf: HashMap<String, u32> = HashMap::new();
        for token in tokenize(text) {
            *tf.entry(token).or_insert(0) += 1;
        }
        let pairs = tf.into_iter().map(|(token, count)| {
            let i = self.space.index(&token);
            (i, (1.0 + (count as f64).ln()) * self.idf[i as usize])
        });
        // Summation order over colliding tokens must not depend on HashMap
        // iteration order, so sort the per-token contributions first.
        let mut pairs: Vec<(u32, f64)> = pairs.collect();
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        SparseVector::from_pairs(self.dim(), pairs)
            .expect("hashed indices are below dim")
            .normalized()
    }

    pub fn vectorize_all<'a, I>(&self, texts: I) -> Vec<SparseVector>
    where
        I: IntoIterator<Item = &'a str>,
    {
        texts.into_iter().map(|t| self.vectorize(t)).collect()
    }
}
