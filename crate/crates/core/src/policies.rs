//! Selection policies: which unvalidated verbatim the user should see next.
//!
//! All three policies work on a snapshot of `(item index, confidence)` pairs
//! for the unvalidated items. Ties are broken by the lowest item index.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Uniformly random unvalidated item.
    Random,
    /// Most confidently positive on odd iterations, most confidently negative
    /// on even ones.
    MinMax,
    /// Confidence closest to 0.5.
    Uncertain,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Random, Policy::MinMax, Policy::Uncertain];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Random => "random",
            Policy::MinMax => "minmax",
            Policy::Uncertain => "uncertain",
        }
    }

    pub fn select(self, pool: &PoolView<'_>, rng: &mut ChaCha8Rng) -> Result<usize> {
        match self {
            Policy::Random => select_random(pool, rng),
            Policy::MinMax => select_minmax(pool),
            Policy::Uncertain => select_uncertain(pool),
        }
    }

    /// Picks up to `k` items from frozen confidences, removing each pick from
    /// the candidates before the next. MinMax parity advances per pick.
    pub fn select_batch(
        self,
        candidates: &[(usize, f64)],
        first_iteration: usize,
        k: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<usize>> {
        let mut remaining = candidates.to_vec();
        let mut picked = Vec::with_capacity(k.min(remaining.len()));
        for j in 0..k.min(candidates.len()) {
            let view = PoolView::new(&remaining, first_iteration + j);
            let item = self.select(&view, rng)?;
            let pos = remaining
                .iter()
                .position(|(i, _)| *i == item)
                .expect("selected item is a candidate");
            remaining.remove(pos);
            picked.push(item);
        }
        Ok(picked)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Policy::Random),
            "minmax" => Ok(Policy::MinMax),
            "uncertain" => Ok(Policy::Uncertain),
            other => Err(Error::Config(format!(
                "unknown policy `{other}` (expected random, minmax or uncertain)"
            ))),
        }
    }
}

/// Unvalidated items with their confidences. `iteration` is the 1-based
/// number of the validation about to be requested.
#[derive(Debug, Clone, Copy)]
pub struct PoolView<'a> {
    pub items: &'a [(usize, f64)],
    pub iteration: usize,
}

impl<'a> PoolView<'a> {
    pub fn new(items: &'a [(usize, f64)], iteration: usize) -> Self {
        Self { items, iteration }
    }
}

pub fn select_random(pool: &PoolView<'_>, rng: &mut ChaCha8Rng) -> Result<usize> {
    if pool.items.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(pool.items[rng.gen_range(0..pool.items.len())].0)
}

pub fn select_minmax(pool: &PoolView<'_>) -> Result<usize> {
    if pool.iteration % 2 == 1 {
        best_by(pool, |c| -c)
    } else {
        best_by(pool, |c| c)
    }
}

pub fn select_uncertain(pool: &PoolView<'_>) -> Result<usize> {
    best_by(pool, |c| (c - 0.5).abs())
}

/// Item minimising `key(confidence)`, lowest index on ties.
fn best_by(pool: &PoolView<'_>, key: impl Fn(f64) -> f64) -> Result<usize> {
    pool.items
        .iter()
        .map(|&(i, c)| (key(c), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
        .ok_or(Error::EmptyPool)
}

/// Same ordering as [`best_by`] but over any comparable score; used where
/// callers rank raw margins instead of confidences.
pub fn argmin_by_index<T: Copy>(items: &[(usize, T)], cmp: impl Fn(&T, &T) -> Ordering) -> Option<usize> {
    items
        .iter()
        .min_by(|a, b| cmp(&a.1, &b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| *i)
}
