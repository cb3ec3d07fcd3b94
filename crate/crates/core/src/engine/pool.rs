use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::learners::{logistic, Label, LinearModel, PaStep};
use crate::policies::{Policy, PoolView};
use crate::rng::ChaCha8Rng;

/// Pools at least this large are re-scored on the rayon pool.
const PARALLEL_RESCORE_MIN: usize = 4096;

/// Mutable state of one binary task during training.
///
/// After every call that changes the model, `margins`, `confidences` and
/// `autocodes` of all unvalidated items agree with the current model.
#[derive(Debug, Clone)]
pub struct PoolState {
    vectors: Arc<[SparseVector]>,
    status: Vec<Option<Label>>,
    margins: Vec<f64>,
    confidences: Vec<f64>,
    autocodes: Vec<bool>,
    /// Unvalidated item indices, ascending.
    unvalidated: Vec<usize>,
    model: LinearModel,
    validations: usize,
}

impl PoolState {
    pub fn new(vectors: Arc<[SparseVector]>, model: LinearModel) -> Result<Self> {
        if let Some(x) = vectors.iter().find(|x| x.dim != model.dim()) {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                actual: x.dim,
            });
        }
        let n = vectors.len();
        let mut state = Self {
            vectors,
            status: vec![None; n],
            margins: vec![0.0; n],
            confidences: vec![0.5; n],
            autocodes: vec![true; n],
            unvalidated: (0..n).collect(),
            model,
            validations: 0,
        };
        state.rescore();
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &Arc<[SparseVector]> {
        &self.vectors
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn status(&self, item: usize) -> Option<Label> {
        self.status[item]
    }

    pub fn autocode(&self, item: usize) -> bool {
        self.autocodes[item]
    }

    pub fn confidence(&self, item: usize) -> f64 {
        self.confidences[item]
    }

    pub fn margin(&self, item: usize) -> f64 {
        self.margins[item]
    }

    pub fn confidences(&self) -> &[f64] {
        &self.confidences
    }

    pub fn autocodes(&self) -> &[bool] {
        &self.autocodes
    }

    pub fn unvalidated(&self) -> &[usize] {
        &self.unvalidated
    }

    pub fn validated_count(&self) -> usize {
        self.len() - self.unvalidated.len()
    }

    /// Number of validation events, corrections included.
    pub fn validations(&self) -> usize {
        self.validations
    }

    /// Candidates for selection: `(item, confidence)` of unvalidated items.
    pub fn candidates(&self) -> Vec<(usize, f64)> {
        self.unvalidated
            .iter()
            .map(|&i| (i, self.confidences[i]))
            .collect()
    }

    /// Policy pick among unvalidated items; the iteration number is the
    /// count of validated items plus one.
    pub fn select(&self, policy: Policy, rng: &mut ChaCha8Rng) -> Result<usize> {
        let candidates = self.candidates();
        policy.select(&PoolView::new(&candidates, self.validated_count() + 1), rng)
    }

    /// Marks an unvalidated item as validated without touching the model.
    pub fn mark_validated(&mut self, item: usize, label: Label) -> Result<()> {
        if item >= self.len() {
            return Err(Error::UnknownItem(item.to_string()));
        }
        if self.status[item].is_some() {
            return Err(Error::Config(format!("item {item} is already validated")));
        }
        let pos = self
            .unvalidated
            .binary_search(&item)
            .expect("unvalidated list tracks status");
        self.unvalidated.remove(pos);
        self.status[item] = Some(label);
        self.validations += 1;
        Ok(())
    }

    /// Re-labels an already validated item (a correction) without touching
    /// the model.
    pub fn relabel(&mut self, item: usize, label: Label) -> Result<()> {
        match self.status.get(item) {
            Some(Some(_)) => {
                self.status[item] = Some(label);
                self.validations += 1;
                Ok(())
            }
            _ => Err(Error::UnknownItem(item.to_string())),
        }
    }

    /// One interactive step: validate `item`, PA-update on it, re-score the
    /// unvalidated pool. A previously validated item is treated as a
    /// correction.
    pub fn learn(&mut self, item: usize, label: Label, c: f64) -> Result<PaStep> {
        if self.status.get(item).copied().flatten().is_some() {
            self.relabel(item, label)?;
        } else {
            self.mark_validated(item, label)?;
        }
        let step = self.model.pa_update(&self.vectors[item], label, c)?;
        if step.tau != 0.0 {
            self.rescore();
        }
        Ok(step)
    }

    pub fn set_model(&mut self, model: LinearModel) -> Result<()> {
        if model.space != self.model.space {
            self.model.space.check_compatible(&model.space)?;
        }
        self.model = model;
        self.rescore();
        Ok(())
    }

    /// Recomputes margins, confidences and autocodes of unvalidated items.
    pub fn rescore(&mut self) {
        let model = &self.model;
        let vectors = &self.vectors;
        let score = |i: usize| {
            let m = model.margin_unchecked(&vectors[i]);
            (m, logistic(m))
        };
        if self.unvalidated.len() >= PARALLEL_RESCORE_MIN && rayon::current_num_threads() > 1 {
            let scored: Vec<(f64, f64)> = self.unvalidated.par_iter().map(|&i| score(i)).collect();
            for (&i, (m, c)) in self.unvalidated.iter().zip(scored) {
                self.margins[i] = m;
                self.confidences[i] = c;
                self.autocodes[i] = m >= 0.0;
            }
        } else {
            for &i in &self.unvalidated {
                let (m, c) = score(i);
                self.margins[i] = m;
                self.confidences[i] = c;
                self.autocodes[i] = m >= 0.0;
            }
        }
    }

    /// Training examples formed by the validated items, in index order.
    pub fn validated_examples(&self) -> Vec<(&SparseVector, Label)> {
        self.status
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|l| (&self.vectors[i], l)))
            .collect()
    }

    /// True when the cached scores of every unvalidated item equal a fresh
    /// scoring with the current model.
    pub fn is_consistent(&self) -> bool {
        self.unvalidated.iter().all(|&i| {
            let m = self.model.margin_unchecked(&self.vectors[i]);
            m.to_bits() == self.margins[i].to_bits()
                && logistic(m).to_bits() == self.confidences[i].to_bits()
                && (m >= 0.0) == self.autocodes[i]
        })
    }
}
