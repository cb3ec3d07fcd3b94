use super::model::{Label, LearnerKind, LinearModel};
use crate::error::Result;
use crate::features::SparseVector;

/// Outcome of one PA-I step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaStep {
    /// Hinge loss before the update.
    pub loss: f64,
    /// Step size; zero on the passive branch.
    pub tau: f64,
}

impl LinearModel {
    /// PA-I update with aggressiveness `c`, treating the bias as the weight
    /// of an always-one feature:
    ///
    /// `loss = max(0, 1 - y(w·x + b))`, `tau = min(c, loss / (|x|² + 1))`,
    /// `w += tau·y·x`, `b += tau·y`.
    ///
    /// The model is left untouched when the example already has margin ≥ 1.
    /// Cost is O(nnz(x)).
    pub fn pa_update(&mut self, x: &SparseVector, y: Label, c: f64) -> Result<PaStep> {
        self.check_dim(x)?;
        let y = y.sign();
        let loss = (1.0 - y * self.margin_unchecked(x)).max(0.0);
        if loss == 0.0 {
            return Ok(PaStep { loss, tau: 0.0 });
        }
        let tau = c.min(loss / (x.norm_squared() + 1.0));
        x.add_to(&mut self.w, tau * y);
        self.b += tau * y;
        self.meta.learner = LearnerKind::PassiveAggressive;
        self.meta.updates += 1;
        Ok(PaStep { loss, tau })
    }
}

/// Functional form of [`LinearModel::pa_update`].
pub fn pa_update(model: &LinearModel, x: &SparseVector, y: Label, c: f64) -> Result<LinearModel> {
    let mut next = model.clone();
    next.pa_update(x, y, c)?;
    Ok(next)
}
