//! L1-loss (hinge) linear SVM trained by dual coordinate descent.
//!
//! With the bias folded in as the weight of an always-one feature the primal
//! problem is
//!
//! ```text
//! min  ½(|w|² + b²) + C Σ max(0, 1 - y_i (w·x_i + b))
//! ```
//!
//! and its dual, in minimisation form,
//!
//! ```text
//! min  ½ αᵀQα - Σ α_i   s.t. 0 ≤ α_i ≤ C,   Q_ij = y_i y_j (x_i·x_j + 1).
//! ```
//!
//! Each epoch visits the coordinates in a fresh seeded order and minimises the
//! dual exactly along each one, keeping `w = Σ α_i y_i x_i` in sync. Training
//! stops once the largest projected-gradient magnitude seen in a sweep drops
//! below `tol`, or after `max_epochs`.

use rand::seq::SliceRandom;

use super::model::{Label, LearnerKind, LinearModel, ModelMeta};
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, SparseVector};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: LinearModel,
    pub alpha: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    /// Dual objective (minimisation form) at the end of each epoch.
    pub objective_trace: Vec<f64>,
    pub dual_objective: f64,
    pub primal_objective: f64,
    /// Set when every training label is the same; the model then simply
    /// pushes all margins toward that class.
    pub one_class: Option<Label>,
}

pub fn svm_train(
    examples: &[(&SparseVector, Label)],
    space: FeatureSpace,
    params: SvmParams,
) -> Result<SvmFit> {
    if examples.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    for (x, _) in examples {
        if x.dim != space.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim,
                actual: x.dim,
            });
        }
    }
    let n = examples.len();
    let c = params.c;
    let ys: Vec<f64> = examples.iter().map(|(_, y)| y.sign()).collect();
    let qdiag: Vec<f64> = examples.iter().map(|(x, _)| x.norm_squared() + 1.0).collect();
    let support = feature_support(examples);

    let mut w = vec![0.0; space.dim];
    let mut b = 0.0;
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(params.seed, Stream::SvmEpochs);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    while epochs < params.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let (x, _) = examples[i];
            let y = ys[i];
            let g = y * (x.dot_dense(&w) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qdiag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y;
                if delta != 0.0 {
                    x.add_to(&mut w, delta);
                    b += delta;
                }
            }
        }
        trace.push(dual_value(&w, b, &alpha, &support));
        if max_violation < params.tol {
            converged = true;
            break;
        }
    }

    let one_class = if ys.iter().all(|y| *y > 0.0) {
        Some(Label::Positive)
    } else if ys.iter().all(|y| *y < 0.0) {
        Some(Label::Negative)
    } else {
        None
    };
    let model = LinearModel {
        space,
        w,
        b,
        meta: ModelMeta {
            learner: LearnerKind::Svm,
            updates: n as u64,
        },
    };
    let dual = *trace.last().expect("at least one epoch");
    let primal = primal_objective(&model, examples, c);
    Ok(SvmFit {
        model,
        alpha,
        epochs,
        converged,
        objective_trace: trace,
        dual_objective: dual,
        primal_objective: primal,
        one_class,
    })
}

/// Sorted distinct feature indices used by the training set; `w` is zero
/// everywhere else.
fn feature_support(examples: &[(&SparseVector, Label)]) -> Vec<u32> {
    let mut idx: Vec<u32> = examples
        .iter()
        .flat_map(|(x, _)| x.indices.iter().copied())
        .collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

fn dual_value(w: &[f64], b: f64, alpha: &[f64], support: &[u32]) -> f64 {
    let wnorm: f64 = support.iter().map(|&i| w[i as usize] * w[i as usize]).sum();
    0.5 * (wnorm + b * b) - alpha.iter().sum::<f64>()
}

/// Dual objective `½|Σ α_i y_i x̃_i|² - Σ α_i` evaluated from scratch.
pub fn dual_objective(examples: &[(&SparseVector, Label)], alpha: &[f64], dim: usize) -> f64 {
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    for ((x, y), a) in examples.iter().zip(alpha) {
        x.add_to(&mut w, a * y.sign());
        b += a * y.sign();
    }
    0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b) - alpha.iter().sum::<f64>()
}

/// Primal objective `½(|w|² + b²) + C Σ hinge`.
pub fn primal_objective(model: &LinearModel, examples: &[(&SparseVector, Label)], c: f64) -> f64 {
    let reg = 0.5 * (model.w.iter().map(|v| v * v).sum::<f64>() + model.b * model.b);
    let hinge: f64 = examples
        .iter()
        .map(|(x, y)| (1.0 - y.sign() * model.margin_unchecked(x)).max(0.0))
        .sum();
    reg + c * hinge
}
