//! Linear classifiers: the shared model type, the Passive-Aggressive (PA-I)
//! incremental update and a batch linear SVM.

mod model;
mod pa;
mod svm;

pub use model::{confidence, logistic, margin, random_model, Label, LearnerKind, LinearModel, ModelMeta};
pub use pa::{pa_update, PaStep};
pub use svm::{dual_objective, primal_objective, svm_train, SvmFit, SvmParams};

use crate::features::SparseVector;

/// Owned training examples with ±1 labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSet {
    pub examples: Vec<(SparseVector, Label)>,
}

impl TrainSet {
    pub fn new(examples: Vec<(SparseVector, Label)>) -> Self {
        Self { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn view(&self) -> Vec<(&SparseVector, Label)> {
        self.examples.iter().map(|(x, y)| (x, *y)).collect()
    }
}

impl FromIterator<(SparseVector, Label)> for TrainSet {
    fn from_iter<T: IntoIterator<Item = (SparseVector, Label)>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}
