//! Interactive learning for coding open-ended survey answers.
//!
//! A codeframe with `m` codes is decomposed into `m` independent binary
//! tasks. Each task can then be trained in one of three ways:
//!
//! * **batch passive** – the first `X` items of a seeded shuffle are coded by
//!   hand and a linear SVM is trained from scratch on them;
//! * **k-batch active** – the system picks `k` items at a time for the user to
//!   validate, then retrains the SVM from scratch;
//! * **interactive** – the system picks one item at a time and the classifier
//!   (Passive-Aggressive, PA-I) is updated incrementally after every single
//!   validation, with the whole pool re-scored before the next pick.
//!
//! Accuracy is always the pooled F1 over *all* `N` items, counting validated
//! items as correctly coded. Models trained on one corpus can seed the
//! interactive loop on another (classifier reuse), since the hashed feature
//! space is shared by construction.
//!
//! The crate is organised as follows:
//!
//! | module        | contents                                                      |
//! |---------------|---------------------------------------------------------------|
//! | [`corpus`]    | JSONL loading, binary decomposition, seeded splits            |
//! | [`features`]  | hashed tf-idf vectorizer and sparse vectors                   |
//! | [`learners`]  | linear model, PA-I update, dual coordinate descent SVM        |
//! | [`policies`]  | `random`, `minmax` and `uncertain` selection                  |
//! | [`engine`]    | pool state and the three training workflows, warm start       |
//! | [`eval`]      | F1, pooled contingency, curve averaging, timing statistics    |
//! | [`experiment`]| experiment matrices, reuse studies, benchmarks, artifacts     |
//! | [`session`]   | event-sourced live coding sessions                            |
//! | [`convert`]   | converters from public corpus layouts to JSONL                |
//! | [`synth`]     | seeded generators for stand-in corpora                        |

pub mod convert;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod learners;
pub mod plot;
pub mod policies;
pub mod rng;
pub mod session;
pub mod synth;

pub use corpus::{BinaryTask, Corpus, Verbatim};
pub use engine::{
    run_batch_passive, run_interactive, run_kbatch_active, warm_start, Label, PoolState,
    RunConfig, WarmSource, Workflow,
};
pub use error::{Error, Result};
pub use eval::{f1, Contingency, CurvePoint, LearningCurve};
pub use features::{FeatureSpace, SparseVector, Vectorizer};
pub use learners::{LinearModel, TrainSet};
pub use policies::Policy;
