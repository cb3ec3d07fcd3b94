//! Training workflows over one binary task.
//!
//! * [`run_batch_passive`]: for each checkpoint `X`, the first `X` items of a
//!   seeded shuffle are validated and an SVM is trained from scratch on them.
//! * [`run_kbatch_active`]: `k` items are picked from frozen confidences,
//!   validated, and the SVM is retrained from scratch on everything validated.
//! * [`run_interactive`]: one pick, one PA update, a full re-score, repeat.
//! * [`warm_start`]: the interactive loop started from a reused model.
//!
//! Every workflow evaluates pooled F1 over all `N` items at the checkpoints of
//! the [`RunConfig`], and is fully determined by task, config and oracle.

mod pool;
mod workflows;

pub use pool::PoolState;
pub use workflows::{
    pa_pass, run, run_batch_passive, run_interactive, run_kbatch_active, warm_start,
    RunOutput, WarmSource,
};

pub use crate::learners::Label;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryTask;
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, SparseVector};
use crate::policies::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workflow {
    BatchPassive,
    KbatchActive,
    Interactive,
}

impl fmt::Display for Workflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Workflow::BatchPassive => "batch_passive",
            Workflow::KbatchActive => "kbatch_active",
            Workflow::Interactive => "interactive",
        })
    }
}

impl FromStr for Workflow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch_passive" => Ok(Workflow::BatchPassive),
            "kbatch_active" => Ok(Workflow::KbatchActive),
            "interactive" => Ok(Workflow::Interactive),
            other => Err(Error::Config(format!("unknown workflow `{other}`"))),
        }
    }
}

/// Number of validations a run may request.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Budget {
    #[default]
    Full,
    Count(usize),
    /// Fraction of the pool, in (0, 1].
    Fraction(f64),
}

impl Budget {
    pub fn resolve(self, n: usize) -> Result<usize> {
        match self {
            Budget::Full => Ok(n),
            Budget::Count(c) if c <= n => Ok(c),
            Budget::Count(c) => Err(Error::Config(format!("budget {c} exceeds pool size {n}"))),
            Budget::Fraction(f) if f > 0.0 && f <= 1.0 => Ok(((f * n as f64).round() as usize).min(n)),
            Budget::Fraction(f) => Err(Error::Config(format!("budget fraction {f} not in (0, 1]"))),
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Budget::Full => s.serialize_str("full"),
            Budget::Count(c) => s.serialize_u64(*c as u64),
            Budget::Fraction(f) => s.serialize_f64(*f),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Fraction(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(c) => Ok(Budget::Count(c as usize)),
            Raw::Fraction(f) => Ok(Budget::Fraction(f)),
            Raw::Word(w) if w == "full" => Ok(Budget::Full),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "budget must be \"full\", a count or a fraction, got `{w}`"
            ))),
        }
    }
}

/// Labeled counts at which curve points are recorded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoints {
    /// 0, every count below 50, every 1% of the pool, and the budget.
    #[default]
    Default,
    /// Every percent of the pool from 0 to 100 (plus the budget).
    Percent,
    Explicit(Vec<usize>),
}

/// Counts below this are all checkpoints under the default schedule.
const DENSE_PREFIX: usize = 50;

impl Checkpoints {
    /// Sorted checkpoint counts, all `<= budget`; always contains 0 and
    /// `budget`.
    pub fn resolve(&self, n: usize, budget: usize) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        set.insert(0);
        set.insert(budget);
        let percents = (1..=100).map(|p| (p as f64 * n as f64 / 100.0).round() as usize);
        match self {
            Checkpoints::Default => {
                set.extend(1..DENSE_PREFIX.min(budget + 1));
                set.extend(percents);
            }
            Checkpoints::Percent => set.extend(percents),
            Checkpoints::Explicit(xs) => {
                if let Some(x) = xs.iter().find(|&&x| x > n) {
                    return Err(Error::Config(format!("checkpoint {x} exceeds pool size {n}")));
                }
                set.extend(xs.iter().copied());
            }
        }
        Ok(set.into_iter().filter(|&x| x <= budget).collect())
    }
}

fn default_k() -> usize {
    1
}

fn default_c() -> f64 {
    1.0
}

fn default_epochs() -> usize {
    1
}

/// Parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub workflow: Workflow,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    /// PA-I aggressiveness.
    #[serde(default = "default_c")]
    pub pa_c: f64,
    #[serde(default = "default_c")]
    pub svm_c: f64,
    #[serde(default)]
    pub checkpoints: Checkpoints,
    /// Measure per-iteration wall time. Off by default so that curve files
    /// are reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
    /// Passes over the pooled source examples when warm starting from
    /// several sources.
    #[serde(default = "default_epochs")]
    pub source_epochs: usize,
}

fn default_policy() -> Policy {
    Policy::Uncertain
}

impl RunConfig {
    pub fn new(workflow: Workflow) -> Self {
        Self {
            workflow,
            policy: Policy::Uncertain,
            k: 1,
            budget: Budget::Full,
            seed: 0,
            pa_c: 1.0,
            svm_c: 1.0,
            checkpoints: Checkpoints::Default,
            record_timing: false,
            source_epochs: 1,
        }
    }

    pub fn policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn checkpoints(mut self, checkpoints: Checkpoints) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn timed(mut self, on: bool) -> Self {
        self.record_timing = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.pa_c > 0.0) || !(self.svm_c > 0.0) {
            return Err(Error::Config("C values must be positive".into()));
        }
        if self.source_epochs == 0 {
            return Err(Error::Config("source_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Source of validation labels.
pub trait Oracle {
    fn label(&mut self, item: usize) -> Result<Label>;
}

/// Simulation oracle answering from the task's ground truth.
#[derive(Debug)]
pub struct TruthOracle<'a> {
    task: &'a BinaryTask,
    calls: usize,
}

impl<'a> TruthOracle<'a> {
    pub fn new(task: &'a BinaryTask) -> Self {
        Self { task, calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl Oracle for TruthOracle<'_> {
    fn label(&mut self, item: usize) -> Result<Label> {
        self.calls += 1;
        self.task
            .labels
            .get(item)
            .map(|&l| Label::from_bool(l))
            .ok_or_else(|| Error::UnknownItem(item.to_string()))
    }
}

/// A binary task together with the vectors of its items.
#[derive(Debug, Clone)]
pub struct TaskData<'a> {
    pub task: &'a BinaryTask,
    pub vectors: Arc<[SparseVector]>,
    pub space: FeatureSpace,
}

impl<'a> TaskData<'a> {
    pub fn new(task: &'a BinaryTask, vectors: Arc<[SparseVector]>, space: FeatureSpace) -> Result<Self> {
        if task.len() != vectors.len() {
            return Err(Error::Config(format!(
                "task has {} items but {} vectors were given",
                task.len(),
                vectors.len()
            )));
        }
        Ok(Self {
            task,
            vectors,
            space,
        })
    }

    pub fn len(&self) -> usize {
        self.task.len()
    }

    pub fn is_empty(&self) -> bool {
        self.task.is_empty()
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.task.corpus, self.task.code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_checkpoints() {
        let xs = Checkpoints::Default.resolve(2000, 2000).unwrap();
        assert_eq!(xs[0], 0);
        assert!(xs.contains(&49) && xs.contains(&20) && xs.contains(&60));
        assert!(!xs.contains(&50) && !xs.contains(&61));
        assert_eq!(*xs.last().unwrap(), 2000);
        let capped = Checkpoints::Default.resolve(2000, 400).unwrap();
        assert_eq!(*capped.last().unwrap(), 400);
        assert!(Checkpoints::Explicit(vec![5, 3000]).resolve(2000, 2000).is_err());
    }

    #[test]
    fn budget_parsing() {
        #[derive(Deserialize)]
        struct W {
            b: Budget,
        }
        let p = |s: &str| toml::from_str::<W>(s).map(|w| w.b);
        assert_eq!(p("b = \"full\"").unwrap(), Budget::Full);
        assert_eq!(p("b = 40").unwrap(), Budget::Count(40));
        assert_eq!(p("b = 0.2").unwrap(), Budget::Fraction(0.2));
        assert!(p("b = \"most\"").is_err());
        assert_eq!(Budget::Fraction(0.2).resolve(2000).unwrap(), 400);
        assert!(Budget::Count(11).resolve(10).is_err());
    }
}
