//! Live coding sessions as event-sourced state machines.
//!
//! A [`Session`] runs one interactive loop per code over a shared corpus. All
//! state changes go through [`Event`]s: applying the same events in the same
//! order to a fresh session (see [`Session::replay`]) reproduces every model
//! bit for bit, which is what makes an append-only event log a sufficient
//! persistence format.
//!
//! Each code has at most one *pending* item: the policy's pick against the
//! current confidences. It is computed once after every model change and
//! returned unchanged until the next validation for that code, so repeated
//! reads are idempotent and the selection RNG advances identically on
//! replay.
//!
//! A validation either targets the pending item or, flagged as a correction,
//! an item validated earlier. A correction with a new label applies one more
//! PA update with that label; earlier updates are not undone.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::{Budget, PoolState};
use crate::error::Error;
use crate::eval::pooled_contingency;
use crate::experiment::Dataset;
use crate::learners::{random_model, Label, LinearModel};
use crate::policies::Policy;
use crate::rng::{self, ChaCha8Rng, Stream};

/// Why a session request was refused.
#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("incompatible model: {0}")]
    Incompatible(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("gone: {0}")]
    Gone(String),
    #[error(transparent)]
    Engine(#[from] Error),
}

pub type SessionResult<T> = std::result::Result<T, SessionError>;

fn default_policy() -> Policy {
    Policy::Uncertain
}

fn default_c() -> f64 {
    1.0
}

fn default_window() -> usize {
    50
}

/// Parameters fixed at session creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub corpus: String,
    /// Codes to work on; the whole codeframe when empty.
    #[serde(default)]
    pub codes: Vec<String>,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    /// Validations allowed per code.
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_c")]
    pub pa_c: f64,
    /// Number of recent validations behind the prequential agreement.
    #[serde(default = "default_window")]
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Finished,
}

/// Everything that changes a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: String,
        config: SessionConfig,
        /// Initial model per code; codes without one start from the seeded
        /// random model.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        warm: BTreeMap<String, LinearModel>,
        at_ms: u64,
    },
    Validated {
        code: String,
        item_id: String,
        label: Label,
        #[serde(default)]
        correction: bool,
        at_ms: u64,
        /// Server-side time of update, re-scoring and next selection.
        #[serde(default)]
        latency_ms: f64,
    },
    Finished {
        at_ms: u64,
    },
}

/// The item a code is waiting on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pending {
    pub code: String,
    pub item_id: String,
    pub text: String,
    /// The classifier's current call on the item.
    pub autocode: Label,
    pub confidence: f64,
}

/// Progress after one validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub validated: usize,
    pub item_id: String,
    pub label: Label,
    pub correction: bool,
    /// Autocode of the item just before the human decided (absent for
    /// corrections).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_autocode: Option<Label>,
    /// Share of agreements between prior autocode and human label over the
    /// recent window; absent until the first non-correction validation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prequential: Option<f64>,
    /// Pooled F1 against the corpus labels (demo mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_f1: Option<f64>,
    pub latency_ms: f64,
    pub at_ms: u64,
}

#[derive(Debug, Clone)]
struct CodeLoop {
    code: String,
    task: Option<usize>,
    pool: PoolState,
    rng: ChaCha8Rng,
    pending: Option<usize>,
    budget: usize,
    window: VecDeque<bool>,
    history: Vec<MetricPoint>,
}

impl CodeLoop {
    fn exhausted(&self) -> bool {
        self.pool.validated_count() >= self.budget || self.pool.unvalidated().is_empty()
    }

    fn refresh_pending(&mut self, policy: Policy) -> SessionResult<()> {
        self.pending = if self.exhausted() {
            None
        } else {
            Some(self.pool.select(policy, &mut self.rng)?)
        };
        Ok(())
    }
}

/// Result of a validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub code: String,
    pub point: MetricPoint,
    pub validated: usize,
    pub remaining_budget: usize,
    /// False for a correction that repeats the current label.
    pub changed: bool,
}

/// One live session.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub config: SessionConfig,
    pub status: Status,
    pub created_at_ms: u64,
    pub updated_at_ms: u64,
    /// Whether corpus labels may be used as ground truth in metrics.
    pub demo: bool,
    data: Arc<Dataset>,
    ids: Arc<std::collections::HashMap<String, usize>>,
    loops: Vec<CodeLoop>,
    events: usize,
}

/// Item-id index of a dataset, shared by all sessions over it.
pub fn id_index(data: &Dataset) -> Arc<std::collections::HashMap<String, usize>> {
    Arc::new(
        data.corpus
            .verbatims
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.clone(), i))
            .collect(),
    )
}

impl Session {
    /// Validates a creation request and returns the session together with
    /// its `Created` event. `extra_codes` are codes the corpus declares but
    /// has no labelled instances of.
    pub fn create(
        id: String,
        data: Arc<Dataset>,
        extra_codes: &[String],
        config: SessionConfig,
        warm: BTreeMap<String, LinearModel>,
        demo: bool,
        at_ms: u64,
    ) -> SessionResult<(Self, Event)> {
        let event = Event::Created {
            id,
            config,
            warm,
            at_ms,
        };
        let session = Self::from_created(&event, data, extra_codes, demo)?;
        Ok((session, event))
    }

    fn from_created(
        event: &Event,
        data: Arc<Dataset>,
        extra_codes: &[String],
        demo: bool,
    ) -> SessionResult<Self> {
        let Event::Created {
            id,
            config,
            warm,
            at_ms,
        } = event
        else {
            return Err(SessionError::Invalid("log must start with a `created` event".into()));
        };
        if config.corpus != data.name() {
            return Err(SessionError::Invalid(format!(
                "session is for corpus `{}`, not `{}`",
                config.corpus,
                data.name()
            )));
        }
        if !(config.pa_c > 0.0) {
            return Err(SessionError::Invalid("pa_c must be positive".into()));
        }
        if config.window == 0 {
            return Err(SessionError::Invalid("window must be at least 1".into()));
        }
        let n = data.len();
        let budget = config
            .budget
            .resolve(n)
            .map_err(|e| SessionError::Invalid(e.to_string()))?;
        let known: Vec<&String> = data.corpus.codeframe.iter().chain(extra_codes).collect();
        let codes: Vec<String> = if config.codes.is_empty() {
            known.iter().map(|c| c.to_string()).collect()
        } else {
            config.codes.clone()
        };
        if codes.is_empty() {
            return Err(SessionError::Invalid("corpus has no codes".into()));
        }
        for (i, c) in codes.iter().enumerate() {
            if !known.contains(&c) {
                return Err(SessionError::Invalid(format!("unknown code `{c}`")));
            }
            if codes[..i].contains(c) {
                return Err(SessionError::Invalid(format!("code `{c}` listed twice")));
            }
        }
        if let Some(c) = warm.keys().find(|c| !codes.contains(c)) {
            return Err(SessionError::Invalid(format!("warm model for unknown code `{c}`")));
        }
        for m in warm.values() {
            data.space
                .check_compatible(&m.space)
                .map_err(|e| SessionError::Incompatible(e.to_string()))?;
        }

        let mut loops = Vec::with_capacity(codes.len());
        for (j, code) in codes.iter().enumerate() {
            let seed = config.seed.wrapping_add(j as u64);
            let model = match warm.get(code) {
                Some(m) => m.clone(),
                None => random_model(data.space, seed),
            };
            let mut l = CodeLoop {
                code: code.clone(),
                task: data.tasks.iter().position(|t| &t.code == code),
                pool: PoolState::new(data.vectors.clone(), model)?,
                rng: rng::stream(seed, Stream::Selection),
                pending: None,
                budget,
                window: VecDeque::new(),
                history: Vec::new(),
            };
            l.refresh_pending(config.policy)?;
            loops.push(l);
        }
        Ok(Self {
            id: id.clone(),
            config: Session::normalized(config, codes),
            status: Status::Active,
            created_at_ms: *at_ms,
            updated_at_ms: *at_ms,
            demo,
            ids: id_index(&data),
            data,
            loops,
            events: 1,
        })
    }

    fn normalized(config: &SessionConfig, codes: Vec<String>) -> SessionConfig {
        SessionConfig {
            codes,
            ..config.clone()
        }
    }

    /// Rebuilds a session from its event log.
    pub fn replay(
        events: &[Event],
        data: Arc<Dataset>,
        extra_codes: &[String],
        demo: bool,
    ) -> SessionResult<Self> {
        let first = events
            .first()
            .ok_or_else(|| SessionError::Invalid("empty event log".into()))?;
        let mut s = Self::from_created(first, data, extra_codes, demo)?;
        for e in &events[1..] {
            s.apply(e)?;
        }
        Ok(s)
    }

    /// Number of events behind the current state, `Created` included.
    pub fn event_count(&self) -> usize {
        self.events
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.loops.iter().map(|l| l.code.as_str())
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    fn code_index(&self, code: &str) -> SessionResult<usize> {
        self.loops
            .iter()
            .position(|l| l.code == code)
            .ok_or_else(|| SessionError::Invalid(format!("code `{code}` is not part of this session")))
    }

    fn check_active(&self) -> SessionResult<()> {
        match self.status {
            Status::Active => Ok(()),
            Status::Finished => Err(SessionError::Gone("session is finished".into())),
        }
    }

    pub fn pool(&self, code: &str) -> SessionResult<&PoolState> {
        Ok(&self.loops[self.code_index(code)?].pool)
    }

    pub fn model(&self, code: &str) -> SessionResult<&LinearModel> {
        Ok(self.pool(code)?.model())
    }

    pub fn history(&self, code: &str) -> SessionResult<&[MetricPoint]> {
        Ok(&self.loops[self.code_index(code)?].history)
    }

    pub fn remaining_budget(&self, code: &str) -> SessionResult<usize> {
        let l = &self.loops[self.code_index(code)?];
        Ok(l.budget.saturating_sub(l.pool.validated_count()))
    }

    /// The pending item of `code`; `Gone` when the budget or pool is used up.
    pub fn next(&self, code: &str) -> SessionResult<Pending> {
        self.check_active()?;
        let l = &self.loops[self.code_index(code)?];
        let item = l
            .pending
            .ok_or_else(|| SessionError::Gone(format!("nothing left to validate for `{code}`")))?;
        Ok(Pending {
            code: code.to_owned(),
            item_id: self.data.corpus.verbatims[item].id.clone(),
            text: self.data.corpus.verbatims[item].text.clone(),
            autocode: Label::from_bool(l.pool.autocode(item)),
            confidence: l.pool.confidence(item),
        })
    }

    /// Checks a validation request and returns the event that applies it.
    pub fn validation_event(
        &self,
        code: &str,
        item_id: &str,
        label: Label,
        correction: bool,
        at_ms: u64,
    ) -> SessionResult<Event> {
        self.check_active()?;
        let l = &self.loops[self.code_index(code)?];
        let item = *self
            .ids
            .get(item_id)
            .ok_or_else(|| SessionError::Conflict(format!("unknown item `{item_id}`")))?;
        if correction {
            if l.pool.status(item).is_none() {
                return Err(SessionError::Conflict(format!(
                    "item `{item_id}` has not been validated for `{code}`"
                )));
            }
        } else if l.pending != Some(item) {
            return Err(SessionError::Conflict(format!(
                "item `{item_id}` is not the pending item for `{code}`"
            )));
        }
        Ok(Event::Validated {
            code: code.to_owned(),
            item_id: item_id.to_owned(),
            label,
            correction,
            at_ms,
            latency_ms: 0.0,
        })
    }

    /// Applies an event. `Validated` events must pass the same checks as
    /// [`Session::validation_event`].
    pub fn apply(&mut self, event: &Event) -> SessionResult<Option<Validation>> {
        match event {
            Event::Created { .. } => Err(SessionError::Invalid("session already created".into())),
            Event::Finished { at_ms } => {
                self.check_active()?;
                self.status = Status::Finished;
                self.updated_at_ms = *at_ms;
                self.events += 1;
                Ok(None)
            }
            Event::Validated {
                code,
                item_id,
                label,
                correction,
                at_ms,
                latency_ms,
            } => {
                self.validation_event(code, item_id, *label, *correction, *at_ms)?;
                let item = self.ids[item_id.as_str()];
                let j = self.code_index(code)?;
                let policy = self.config.policy;
                let window = self.config.window;
                let demo = self.demo;
                let data = self.data.clone();
                let l = &mut self.loops[j];

                let previous = l.pool.status(item);
                let changed = !(*correction && previous == Some(*label));
                let prior_autocode = (!*correction).then(|| Label::from_bool(l.pool.autocode(item)));
                if changed {
                    l.pool.learn(item, *label, self.config.pa_c)?;
                    l.refresh_pending(policy)?;
                }
                if let Some(prior) = prior_autocode {
                    l.window.push_back(prior == *label);
                    if l.window.len() > window {
                        l.window.pop_front();
                    }
                }
                let prequential = (!l.window.is_empty())
                    .then(|| l.window.iter().filter(|&&a| a).count() as f64 / l.window.len() as f64);
                let pooled_f1 = match (demo, l.task) {
                    (true, Some(t)) => Some(pooled_contingency(&l.pool, &data.tasks[t]).f1()),
                    _ => None,
                };
                let point = MetricPoint {
                    validated: l.pool.validated_count(),
                    item_id: item_id.clone(),
                    label: *label,
                    correction: *correction,
                    prior_autocode,
                    prequential,
                    pooled_f1,
                    latency_ms: *latency_ms,
                    at_ms: *at_ms,
                };
                l.history.push(point.clone());
                self.updated_at_ms = *at_ms;
                self.events += 1;
                Ok(Some(Validation {
                    code: code.clone(),
                    validated: point.validated,
                    remaining_budget: l.budget.saturating_sub(point.validated),
                    point,
                    changed,
                }))
            }
        }
    }

    /// Checks and applies a validation, stamping the event and the metric
    /// point with the server-side time of update, re-scoring and selection.
    /// Returns the event to persist.
    pub fn validate(
        &mut self,
        code: &str,
        item_id: &str,
        label: Label,
        correction: bool,
        at_ms: u64,
    ) -> SessionResult<(Validation, Event)> {
        let mut event = self.validation_event(code, item_id, label, correction, at_ms)?;
        let start = Instant::now();
        let mut v = self.apply(&event)?.expect("validation events yield a result");
        let ms = start.elapsed().as_secs_f64() * 1e3;
        if let Event::Validated { latency_ms, .. } = &mut event {
            *latency_ms = ms;
        }
        v.point.latency_ms = ms;
        let j = self.code_index(code)?;
        if let Some(p) = self.loops[j].history.last_mut() {
            p.latency_ms = ms;
        }
        Ok((v, event))
    }

    /// Closes the session; returns the event to persist.
    pub fn finish(&mut self, at_ms: u64) -> SessionResult<Event> {
        let event = Event::Finished { at_ms };
        self.apply(&event)?;
        Ok(event)
    }

    /// Coded items: per code the label and whether a human (`validated`)
    /// or the classifier assigned it.
    pub fn coded_items(&self) -> Vec<CodedItem> {
        self.data
            .corpus
            .verbatims
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut codes = Vec::new();
                let mut sources = BTreeMap::new();
                for l in &self.loops {
                    let (positive, source) = match l.pool.status(i) {
                        Some(label) => (label.is_positive(), Source::Human),
                        None => (l.pool.autocode(i), Source::Machine),
                    };
                    if positive {
                        codes.push(l.code.clone());
                    }
                    sources.insert(l.code.clone(), source);
                }
                CodedItem {
                    id: v.id.clone(),
                    text: v.text.clone(),
                    codes,
                    source: sources,
                }
            })
            .collect()
    }

    /// Truth-based pooled F1 per code, when the corpus carries labels.
    pub fn pooled_f1(&self, code: &str) -> SessionResult<Option<f64>> {
        let l = &self.loops[self.code_index(code)?];
        Ok(l.task
            .map(|t| pooled_contingency(&l.pool, &self.data.tasks[t]).f1()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Machine,
}

/// One line of a session export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodedItem {
    pub id: String,
    pub text: String,
    pub codes: Vec<String>,
    pub source: BTreeMap<String, Source>,
}
