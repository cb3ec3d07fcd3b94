use std::time::{Duration, Instant};

use super::{Oracle, PoolState, RunConfig, TaskData, Workflow};
use crate::corpus::split;
use crate::error::{Error, Result};
use crate::eval::{average_curves, pooled_contingency, CurvePoint, LearningCurve};
use crate::features::{FeatureSpace, SparseVector};
use crate::learners::{random_model, svm_train, Label, LinearModel, SvmParams, TrainSet};
use crate::rng::{self, Stream};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub curve: LearningCurve,
    /// Model at the end of the run.
    pub model: LinearModel,
    pub oracle_calls: usize,
    /// Wall time of every iteration (empty unless timing is enabled).
    pub iteration_seconds: Vec<f64>,
}

/// Runs the workflow named in `config`.
pub fn run(data: &TaskData<'_>, config: &RunConfig, oracle: &mut dyn Oracle) -> Result<RunOutput> {
    match config.workflow {
        Workflow::BatchPassive => run_batch_passive(data, config, oracle),
        Workflow::KbatchActive => run_kbatch_active(data, config, oracle),
        Workflow::Interactive => run_interactive(data, config, oracle),
    }
}

/// Records curve points at the configured checkpoints.
struct Recorder<'c> {
    checkpoints: &'c [usize],
    next: usize,
    curve: LearningCurve,
    timings: Vec<f64>,
    timed: bool,
}

impl<'c> Recorder<'c> {
    fn new(data: &TaskData<'_>, checkpoints: &'c [usize], timed: bool) -> Self {
        Self {
            checkpoints,
            next: 0,
            curve: LearningCurve::new(data.key(), data.len()),
            timings: Vec::new(),
            timed,
        }
    }

    fn wants(&self, labeled: usize) -> bool {
        self.checkpoints.get(self.next) == Some(&labeled)
    }

    fn iteration(&mut self, elapsed: Duration) -> f64 {
        if self.timed {
            let s = elapsed.as_secs_f64();
            self.timings.push(s);
            s
        } else {
            0.0
        }
    }

    fn record(&mut self, state: &PoolState, truth: &crate::corpus::BinaryTask, secs: f64) {
        let labeled = state.validated_count();
        if !self.wants(labeled) {
            return;
        }
        self.next += 1;
        self.curve.push(CurvePoint {
            labeled_count: labeled,
            f1: pooled_contingency(state, truth).f1(),
            iter_seconds: secs,
        });
    }

    fn finish(self, model: LinearModel, oracle_calls: usize) -> RunOutput {
        RunOutput {
            curve: self.curve,
            model,
            oracle_calls,
            iteration_seconds: self.timings,
        }
    }
}

fn expect_workflow(config: &RunConfig, workflow: Workflow) -> Result<()> {
    config.validate()?;
    if config.workflow != workflow {
        return Err(Error::Config(format!(
            "expected workflow {workflow}, got {}",
            config.workflow
        )));
    }
    Ok(())
}

fn svm_params(config: &RunConfig) -> SvmParams {
    SvmParams {
        c: config.svm_c,
        seed: config.seed,
        ..SvmParams::default()
    }
}

/// Batch passive learning: at checkpoint `X` the first `X` items of the
/// seeded shuffle are validated and an SVM is trained on them from scratch.
/// `X = 0` evaluates the seeded random model.
pub fn run_batch_passive(
    data: &TaskData<'_>,
    config: &RunConfig,
    oracle: &mut dyn Oracle,
) -> Result<RunOutput> {
    expect_workflow(config, Workflow::BatchPassive)?;
    let n = data.len();
    let budget = config.budget.resolve(n)?;
    let checkpoints = config.checkpoints.resolve(n, budget)?;
    let order = split(data.task, config.seed);
    let mut labels: Vec<Label> = Vec::with_capacity(budget);
    let mut rec = Recorder::new(data, &checkpoints, config.record_timing);
    let mut model = random_model(data.space, config.seed);

    for &x in &checkpoints {
        while labels.len() < x {
            labels.push(oracle.label(order[labels.len()])?);
        }
        let start = Instant::now();
        if x > 0 && x < n {
            let examples: Vec<(&SparseVector, Label)> = order[..x]
                .iter()
                .zip(&labels)
                .map(|(&i, &l)| (&data.vectors[i], l))
                .collect();
            model = svm_train(&examples, data.space, svm_params(config))?.model;
        }
        // X = N leaves nothing to autocode; the last model is kept as is.
        let mut state = PoolState::new(data.vectors.clone(), model.clone())?;
        for (&i, &l) in order[..x].iter().zip(&labels) {
            state.mark_validated(i, l)?;
        }
        let secs = rec.iteration(start.elapsed());
        rec.record(&state, data.task, secs);
    }
    Ok(rec.finish(model, labels.len()))
}

/// Active learning with batch retraining: `k` picks from frozen
/// confidences, then an SVM retrained from scratch on all validated items.
pub fn run_kbatch_active(
    data: &TaskData<'_>,
    config: &RunConfig,
    oracle: &mut dyn Oracle,
) -> Result<RunOutput> {
    expect_workflow(config, Workflow::KbatchActive)?;
    let n = data.len();
    let budget = config.budget.resolve(n)?;
    let checkpoints = config.checkpoints.resolve(n, budget)?;
    let mut rec = Recorder::new(data, &checkpoints, config.record_timing);
    let mut state = PoolState::new(data.vectors.clone(), random_model(data.space, config.seed))?;
    let mut rng = rng::stream(config.seed, Stream::Selection);
    let mut calls = 0;
    rec.record(&state, data.task, 0.0);

    while state.validated_count() < budget {
        let start = Instant::now();
        let take = config.k.min(budget - state.validated_count());
        let picks = config.policy.select_batch(
            &state.candidates(),
            state.validated_count() + 1,
            take,
            &mut rng,
        )?;
        let mut busy = start.elapsed();
        let last = picks.len() - 1;
        for (j, &item) in picks.iter().enumerate() {
            let label = oracle.label(item)?;
            calls += 1;
            state.mark_validated(item, label)?;
            let mut secs = 0.0;
            if j == last {
                let start = Instant::now();
                // Nothing is left to autocode once the pool is exhausted.
                if !state.unvalidated().is_empty() {
                    let fit = svm_train(&state.validated_examples(), data.space, svm_params(config))?;
                    state.set_model(fit.model)?;
                }
                busy += start.elapsed();
                secs = rec.iteration(busy);
            }
            rec.record(&state, data.task, secs);
        }
    }
    Ok(rec.finish(state.model().clone(), calls))
}

/// Interactive learning: starting from the seeded random model, each
/// iteration picks one item, has it validated, applies one PA-I update and
/// re-scores the whole unvalidated pool.
pub fn run_interactive(
    data: &TaskData<'_>,
    config: &RunConfig,
    oracle: &mut dyn Oracle,
) -> Result<RunOutput> {
    expect_workflow(config, Workflow::Interactive)?;
    interactive_from(data, config, oracle, random_model(data.space, config.seed))
}

fn interactive_from(
    data: &TaskData<'_>,
    config: &RunConfig,
    oracle: &mut dyn Oracle,
    initial: LinearModel,
) -> Result<RunOutput> {
    let n = data.len();
    let budget = config.budget.resolve(n)?;
    let checkpoints = config.checkpoints.resolve(n, budget)?;
    let mut rec = Recorder::new(data, &checkpoints, config.record_timing);
    let mut state = PoolState::new(data.vectors.clone(), initial)?;
    let mut rng = rng::stream(config.seed, Stream::Selection);
    rec.record(&state, data.task, 0.0);

    for _ in 0..budget {
        let start = Instant::now();
        let item = state.select(config.policy, &mut rng)?;
        let selecting = start.elapsed();
        let label = oracle.label(item)?;
        let start = Instant::now();
        state.learn(item, label, config.pa_c)?;
        let secs = rec.iteration(selecting + start.elapsed());
        rec.record(&state, data.task, secs);
    }
    Ok(rec.finish(state.model().clone(), budget))
}

/// Where a warm-started run takes its initial model from.
#[derive(Debug, Clone)]
pub enum WarmSource {
    /// Previously trained models. Each one seeds its own run; the returned
    /// curve is their average.
    Models(Vec<LinearModel>),
    /// Source training sets, pooled and learnt with PA in seeded order
    /// before the target loop starts.
    Examples {
        space: FeatureSpace,
        sets: Vec<TrainSet>,
    },
}

/// Interactive learning on the target task, starting from reused source
/// knowledge instead of a random model. The curve counts target
/// validations only.
pub fn warm_start(
    source: &WarmSource,
    data: &TaskData<'_>,
    config: &RunConfig,
    oracle: &mut dyn Oracle,
) -> Result<RunOutput> {
    config.validate()?;
    match source {
        WarmSource::Models(models) => {
            if models.is_empty() {
                return Err(Error::Config("no source models given".into()));
            }
            for m in models {
                data.space.check_compatible(&m.space)?;
            }
            let mut runs = Vec::with_capacity(models.len());
            for m in models {
                runs.push(interactive_from(data, config, oracle, m.clone())?);
            }
            if runs.len() == 1 {
                return Ok(runs.pop().unwrap());
            }
            let curves: Vec<LearningCurve> = runs.iter().map(|r| r.curve.clone()).collect();
            let mut curve = average_curves(&curves)?;
            curve.trials = 1;
            curve.codes = 1;
            let last = runs.pop().unwrap();
            Ok(RunOutput {
                curve,
                model: last.model,
                oracle_calls: runs.iter().map(|r| r.oracle_calls).sum::<usize>() + last.oracle_calls,
                iteration_seconds: runs
                    .iter()
                    .flat_map(|r| r.iteration_seconds.iter().copied())
                    .chain(last.iteration_seconds)
                    .collect(),
            })
        }
        WarmSource::Examples { space, sets } => {
            data.space.check_compatible(space)?;
            let pooled: Vec<(&SparseVector, Label)> = sets.iter().flat_map(TrainSet::view).collect();
            let mut model = LinearModel::zeros(*space);
            pa_pass(&mut model, &pooled, config.pa_c, config.source_epochs, config.seed)?;
            interactive_from(data, config, oracle, model)
        }
    }
}

/// `epochs` PA-I passes over `examples`, each in a fresh seeded order.
pub fn pa_pass(
    model: &mut LinearModel,
    examples: &[(&SparseVector, Label)],
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<()> {
    let mut rng = rng::stream(seed, Stream::SourcePass);
    for _ in 0..epochs {
        for i in rng::permutation(examples.len(), &mut rng) {
            let (x, y) = examples[i];
            model.pa_update(x, y, c)?;
        }
    }
    Ok(())
}
