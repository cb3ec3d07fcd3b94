use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use verbacode::corpus::BinaryTask;
use verbacode::engine::{
    run, warm_start, Budget, Checkpoints, Oracle, PoolState, RunConfig, TaskData, TruthOracle, WarmSource,
    Workflow,
};
use verbacode::error::Result;
use verbacode::eval::pooled_contingency;
use verbacode::experiment::{cmd_run, Dataset};
use verbacode::features::{FeatureSpace, SparseVector};
use verbacode::learners::{random_model, Label, LinearModel};
use verbacode::policies::{Policy, PoolView};
use verbacode::rng::ChaCha8Rng;
use verbacode::synth::{topic_corpus, TopicCorpusParams};

fn small_dataset(n_docs: usize) -> Dataset {
    let params = TopicCorpusParams {
        n_docs,
        ..TopicCorpusParams::default()
    };
    let corpus = topic_corpus(&params, 3).unwrap();
    Dataset::new(corpus, FeatureSpace::new(1 << 14, 0).unwrap()).unwrap()
}

/// Truth oracle that remembers every item it was asked about.
struct Recording<'a> {
    inner: TruthOracle<'a>,
    asked: Vec<usize>,
}

impl Oracle for Recording<'_> {
    fn label(&mut self, item: usize) -> Result<Label> {
        self.asked.push(item);
        self.inner.label(item)
    }
}

fn all_configs() -> Vec<RunConfig> {
    let mut out = vec![RunConfig::new(Workflow::BatchPassive)];
    for p in Policy::ALL {
        out.push(RunConfig::new(Workflow::Interactive).policy(p));
        out.push(RunConfig::new(Workflow::KbatchActive).policy(p).k(7));
    }
    out
}

fn run_recorded(data: &TaskData<'_>, task: &BinaryTask, config: &RunConfig) -> (verbacode::engine::RunOutput, Vec<usize>) {
    let mut oracle = Recording {
        inner: TruthOracle::new(task),
        asked: Vec::new(),
    };
    let out = run(data, config, &mut oracle).unwrap();
    (out, oracle.asked)
}

#[test]
fn every_workflow_ends_at_perfect_f1() {
    let ds = small_dataset(200);
    for task in ds.tasks.iter().take(4) {
        let td = TaskData::new(task, ds.vectors.clone(), ds.space).unwrap();
        for config in all_configs() {
            let (out, asked) = run_recorded(&td, task, &config.clone().seed(5));
            let last = out.curve.points.last().unwrap();
            assert_eq!(last.labeled_count, 200);
            assert_eq!(last.f1, 1.0, "{} {:?}", task.code, config);
            assert_eq!(out.oracle_calls, 200);
            let distinct: BTreeSet<usize> = asked.iter().copied().collect();
            assert_eq!(distinct.len(), 200, "an item was validated twice");
        }
    }
}

#[test]
fn oracle_calls_match_the_budget() {
    let ds = small_dataset(150);
    let task = &ds.tasks[0];
    let td = TaskData::new(task, ds.vectors.clone(), ds.space).unwrap();
    for budget in [0, 1, 37, 150] {
        for config in all_configs() {
            let (out, asked) = run_recorded(&td, task, &config.budget(Budget::Count(budget)));
            assert_eq!(out.oracle_calls, budget);
            assert_eq!(asked.len(), budget);
            assert_eq!(out.curve.points.last().unwrap().labeled_count, budget);
        }
    }
}

#[test]
fn curves_are_well_formed_and_deterministic() {
    let ds = small_dataset(150);
    let task = &ds.tasks[1];
    let td = TaskData::new(task, ds.vectors.clone(), ds.space).unwrap();
    for config in all_configs() {
        let config = config.seed(11).budget(Budget::Fraction(0.5));
        let (a, asked_a) = run_recorded(&td, task, &config);
        let (b, asked_b) = run_recorded(&td, task, &config);
        assert_eq!(asked_a, asked_b);
        assert_eq!(a.curve.points, b.curve.points);
        assert!(a.curve.points.windows(2).all(|w| w[0].labeled_count < w[1].labeled_count));
        assert!(a.curve.points.iter().all(|p| p.f1.is_finite() && (0.0..=1.0).contains(&p.f1)));
        assert_eq!(a.curve.points[0].labeled_count, 0);
    }
}

#[test]
fn batch_passive_and_interactive_share_the_left_endpoint() {
    let ds = small_dataset(150);
    let task = &ds.tasks[0];
    let td = TaskData::new(task, ds.vectors.clone(), ds.space).unwrap();
    let config = |w| RunConfig::new(w).seed(9).budget(Budget::Count(10));
    let bp = run(&td, &config(Workflow::BatchPassive), &mut TruthOracle::new(task)).unwrap();
    let il = run(&td, &config(Workflow::Interactive), &mut TruthOracle::new(task)).unwrap();
    assert_eq!(bp.curve.points[0].f1, il.curve.points[0].f1);
}

#[test]
fn scores_stay_consistent_along_an_interactive_run() {
    let ds = small_dataset(120);
    let task = &ds.tasks[0];
    let mut state = PoolState::new(ds.vectors.clone(), random_model(ds.space, 4)).unwrap();
    let mut rng = verbacode::rng::stream(4, verbacode::rng::Stream::Selection);
    let mut seen = BTreeSet::new();
    assert!(state.is_consistent());
    for _ in 0..task.len() {
        let item = state.select(Policy::Uncertain, &mut rng).unwrap();
        assert!(seen.insert(item), "item {item} selected twice");
        state.learn(item, Label::from_bool(task.labels[item]), 1.0).unwrap();
        assert!(state.is_consistent());
        assert_eq!(state.validated_count(), seen.len());
    }
    assert_eq!(pooled_contingency(&state, task).f1(), 1.0);
}

#[test]
fn k_equal_to_pool_size_is_one_batch() {
    let ds = small_dataset(100);
    let task = &ds.tasks[0];
    let td = TaskData::new(task, ds.vectors.clone(), ds.space).unwrap();
    let config = RunConfig::new(Workflow::KbatchActive).k(100).checkpoints(Checkpoints::Percent);
    let out = run(&td, &config, &mut TruthOracle::new(task)).unwrap();
    let counts: Vec<usize> = out.curve.points.iter().map(|p| p.labeled_count).collect();
    // every item of the single batch is validated from frozen scores
    assert_eq!(counts.first(), Some(&0));
    assert_eq!(out.curve.points.last().unwrap().f1, 1.0);
    assert_eq!(out.oracle_calls, 100);
}

#[test]
fn warm_start_without_validations_scores_the_given_model() {
    let ds = small_dataset(150);
    let task = &ds.tasks[0];
    let td = TaskData::new(task, ds.vectors.clone(), ds.space).unwrap();
    let source = run(
        &td,
        &RunConfig::new(Workflow::Interactive).budget(Budget::Count(60)),
        &mut TruthOracle::new(task),
    )
    .unwrap()
    .model;

    let reloaded = LinearModel::from_json(&source.to_json().unwrap()).unwrap();
    let a = PoolState::new(ds.vectors.clone(), source.clone()).unwrap();
    let b = PoolState::new(ds.vectors.clone(), reloaded.clone()).unwrap();
    assert!(a.confidences().iter().zip(b.confidences()).all(|(x, y)| x.to_bits() == y.to_bits()));

    let config = RunConfig::new(Workflow::Interactive).budget(Budget::Count(5));
    let out = warm_start(&WarmSource::Models(vec![reloaded]), &td, &config, &mut TruthOracle::new(task)).unwrap();
    assert_eq!(out.curve.points[0].f1, pooled_contingency(&a, task).f1());
    assert_eq!(out.oracle_calls, 5);
}

#[test]
fn warm_start_rejects_a_foreign_feature_space() {
    let ds = small_dataset(80);
    let task = &ds.tasks[0];
    let td = TaskData::new(task, ds.vectors.clone(), ds.space).unwrap();
    let other = LinearModel::zeros(FeatureSpace::new(1 << 10, 0).unwrap());
    let config = RunConfig::new(Workflow::Interactive).budget(Budget::Count(5));
    assert!(warm_start(&WarmSource::Models(vec![other]), &td, &config, &mut TruthOracle::new(task)).is_err());
}

#[test]
fn random_policy_is_uniform() {
    let items = [(3, 0.1), (8, 0.5), (11, 0.9), (20, 0.99)];
    let view = PoolView::new(&items, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut counts = [0usize; 4];
    let draws = 10_000;
    for _ in 0..draws {
        let item = Policy::Random.select(&view, &mut rng).unwrap();
        counts[items.iter().position(|(i, _)| *i == item).unwrap()] += 1;
    }
    let expected = draws as f64 / 4.0;
    let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
    for c in counts {
        assert!((c as f64 - expected).abs() < 5.0 * sigma, "{counts:?}");
    }
}

#[test]
fn pa_update_cost_does_not_depend_on_dimension() {
    fn time_updates(dim: usize) -> f64 {
        let space = FeatureSpace::new(dim, 0).unwrap();
        let mut model = LinearModel::zeros(space);
        let stride = dim / 64;
        let xs: Vec<SparseVector> = (0..64)
            .map(|j| {
                SparseVector::from_pairs(dim, (0..50u32).map(|t| (((t as usize * stride + j) % dim) as u32, 0.1)))
                    .unwrap()
            })
            .collect();
        let mut best = f64::INFINITY;
        for _ in 0..5 {
            let start = Instant::now();
            for r in 0..20_000 {
                let y = Label::from_bool(r % 3 == 0);
                model.pa_update(&xs[r % xs.len()], y, 1.0).unwrap();
            }
            best = best.min(start.elapsed().as_secs_f64());
        }
        best
    }
    let small = time_updates(1 << 10);
    let large = time_updates(1 << 22);
    assert!(large < 5.0 * small + 1e-3, "2^10: {small:.4}s, 2^22: {large:.4}s");
}

#[test]
fn iteration_time_grows_with_the_pool() {
    let large = small_dataset(4000);
    let task = &large.tasks[0];
    let small_vectors: Arc<[SparseVector]> = large.vectors[..500].to_vec().into();
    let small_task = BinaryTask {
        labels: task.labels[..500].to_vec(),
        ..task.clone()
    };
    let config = RunConfig::new(Workflow::Interactive).budget(Budget::Count(100)).timed(true);
    let mean = |td: &TaskData<'_>, t: &BinaryTask| {
        let out = run(td, &config, &mut TruthOracle::new(t)).unwrap();
        out.iteration_seconds.iter().sum::<f64>() / out.iteration_seconds.len() as f64
    };
    let big = mean(&TaskData::new(task, large.vectors.clone(), large.space).unwrap(), task);
    let little = mean(&TaskData::new(&small_task, small_vectors, large.space).unwrap(), &small_task);
    assert!(big >= little, "4000 items: {big:e}s, 500 items: {little:e}s");
}

#[test]
fn run_command_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = topic_corpus(
        &TopicCorpusParams {
            n_docs: 120,
            ..TopicCorpusParams::default()
        },
        1,
    )
    .unwrap();
    corpus.write_jsonl(dir.path().join("news.jsonl")).unwrap();
    let config = |out: &str| {
        format!(
            r#"
name = "repro"
output_dir = "{out}"
trials = 2
seed = 7
dim = 4096
budget = 0.5

[[corpora]]
path = "news.jsonl"
codes = ["earn", "acq"]

[sweep]
workflows = ["batch_passive", "interactive", "kbatch_active"]
policies = ["random", "uncertain"]
k = [5]
"#
        )
    };
    std::fs::write(dir.path().join("a.toml"), config("out-a")).unwrap();
    std::fs::write(dir.path().join("b.toml"), config("out-b")).unwrap();
    let a = cmd_run(dir.path().join("a.toml")).unwrap();
    let b = cmd_run(dir.path().join("b.toml")).unwrap();
    assert_eq!(a.seeds, vec![7, 8]);

    let csvs = |m: &verbacode::experiment::Manifest| -> Vec<String> {
        m.artifacts.iter().filter(|p| p.ends_with(".csv")).cloned().collect()
    };
    let files = csvs(&a);
    assert_eq!(files, csvs(&b));
    assert!(files.iter().any(|f| f == "comparison.csv"));
    assert!(files.len() > 20);
    for f in files {
        let x = std::fs::read(dir.path().join("out-a").join(&f)).unwrap();
        let y = std::fs::read(dir.path().join("out-b").join(&f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    assert!(dir.path().join("out-a/manifest.json").exists());
    assert!(dir.path().join("out-a/repro.svg").exists());
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if path.file_stem().unwrap() == "reuse" {
            let c: verbacode::experiment::ReuseConfig = toml::from_str(&text).unwrap();
            c.validate().unwrap();
            assert_eq!(c.domains.len(), 4);
        } else {
            let m = verbacode::experiment::ExperimentMatrix::from_toml(&text)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!m.run_configs().is_empty());
        }
        seen += 1;
    }
    assert_eq!(seen, 4);
}
