//! Experiment matrices, the classifier-reuse study and the timing benchmark.
//!
//! Every run is fully determined by its task, its [`RunConfig`] and the trial
//! seed `seed + trial`. Runs are independent, so they are spread over a
//! worker pool; results are always collected in (code, trial) order, which
//! keeps aggregated curves identical whatever the number of workers.
//!
//! Paths inside a config file are resolved relative to the file's directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{decompose, load_corpus, BinaryTask, Corpus, Format};
use crate::engine::{
    run, warm_start, Budget, Checkpoints, RunConfig, RunOutput, TaskData, TruthOracle, WarmSource,
    Workflow,
};
use crate::error::{Error, Result};
use crate::eval::{average_curves, summarize_timings, write_comparison_csv, LearningCurve, TimingStats};
use crate::features::{FeatureSpace, SparseVector, Vectorizer, DEFAULT_DIM};
use crate::learners::{Label, TrainSet};
use crate::plot::{learning_curves_svg, XAxis};
use crate::policies::Policy;

/// A corpus with its binary tasks and tf-idf vectors.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub corpus: Corpus,
    pub tasks: Vec<BinaryTask>,
    pub vectors: Arc<[SparseVector]>,
    pub space: FeatureSpace,
}

impl Dataset {
    /// Fits a vectorizer on the corpus itself and decomposes its codeframe.
    pub fn new(corpus: Corpus, space: FeatureSpace) -> Result<Self> {
        let vectorizer = Vectorizer::fit(corpus.texts(), space)?;
        let vectors: Arc<[SparseVector]> = vectorizer.vectorize_all(corpus.texts()).into();
        let tasks = decompose(&corpus);
        Ok(Self {
            corpus,
            tasks,
            vectors,
            space,
        })
    }

    pub fn name(&self) -> &str {
        &self.corpus.name
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    pub fn task(&self, code: &str) -> Result<&BinaryTask> {
        self.tasks
            .iter()
            .find(|t| t.code == code)
            .ok_or_else(|| Error::UnknownCode(code.to_owned()))
    }

    pub fn task_data(&self, code: &str) -> Result<TaskData<'_>> {
        let task = self.task(code)?;
        TaskData::new(task, self.vectors.clone(), self.space)
    }

    /// All items of one task as training examples.
    pub fn train_set(&self, code: &str) -> Result<TrainSet> {
        let task = self.task(code)?;
        Ok(self
            .vectors
            .iter()
            .zip(&task.labels)
            .map(|(x, &l)| (x.clone(), Label::from_bool(l)))
            .collect())
    }
}

/// Seed of trial `t` of an experiment with base seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

/// Runs `trials` seeded trials of `config` on every task of `data`, in
/// parallel on the current rayon pool. Output order is (code, trial).
pub fn run_trials(data: &Dataset, config: &RunConfig, trials: usize, seed: u64) -> Result<Vec<RunOutput>> {
    let jobs: Vec<(usize, usize)> = (0..data.tasks.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    jobs.into_par_iter()
        .map(|(c, t)| {
            let task = &data.tasks[c];
            let td = TaskData::new(task, data.vectors.clone(), data.space)?;
            let config = config.clone().seed(trial_seed(seed, t));
            run(&td, &config, &mut TruthOracle::new(task))
        })
        .collect()
}

fn default_trials() -> usize {
    10
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

fn default_name() -> String {
    "experiment".into()
}

fn run_in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

/// A corpus entry of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub path: PathBuf,
    /// Keep a seeded random subset of this many verbatims.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
    /// Restrict the codeframe to these codes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codes: Option<Vec<String>>,
}

impl CorpusSpec {
    pub fn load(&self, base: &Path, space: FeatureSpace, seed: u64) -> Result<Dataset> {
        let mut corpus = load_corpus(base.join(&self.path), Format::Jsonl)?;
        if let Some(n) = self.subsample {
            corpus = corpus.subsample(n, seed)?;
        }
        if let Some(codes) = &self.codes {
            corpus = corpus.restrict_codes(codes)?;
        }
        Dataset::new(corpus, space)
    }
}

/// One system of a matrix: a workflow plus its parameters. Unset fields
/// fall back to the matrix-wide values and engine defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub workflow: Workflow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Budget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pa_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svm_c: Option<f64>,
}

impl SystemSpec {
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let policy = self.policy.unwrap_or(Policy::Uncertain);
        match self.workflow {
            Workflow::BatchPassive => "batch_passive".into(),
            Workflow::Interactive => format!("interactive-{policy}"),
            Workflow::KbatchActive => format!("kbatch_active-{policy}-k{}", self.k.unwrap_or(1)),
        }
    }

    fn config(&self, matrix: &ExperimentMatrix) -> RunConfig {
        let mut c = RunConfig::new(self.workflow)
            .budget(self.budget.unwrap_or(matrix.budget))
            .checkpoints(matrix.checkpoints.clone())
            .timed(matrix.record_timing);
        if let Some(p) = self.policy {
            c.policy = p;
        }
        if let Some(k) = self.k {
            c.k = k;
        }
        if let Some(v) = self.pa_c {
            c.pa_c = v;
        }
        if let Some(v) = self.svm_c {
            c.svm_c = v;
        }
        c
    }
}

/// Cartesian sweep over workflows, policies and k. Batch passive ignores
/// policy and k; interactive ignores k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub workflows: Vec<Workflow>,
    #[serde(default = "all_uncertain")]
    pub policies: Vec<Policy>,
    #[serde(default = "k_one")]
    pub k: Vec<usize>,
}

fn all_uncertain() -> Vec<Policy> {
    vec![Policy::Uncertain]
}

fn k_one() -> Vec<usize> {
    vec![1]
}

impl Sweep {
    pub fn expand(&self) -> Vec<SystemSpec> {
        let mut out = Vec::new();
        let spec = |workflow, policy, k| SystemSpec {
            label: None,
            workflow,
            policy,
            k,
            budget: None,
            pa_c: None,
            svm_c: None,
        };
        for &w in &self.workflows {
            match w {
                Workflow::BatchPassive => out.push(spec(w, None, None)),
                Workflow::Interactive => {
                    out.extend(self.policies.iter().map(|&p| spec(w, Some(p), None)))
                }
                Workflow::KbatchActive => {
                    for &p in &self.policies {
                        out.extend(self.k.iter().map(|&k| spec(w, Some(p), Some(k))));
                    }
                }
            }
        }
        out
    }
}

/// Config of `verbacode run`: systems x corpora x trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentMatrix {
    #[serde(default = "default_name")]
    pub name: String,
    pub output_dir: PathBuf,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub hash_seed: u32,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub checkpoints: Checkpoints,
    #[serde(default)]
    pub record_timing: bool,
    /// Worker threads; all cores when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub corpora: Vec<CorpusSpec>,
    #[serde(default)]
    pub systems: Vec<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl ExperimentMatrix {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = parse_toml(text, Path::new("<config>"))?;
        m.validate()?;
        Ok(m)
    }

    pub fn space(&self) -> Result<FeatureSpace> {
        FeatureSpace::new(self.dim, self.hash_seed)
    }

    /// Explicit systems followed by the sweep's.
    pub fn systems(&self) -> Vec<SystemSpec> {
        let mut out = self.systems.clone();
        if let Some(s) = &self.sweep {
            out.extend(s.expand());
        }
        out
    }

    pub fn run_configs(&self) -> Vec<(String, RunConfig)> {
        self.systems()
            .iter()
            .map(|s| (s.label(), s.config(self)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpora.is_empty() {
            return Err(Error::Config("no corpora given".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let configs = self.run_configs();
        if configs.is_empty() {
            return Err(Error::Config("no systems given (use [[systems]] or [sweep])".into()));
        }
        let mut labels: Vec<&str> = configs.iter().map(|(l, _)| l.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate system label `{}`", w[0])));
        }
        for (_, c) in &configs {
            c.validate()?;
        }
        self.space()?;
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|t| trial_seed(self.seed, t)).collect()
    }

    pub fn load_datasets(&self, base: &Path) -> Result<Vec<Dataset>> {
        let space = self.space()?;
        self.corpora.iter().map(|c| c.load(base, space, self.seed)).collect()
    }
}

/// Results of one system of a matrix.
#[derive(Debug, Clone)]
pub struct SystemResult {
    pub label: String,
    pub config: RunConfig,
    /// Per corpus: runs in (code, trial) order.
    pub runs: Vec<Vec<RunOutput>>,
    /// Per corpus average over codes and trials.
    pub per_corpus: Vec<LearningCurve>,
    /// Average over every run of every corpus (aligned by fraction).
    pub overall: LearningCurve,
}

/// Runs every system of the matrix on every dataset.
pub fn run_matrix(matrix: &ExperimentMatrix, datasets: &[Dataset]) -> Result<Vec<SystemResult>> {
    matrix.validate()?;
    run_in_pool(matrix.workers, || {
        matrix
            .run_configs()
            .into_iter()
            .map(|(label, config)| {
                log::info!("running {label}");
                let runs: Vec<Vec<RunOutput>> = datasets
                    .iter()
                    .map(|d| run_trials(d, &config, matrix.trials, matrix.seed))
                    .collect::<Result<_>>()?;
                let per_corpus: Vec<LearningCurve> = runs
                    .iter()
                    .map(|rs| average_curves(&curves_of(rs)))
                    .collect::<Result<_>>()?;
                let all: Vec<LearningCurve> = runs.iter().flat_map(|rs| curves_of(rs)).collect();
                let overall = average_curves(&all)?;
                Ok(SystemResult {
                    label,
                    config,
                    runs,
                    per_corpus,
                    overall,
                })
            })
            .collect()
    })?
}

fn curves_of(runs: &[RunOutput]) -> Vec<LearningCurve> {
    runs.iter().map(|r| r.curve.clone()).collect()
}

/// File-name safe form of a label.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

/// Identity of an input corpus in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub name: String,
    pub path: PathBuf,
    pub sha256: String,
    pub n_items: usize,
    pub codes: Vec<String>,
}

/// Record of how a set of artifacts was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub corpora: Vec<CorpusInfo>,
    /// Paths relative to the output directory, sorted.
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn corpus_info(base: &Path, path: &Path, data: &Dataset) -> Result<CorpusInfo> {
    let bytes = fs::read(base.join(path))?;
    Ok(CorpusInfo {
        name: data.name().to_owned(),
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
        n_items: data.len(),
        codes: data.corpus.codeframe.clone(),
    })
}

/// Collects artifact paths relative to an output directory.
struct Artifacts {
    root: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn new(root: PathBuf) -> Result<Self> {
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    fn path(&mut self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let rel = rel.as_ref();
        let full = self.root.join(rel);
        if let Some(p) = full.parent() {
            fs::create_dir_all(p)?;
        }
        self.written.push(rel.to_string_lossy().replace('\\', "/"));
        Ok(full)
    }

    fn finish(mut self) -> Vec<String> {
        self.written.sort();
        self.written
    }
}

/// Writes per-run CSV and JSON, aggregated CSVs, a comparison table and a
/// plot for matrix results; returns the artifact list.
pub fn write_matrix_artifacts(
    out_dir: &Path,
    name: &str,
    datasets: &[Dataset],
    results: &[SystemResult],
    trials: usize,
) -> Result<Vec<String>> {
    let mut art = Artifacts::new(out_dir.to_path_buf())?;
    for r in results {
        let sys = slug(&r.label);
        for (d, runs) in datasets.iter().zip(&r.runs) {
            for (i, run) in runs.iter().enumerate() {
                let (code, trial) = (&d.tasks[i / trials].code, i % trials);
                let stem = format!("runs/{sys}/{}/{}/trial-{trial}", slug(d.name()), slug(code));
                run.curve.write_csv(art.path(format!("{stem}.csv"))?)?;
                run.curve.write_json(art.path(format!("{stem}.json"))?)?;
            }
        }
        r.overall.write_csv(art.path(format!("curves/{sys}.csv"))?)?;
        if datasets.len() > 1 {
            for (d, c) in datasets.iter().zip(&r.per_corpus) {
                c.write_csv(art.path(format!("curves/{sys}.{}.csv", slug(d.name())))?)?;
            }
        }
    }
    let overall: Vec<(String, LearningCurve)> = results
        .iter()
        .map(|r| (r.label.clone(), r.overall.clone()))
        .collect();
    write_comparison_csv(art.path("comparison.csv")?, &overall)?;
    learning_curves_svg(art.path(format!("{}.svg", slug(name)))?, name, &overall, XAxis::Percent)?;
    Ok(art.finish())
}

/// `verbacode run`: loads the config, runs the matrix and writes every
/// artifact plus `manifest.json` into the output directory.
pub fn cmd_run(config_path: impl AsRef<Path>) -> Result<Manifest> {
    let path = config_path.as_ref();
    let text = fs::read_to_string(path)?;
    let matrix: ExperimentMatrix = parse_toml(&text, path)?;
    matrix.validate()?;
    let base = base_dir(path);
    let datasets = matrix.load_datasets(&base)?;
    let results = run_matrix(&matrix, &datasets)?;
    let out_dir = base.join(&matrix.output_dir);
    let artifacts = write_matrix_artifacts(&out_dir, &matrix.name, &datasets, &results, matrix.trials)?;
    let corpora = matrix
        .corpora
        .iter()
        .zip(&datasets)
        .map(|(c, d)| corpus_info(&base, &c.path, d))
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        command: "run".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(text.as_bytes()),
        config: serde_json::to_value(&matrix)?,
        seeds: matrix.seeds(),
        corpora,
        artifacts,
    };
    manifest.write(&out_dir)?;
    Ok(manifest)
}

fn default_reuse_budget() -> Budget {
    Budget::Count(500)
}

fn default_policy() -> Policy {
    Policy::Uncertain
}

fn default_c() -> f64 {
    1.0
}

fn default_epochs() -> usize {
    1
}

/// Config of `verbacode reuse`: each domain in turn is the target, the
/// others are sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReuseConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub output_dir: PathBuf,
    pub domains: Vec<PathBuf>,
    /// Code shared by all domains; the first code of the first domain when
    /// unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub hash_seed: u32,
    /// Target validations per run.
    #[serde(default = "default_reuse_budget")]
    pub budget: Budget,
    #[serde(default)]
    pub checkpoints: Checkpoints,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    #[serde(default = "default_c")]
    pub pa_c: f64,
    #[serde(default = "default_epochs")]
    pub source_epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ReuseConfig {
    pub fn new(output_dir: impl Into<PathBuf>, domains: Vec<PathBuf>) -> Self {
        Self {
            name: "reuse".into(),
            output_dir: output_dir.into(),
            domains,
            code: None,
            trials: default_trials(),
            seed: 0,
            dim: DEFAULT_DIM,
            hash_seed: 0,
            budget: default_reuse_budget(),
            checkpoints: Checkpoints::Default,
            policy: Policy::Uncertain,
            pa_c: 1.0,
            source_epochs: 1,
            workers: None,
        }
    }

    pub fn space(&self) -> Result<FeatureSpace> {
        FeatureSpace::new(self.dim, self.hash_seed)
    }

    pub fn run_config(&self) -> RunConfig {
        let mut c = RunConfig::new(Workflow::Interactive)
            .policy(self.policy)
            .budget(self.budget)
            .checkpoints(self.checkpoints.clone());
        c.pa_c = self.pa_c;
        c.source_epochs = self.source_epochs;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.domains.len() < 2 {
            return Err(Error::Config("reuse needs at least two domains".into()));
        }
        self.validate_params()
    }

    /// Checks everything except the domain paths.
    fn validate_params(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.space()?;
        self.run_config().validate()
    }
}

/// The curves of one target domain.
#[derive(Debug, Clone)]
pub struct ReuseCurves {
    pub target: String,
    pub target_only: LearningCurve,
    /// Mean over single-source runs.
    pub one_source: LearningCurve,
    /// Warm start from all other domains pooled; absent with two domains,
    /// where it would coincide with `one_source`.
    pub all_sources: Option<LearningCurve>,
}

impl ReuseCurves {
    pub fn labelled(&self, n_sources: usize) -> Vec<(String, LearningCurve)> {
        let mut out = vec![
            ("target only".to_owned(), self.target_only.clone()),
            ("1 source domain".to_owned(), self.one_source.clone()),
        ];
        if let Some(c) = &self.all_sources {
            out.push((format!("{n_sources} source domains"), c.clone()));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ReuseReport {
    pub code: String,
    pub per_target: Vec<ReuseCurves>,
    /// Average of the per-target curves.
    pub average: ReuseCurves,
}

#[derive(Debug, Clone, Copy)]
enum Start {
    Cold,
    Sources(usize, Option<usize>),
}

/// Runs the reuse study: for every target, `trials` runs of target-only,
/// single-source and all-source warm starts. Source models are PA passes
/// over all labelled items of the source domains, reshuffled per trial.
pub fn reuse_study(config: &ReuseConfig, domains: &[Dataset]) -> Result<ReuseReport> {
    config.validate_params()?;
    if domains.len() < 2 {
        return Err(Error::Config("reuse needs at least two domains".into()));
    }
    let code = match &config.code {
        Some(c) => c.clone(),
        None => domains[0]
            .corpus
            .codeframe
            .first()
            .cloned()
            .ok_or_else(|| Error::Config("first domain has no codes".into()))?,
    };
    for d in domains {
        d.space.check_compatible(&domains[0].space)?;
        d.task(&code)?;
    }
    let sets: Vec<TrainSet> = domains.iter().map(|d| d.train_set(&code)).collect::<Result<_>>()?;
    let base = config.run_config();
    let n = domains.len();

    let mut jobs: Vec<(usize, Start, usize)> = Vec::new();
    for target in 0..n {
        let sources: Vec<usize> = (0..n).filter(|&s| s != target).collect();
        let mut starts = vec![Start::Cold];
        starts.extend(sources.iter().map(|&s| Start::Sources(target, Some(s))));
        if sources.len() > 1 {
            starts.push(Start::Sources(target, None));
        }
        for s in starts {
            jobs.extend((0..config.trials).map(|t| (target, s, t)));
        }
    }

    let outputs: Vec<RunOutput> = run_in_pool(config.workers, || {
        jobs.par_iter()
            .map(|&(target, start, t)| {
                let d = &domains[target];
                let task = d.task(&code)?;
                let td = TaskData::new(task, d.vectors.clone(), d.space)?;
                let cfg = base.clone().seed(trial_seed(config.seed, t));
                let mut oracle = TruthOracle::new(task);
                match start {
                    Start::Cold => run(&td, &cfg, &mut oracle),
                    Start::Sources(target, only) => {
                        let chosen: Vec<TrainSet> = (0..n)
                            .filter(|&s| s != target && only.map_or(true, |o| o == s))
                            .map(|s| sets[s].clone())
                            .collect();
                        let source = WarmSource::Examples {
                            space: d.space,
                            sets: chosen,
                        };
                        warm_start(&source, &td, &cfg, &mut oracle)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut per_target = Vec::with_capacity(n);
    let mut cursor = 0;
    let mut take = |k: usize| -> Vec<LearningCurve> {
        let out = curves_of(&outputs[cursor..cursor + k]);
        cursor += k;
        out
    };
    let trials = config.trials;
    for d in domains {
        let target_only = average_curves(&take(trials))?;
        let one_source = average_curves(&take((n - 1) * trials))?;
        let all_sources = if n > 2 {
            Some(average_curves(&take(trials))?)
        } else {
            None
        };
        per_target.push(ReuseCurves {
            target: d.name().to_owned(),
            target_only,
            one_source,
            all_sources,
        });
    }
    let avg = |f: &dyn Fn(&ReuseCurves) -> LearningCurve| -> Result<LearningCurve> {
        average_curves(&per_target.iter().map(f).collect::<Vec<_>>())
    };
    let average = ReuseCurves {
        target: "average".into(),
        target_only: avg(&|c| c.target_only.clone())?,
        one_source: avg(&|c| c.one_source.clone())?,
        all_sources: if n > 2 {
            Some(avg(&|c| c.all_sources.clone().expect("n > 2"))?)
        } else {
            None
        },
    };
    Ok(ReuseReport {
        code,
        per_target,
        average,
    })
}

/// `verbacode reuse`: runs the study and writes one CSV per curve, one
/// comparison table and one figure per target, plus the cross-target
/// average and the manifest.
pub fn cmd_reuse(config_path: impl AsRef<Path>) -> Result<Manifest> {
    let path = config_path.as_ref();
    let text = fs::read_to_string(path)?;
    let config: ReuseConfig = parse_toml(&text, path)?;
    config.validate()?;
    let base = base_dir(path);
    let space = config.space()?;
    let domains: Vec<Dataset> = config
        .domains
        .iter()
        .map(|p| Dataset::new(load_corpus(base.join(p), Format::Jsonl)?, space))
        .collect::<Result<_>>()?;
    let report = reuse_study(&config, &domains)?;
    let out_dir = base.join(&config.output_dir);
    let mut art = Artifacts::new(out_dir.clone())?;
    let n_sources = domains.len() - 1;
    for curves in report.per_target.iter().chain(std::iter::once(&report.average)) {
        let t = slug(&curves.target);
        let labelled = curves.labelled(n_sources);
        for (label, c) in &labelled {
            c.write_csv(art.path(format!("{t}/{}.csv", slug(&label.replace(' ', "_"))))?)?;
        }
        write_comparison_csv(art.path(format!("{t}/comparison.csv"))?, &labelled)?;
        let title = format!("{} ({} target)", config.name, curves.target);
        learning_curves_svg(art.path(format!("{t}/{t}.svg"))?, &title, &labelled, XAxis::Count)?;
    }
    let corpora = config
        .domains
        .iter()
        .zip(&domains)
        .map(|(p, d)| corpus_info(&base, p, d))
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        command: "reuse".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(text.as_bytes()),
        config: serde_json::to_value(&config)?,
        seeds: (0..config.trials).map(|t| trial_seed(config.seed, t)).collect(),
        corpora,
        artifacts: art.finish(),
    };
    manifest.write(&out_dir)?;
    Ok(manifest)
}

/// Host description stored with benchmark results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub worker_threads: usize,
    pub version: String,
}

impl MachineInfo {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            worker_threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Timing of the interactive loop on one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub corpus: String,
    pub n_items: usize,
    pub codes: usize,
    pub trials: usize,
    pub budget: usize,
    #[serde(flatten)]
    pub timing: TimingStats,
    /// Mean pooled F1 at the end of the runs.
    pub final_f1: f64,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub row: BenchRow,
    pub curve: LearningCurve,
}

/// Times the interactive loop (uncertain policy unless given) for `trials`
/// runs per code, capped at `budget` validations. Runs are sequential so
/// that they do not compete for cores; only pool re-scoring fans out.
pub fn bench(data: &Dataset, trials: usize, budget: usize, policy: Policy, seed: u64) -> Result<BenchResult> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let budget = budget.min(data.len());
    let config = RunConfig::new(Workflow::Interactive)
        .policy(policy)
        .budget(Budget::Count(budget))
        .timed(true);
    let mut samples = Vec::new();
    let mut curves = Vec::new();
    for task in &data.tasks {
        let td = TaskData::new(task, data.vectors.clone(), data.space)?;
        for t in 0..trials {
            let cfg = config.clone().seed(trial_seed(seed, t));
            let out = run(&td, &cfg, &mut TruthOracle::new(task))?;
            samples.extend_from_slice(&out.iteration_seconds);
            curves.push(out.curve);
        }
    }
    let curve = average_curves(&curves)?;
    let final_f1 = curve.points.last().map_or(0.0, |p| p.f1);
    Ok(BenchResult {
        row: BenchRow {
            corpus: data.name().to_owned(),
            n_items: data.len(),
            codes: data.tasks.len(),
            trials,
            budget,
            timing: summarize_timings(&samples),
            final_f1,
        },
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub machine: MachineInfo,
    pub rows: Vec<BenchRow>,
}

/// `verbacode bench`: benchmarks every corpus and writes `bench.json`,
/// `bench.csv` and the timed curve of each corpus to `out_dir`.
pub fn cmd_bench(
    corpora: &[PathBuf],
    out_dir: &Path,
    trials: usize,
    budget: usize,
    space: FeatureSpace,
    seed: u64,
) -> Result<BenchReport> {
    let mut art = Artifacts::new(out_dir.to_path_buf())?;
    let mut rows = Vec::new();
    for p in corpora {
        let data = Dataset::new(load_corpus(p, Format::Jsonl)?, space)?;
        let res = bench(&data, trials, budget, Policy::Uncertain, seed)?;
        res.curve.write_csv(art.path(format!("curves/{}.csv", slug(data.name())))?)?;
        rows.push(res.row);
    }
    let report = BenchReport {
        machine: MachineInfo::current(),
        rows,
    };
    fs::write(art.path("bench.json")?, serde_json::to_string_pretty(&report)? + "\n")?;
    let mut w = csv::Writer::from_path(art.path("bench.csv")?)?;
    w.write_record([
        "corpus",
        "n_items",
        "codes",
        "trials",
        "budget",
        "max_seconds",
        "mean_seconds",
        "p99_seconds",
        "iterations",
        "final_f1",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.corpus.clone(),
            r.n_items.to_string(),
            r.codes.to_string(),
            r.trials.to_string(),
            r.budget.to_string(),
            r.timing.max_seconds.to_string(),
            r.timing.mean_seconds.to_string(),
            r.timing.p99_seconds.to_string(),
            r.timing.iterations.to_string(),
            r.final_f1.to_string(),
        ])?;
    }
    w.flush()?;
    art.finish();
    Ok(report)
}
