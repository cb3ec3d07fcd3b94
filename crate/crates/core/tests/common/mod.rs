//! Helpers shared by the integration test targets: straight-from-formula
//! reference learners and the data sources used by the larger checks.

#![allow(dead_code)]

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use verbacode::corpus::{load_corpus, Format};
use verbacode::experiment::Dataset;
use verbacode::features::{FeatureSpace, SparseVector};
use verbacode::learners::{dual_objective, svm_train, Label, LinearModel, SvmParams};
use verbacode::synth::{sentiment_domains, topic_corpus, SentimentParams, TopicCorpusParams};

/// Dense PA-I step written directly from the update rule.
pub fn reference_pa(w: &[f64], b: f64, x: &[f64], y: f64, c: f64) -> (Vec<f64>, f64) {
    let mut score = b;
    for i in 0..w.len() {
        score += w[i] * x[i];
    }
    let loss = (1.0 - y * score).max(0.0);
    if loss == 0.0 {
        return (w.to_vec(), b);
    }
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let tau = (loss / (sq + 1.0)).min(c);
    let w2 = w.iter().zip(x).map(|(wi, xi)| wi + tau * y * xi).collect();
    (w2, b + tau * y)
}

fn hinge(w: &[f64], b: f64, x: &[f64], y: f64) -> f64 {
    let s: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
    (1.0 - y * s).max(0.0)
}

pub struct SuiteResult {
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

/// 1,000 random (model, example, C) triples: engine PA vs the reference,
/// plus the no-regress and passive-branch invariants.
pub fn pa_oracle_suite() -> SuiteResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    let mut passive = 0;
    for case in 0..1000 {
        let d = rng.gen_range(1..=12);
        let space = FeatureSpace::new(16, 0).unwrap();
        let scale = if case % 4 == 0 { 5.0 } else { 1.0 };
        let w: Vec<f64> = (0..16)
            .map(|i| if i < d { rng.gen_range(-scale..scale) } else { 0.0 })
            .collect();
        let b = rng.gen_range(-1.0..1.0);
        let x: Vec<f64> = (0..16)
            .map(|i| if i < d && rng.gen_bool(0.7) { rng.gen_range(-2.0..2.0) } else { 0.0 })
            .collect();
        let y = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let c = [0.01, 0.1, 1.0, 10.0][rng.gen_range(0..4)];

        let mut model = LinearModel::zeros(space);
        model.w.copy_from_slice(&w);
        model.b = b;
        let before = model.clone();
        let xs = SparseVector::from_dense(&x);
        let step = model.pa_update(&xs, Label::from_bool(y > 0.0), c).unwrap();
        let (rw, rb) = reference_pa(&w, b, &x, y, c);

        let err = model
            .w
            .iter()
            .zip(&rw)
            .map(|(a, b)| (a - b).abs())
            .fold((model.b - rb).abs(), f64::max);
        worst = worst.max(err);
        if err > 1e-12 {
            failures.push(format!("case {case}: max deviation {err:e}"));
        }
        let l0 = hinge(&w, b, &x, y);
        if l0 > 0.0 {
            let l1 = hinge(&model.w, model.b, &x, y);
            if !(l1 < l0) {
                failures.push(format!("case {case}: loss {l0} -> {l1} did not decrease"));
            }
        } else {
            passive += 1;
            let same = model.b.to_bits() == before.b.to_bits()
                && model.w.iter().zip(&before.w).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same || step.tau != 0.0 {
                failures.push(format!("case {case}: passive step changed the model"));
            }
        }
    }
    SuiteResult {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("1000 triples, max deviation {worst:.1e}, {passive} passive")
        } else {
            failures[..failures.len().min(5)].join("; ")
        },
        elapsed: start.elapsed(),
    }
}

/// Dense Gram matrix of the bias-augmented examples times the labels.
fn signed_gram(xs: &[Vec<f64>], ys: &[f64]) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| a * b).sum::<f64>() + 1.0;
            q[i][j] = ys[i] * ys[j] * dot;
        }
    }
    q
}

fn reference_objective(q: &[Vec<f64>], a: &[f64]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * q[i][j] * a[j];
        }
    }
    0.5 * quad - a.iter().sum::<f64>()
}

/// Minimum of `½ aᵀQa − Σa` over the box `[0, C]ⁿ` by accelerated projected
/// gradient (FISTA with restarts), run far past the engine's tolerance.
pub fn reference_svm_dual(xs: &[Vec<f64>], ys: &[f64], c: f64) -> f64 {
    let n = xs.len();
    let q = signed_gram(xs, ys);
    // Lipschitz constant: largest eigenvalue bound via the max row sum.
    let lip = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(1e-12, f64::max);
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * a[j]).sum::<f64>() - 1.0)
            .collect()
    };
    let project = |v: f64| v.clamp(0.0, c);
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0_f64;
    let mut best = reference_objective(&q, &a);
    for _ in 0..200_000 {
        let g = grad(&z);
        let next: Vec<f64> = (0..n).map(|i| project(z[i] - g[i] / lip)).collect();
        let f = reference_objective(&q, &next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if f > best {
            // restart momentum
            z = a.clone();
            t = 1.0;
            continue;
        }
        let momentum = (t - 1.0) / t_next;
        z = (0..n).map(|i| next[i] + momentum * (next[i] - a[i])).collect();
        let gain = best - f;
        a = next;
        best = f;
        t = t_next;
        if gain < 1e-15 * best.abs().max(1.0) {
            // check projected-gradient optimality
            let g = grad(&a);
            let pg = (0..n)
                .map(|i| {
                    if a[i] <= 0.0 {
                        g[i].min(0.0).abs()
                    } else if a[i] >= c {
                        g[i].max(0.0).abs()
                    } else {
                        g[i].abs()
                    }
                })
                .fold(0.0, f64::max);
            if pg < 1e-9 {
                break;
            }
        }
    }
    best
}

/// 50 seeded tasks of at most 30 points in at most 10 dimensions: engine
/// dual objective vs the reference optimum, and per-epoch monotonicity.
pub fn svm_oracle_suite() -> SuiteResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for case in 0..50 {
        let n: usize = rng.gen_range(2..=30);
        let d: usize = rng.gen_range(1..=10);
        let c = [0.1, 1.0, 10.0][case % 3];
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| if rng.gen_bool(0.8) { rng.gen_range(-1.0..1.0) } else { 0.0 })
                    .collect()
            })
            .collect();
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let noisy = case % 2 == 0;
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                let s: f64 = x.iter().zip(&dir).map(|(a, b)| a * b).sum();
                let flip = noisy && rng.gen_bool(0.15);
                if (s >= 0.0) != flip { 1.0 } else { -1.0 }
            })
            .collect();
        let space = FeatureSpace::new(d.next_power_of_two(), 0).unwrap();
        let vecs: Vec<SparseVector> = xs
            .iter()
            .map(|x| {
                let mut padded = x.clone();
                padded.resize(space.dim, 0.0);
                SparseVector::from_dense(&padded)
            })
            .collect();
        let examples: Vec<(&SparseVector, Label)> =
            vecs.iter().zip(&ys).map(|(v, &y)| (v, Label::from_bool(y > 0.0))).collect();
        let params = SvmParams {
            c,
            seed: case as u64,
            ..SvmParams::default()
        };
        let fit = svm_train(&examples, space, params).unwrap();
        let reference = reference_svm_dual(&xs, &ys, c);
        let engine = dual_objective(&examples, &fit.alpha, space.dim);
        let rel = (engine - reference).abs() / reference.abs().max(1e-12);
        worst = worst.max(rel);
        if rel > 1e-3 {
            failures.push(format!("case {case}: engine {engine} vs reference {reference} (rel {rel:.1e})"));
        }
        if let Some(w) = fit.objective_trace.windows(2).find(|w| w[1] > w[0] + 1e-12) {
            failures.push(format!("case {case}: objective rose {} -> {}", w[0], w[1]));
        }
    }
    SuiteResult {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("50 tasks, max relative gap {worst:.1e}")
        } else {
            failures[..failures.len().min(5)].join("; ")
        },
        elapsed: start.elapsed(),
    }
}

/// Where the larger checks get their corpora from.
pub struct Source<T> {
    pub data: T,
    pub origin: String,
}

pub const SPACE_DIM: usize = 1 << 18;

pub fn space() -> FeatureSpace {
    FeatureSpace::new(SPACE_DIM, 0).unwrap()
}

/// Newswire corpus: the JSONL file named by `VERBACODE_REUTERS` when set,
/// otherwise the seeded stand-in.
pub fn newswire() -> Source<Dataset> {
    match std::env::var_os("VERBACODE_REUTERS") {
        Some(p) => {
            let c = load_corpus(&p, Format::Jsonl).expect("VERBACODE_REUTERS corpus loads");
            Source {
                origin: format!("{} ({} docs)", PathBuf::from(p).display(), c.len()),
                data: Dataset::new(c, space()).unwrap(),
            }
        }
        None => {
            let c = topic_corpus(&TopicCorpusParams::default(), 0).unwrap();
            Source {
                origin: format!("synthetic newswire stand-in ({} docs, seed 0)", c.len()),
                data: Dataset::new(c, space()).unwrap(),
            }
        }
    }
}

/// Four sentiment domains: `VERBACODE_MDS_DIR/*.jsonl` (sorted) when set,
/// otherwise the seeded stand-ins.
pub fn sentiment() -> Source<Vec<Dataset>> {
    match std::env::var_os("VERBACODE_MDS_DIR") {
        Some(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
                .expect("VERBACODE_MDS_DIR readable")
                .map(|e| e.unwrap().path())
                .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
                .collect();
            paths.sort();
            let data: Vec<Dataset> = paths
                .iter()
                .map(|p| Dataset::new(load_corpus(p, Format::Jsonl).unwrap(), space()).unwrap())
                .collect();
            Source {
                origin: format!("{} ({} domains)", PathBuf::from(dir).display(), data.len()),
                data,
            }
        }
        None => {
            let cs = sentiment_domains(&SentimentParams::default(), 0).unwrap();
            Source {
                origin: format!("synthetic sentiment stand-in ({} domains x {} docs, seed 0)", cs.len(), cs[0].len()),
                data: cs.into_iter().map(|c| Dataset::new(c, space()).unwrap()).collect(),
            }
        }
    }
}
