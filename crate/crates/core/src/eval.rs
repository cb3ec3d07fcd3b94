//! Effectiveness and timing measures.
//!
//! Accuracy is F1 over the whole pool: validated items count as coded
//! correctly, unvalidated ones are judged by their current autocode.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryTask;
use crate::engine::PoolState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Contingency {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Adds one judgement: `system` is the assigned decision, `truth` the
    /// coder's.
    pub fn record(&mut self, system: bool, truth: bool) {
        match (system, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn f1(&self) -> f64 {
        f1(self)
    }

    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }
}

/// `2TP / (2TP + FP + FN)`, and exactly 1 when `TP = FP = FN = 0`.
pub fn f1(c: &Contingency) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

/// Contingency over all items of the pool.
pub fn pooled_contingency(state: &PoolState, truth: &BinaryTask) -> Contingency {
    let mut c = Contingency::default();
    for (i, &t) in truth.labels.iter().enumerate() {
        let system = match state.status(i) {
            Some(label) => label.is_positive(),
            None => state.autocode(i),
        };
        c.record(system, t);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub labeled_count: usize,
    pub f1: f64,
    pub iter_seconds: f64,
}

/// F1 as a function of the number of validated items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    /// Identifies what the curve measures, e.g. `reuters/earn`; curves with
    /// the same key are trials of the same task.
    pub key: String,
    /// Pool size the counts refer to.
    pub n_items: usize,
    pub trials: usize,
    pub codes: usize,
    pub points: Vec<CurvePoint>,
    /// Slowest single iteration behind this curve (0 when not timed).
    pub max_iter_seconds: f64,
}

impl LearningCurve {
    pub fn new(key: impl Into<String>, n_items: usize) -> Self {
        Self {
            key: key.into(),
            n_items,
            trials: 1,
            codes: 1,
            points: Vec::new(),
            max_iter_seconds: 0.0,
        }
    }

    pub fn push(&mut self, point: CurvePoint) {
        debug_assert!(self
            .points
            .last()
            .map_or(true, |p| p.labeled_count < point.labeled_count));
        self.max_iter_seconds = self.max_iter_seconds.max(point.iter_seconds);
        self.points.push(point);
    }

    pub fn runs(&self) -> usize {
        self.trials * self.codes
    }

    pub fn fraction(&self, p: &CurvePoint) -> f64 {
        p.labeled_count as f64 / self.n_items as f64
    }

    pub fn at(&self, labeled_count: usize) -> Option<&CurvePoint> {
        self.points
            .binary_search_by_key(&labeled_count, |p| p.labeled_count)
            .ok()
            .map(|i| &self.points[i])
    }

    /// F1 at fraction `x` of the pool, interpolating linearly between
    /// recorded points.
    pub fn f1_at_fraction(&self, x: f64) -> Option<f64> {
        self.interpolate(x).map(|p| p.0)
    }

    fn interpolate(&self, x: f64) -> Option<(f64, f64)> {
        let eps = 1e-12;
        let fr = |p: &CurvePoint| self.fraction(p);
        let first = self.points.first()?;
        let last = self.points.last()?;
        if x < fr(first) - eps || x > fr(last) + eps {
            return None;
        }
        let hi = self.points.partition_point(|p| fr(p) < x - eps);
        let hi = hi.min(self.points.len() - 1);
        let b = &self.points[hi];
        if (fr(b) - x).abs() <= eps || hi == 0 {
            return Some((b.f1, b.iter_seconds));
        }
        let a = &self.points[hi - 1];
        let t = (x - fr(a)) / (fr(b) - fr(a));
        Some((
            a.f1 + t * (b.f1 - a.f1),
            a.iter_seconds + t * (b.iter_seconds - a.iter_seconds),
        ))
    }

    /// Writes `labeled_count,f1,iter_seconds`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(["labeled_count", "f1", "iter_seconds"])?;
        for p in &self.points {
            w.write_record([
                p.labeled_count.to_string(),
                p.f1.to_string(),
                p.iter_seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, key: &str, n_items: usize) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut curve = Self::new(key, n_items);
        for rec in r.deserialize() {
            let p: CurvePoint = rec?;
            curve.push(p);
        }
        Ok(curve)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.flush()?;
        Ok(())
    }
}

/// Flat mean over curves, pointwise in F1 and iteration time.
///
/// Curves sharing a grid of labeled counts are averaged point by point.
/// Otherwise (pools of different sizes) every curve is resampled onto the
/// fraction grid of the first curve by linear interpolation; that fails if a
/// fraction lies outside another curve's range.
pub fn average_curves(curves: &[LearningCurve]) -> Result<LearningCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::CurveMismatch("no curves to average".into()))?;
    let n = curves.len() as f64;
    let same_grid = curves.iter().all(|c| {
        c.n_items == first.n_items
            && c.points.len() == first.points.len()
            && c.points
                .iter()
                .zip(&first.points)
                .all(|(a, b)| a.labeled_count == b.labeled_count)
    });

    let mut out = LearningCurve::new(aggregate_key(curves), first.n_items);
    for (j, p) in first.points.iter().enumerate() {
        let (f1_sum, t_sum) = if same_grid {
            curves.iter().fold((0.0, 0.0), |(f, t), c| {
                (f + c.points[j].f1, t + c.points[j].iter_seconds)
            })
        } else {
            let x = first.fraction(p);
            let mut acc = (0.0, 0.0);
            for c in curves {
                let (f, t) = c.interpolate(x).ok_or_else(|| {
                    Error::CurveMismatch(format!(
                        "fraction {x:.4} outside the range of curve `{}`",
                        c.key
                    ))
                })?;
                acc.0 += f;
                acc.1 += t;
            }
            acc
        };
        out.points.push(CurvePoint {
            labeled_count: p.labeled_count,
            f1: f1_sum / n,
            iter_seconds: t_sum / n,
        });
    }
    let (trials, codes) = run_counts(curves);
    out.trials = trials;
    out.codes = codes;
    out.max_iter_seconds = curves.iter().map(|c| c.max_iter_seconds).fold(0.0, f64::max);
    Ok(out)
}

fn aggregate_key(curves: &[LearningCurve]) -> String {
    let first = &curves[0].key;
    if curves.iter().all(|c| &c.key == first) {
        return first.clone();
    }
    // common `corpus/` prefix if there is one
    let prefix = first.split('/').next().unwrap_or_default();
    if curves
        .iter()
        .all(|c| c.key.split('/').next() == Some(prefix))
    {
        format!("{prefix}/*")
    } else {
        "*".to_owned()
    }
}

/// Codes = sum of `codes` over distinct keys; trials = runs / codes.
fn run_counts(curves: &[LearningCurve]) -> (usize, usize) {
    let mut by_key: BTreeMap<&str, usize> = BTreeMap::new();
    for c in curves {
        by_key.entry(c.key.as_str()).or_insert(c.codes);
    }
    let codes: usize = by_key.values().sum::<usize>().max(1);
    let runs: usize = curves.iter().map(LearningCurve::runs).sum();
    (runs / codes, codes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub max_seconds: f64,
    pub mean_seconds: f64,
    pub p99_seconds: f64,
    pub iterations: usize,
}

/// Maximum iteration time over all curves.
pub fn timing_stats(curves: &[LearningCurve]) -> f64 {
    curves.iter().map(|c| c.max_iter_seconds).fold(0.0, f64::max)
}

/// Summary over raw per-iteration timings.
pub fn summarize_timings(samples: &[f64]) -> TimingStats {
    if samples.is_empty() {
        return TimingStats {
            max_seconds: 0.0,
            mean_seconds: 0.0,
            p99_seconds: 0.0,
            iterations: 0,
        };
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.99 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    TimingStats {
        max_seconds: *sorted.last().unwrap(),
        mean_seconds: sorted.iter().sum::<f64>() / sorted.len() as f64,
        p99_seconds: sorted[rank - 1],
        iterations: sorted.len(),
    }
}

/// Writes several curves side by side on the grid of the first one:
/// `labeled_count,fraction,<name1>,<name2>,...`; missing points stay empty.
pub fn write_comparison_csv(path: impl AsRef<Path>, curves: &[(String, LearningCurve)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let Some((_, first)) = curves.first() else {
        return Ok(());
    };
    write!(out, "labeled_count,fraction")?;
    for (name, _) in curves {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for p in &first.points {
        write!(out, "{},{}", p.labeled_count, first.fraction(p))?;
        for (_, c) in curves {
            match c.at(p.labeled_count) {
                Some(q) => write!(out, ",{}", q.f1)?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(tp: usize, fp: usize, fn_: usize, tn: usize) -> Contingency {
        Contingency { tp, fp, fn_, tn }
    }

    fn curve(key: &str, n: usize, pts: &[(usize, f64)]) -> LearningCurve {
        let mut cv = LearningCurve::new(key, n);
        for &(x, f) in pts {
            cv.push(CurvePoint {
                labeled_count: x,
                f1: f,
                iter_seconds: 0.0,
            });
        }
        cv
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1(&c(0, 0, 0, 7)), 1.0);
        assert!((f1(&c(5, 3, 2, 0)) - 10.0 / 15.0).abs() < 1e-12);
        assert_eq!(f1(&c(0, 1, 0, 0)), 0.0);
    }

    #[test]
    fn average_of_two_points() {
        let a = curve("t/a", 10, &[(0, 0.2), (10, 1.0)]);
        let b = curve("t/b", 10, &[(0, 0.4), (10, 1.0)]);
        let avg = average_curves(&[a.clone(), b]).unwrap();
        assert!((avg.points[0].f1 - 0.3).abs() < 1e-15);
        assert_eq!(avg.codes, 2);
        assert_eq!(avg.trials, 1);
        assert_eq!(avg.key, "t/*");
        let same = average_curves(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(same.points, a.points);
        assert_eq!(same.trials, 2);
    }

    #[test]
    fn hundred_runs_make_ten_by_ten() {
        let mut curves = Vec::new();
        for code in 0..10 {
            for _ in 0..10 {
                curves.push(curve(&format!("r/{code}"), 4, &[(0, 0.5), (4, 1.0)]));
            }
        }
        let avg = average_curves(&curves).unwrap();
        assert_eq!((avg.trials, avg.codes), (10, 10));
    }

    #[test]
    fn fraction_alignment() {
        let a = curve("x/a", 10, &[(0, 0.0), (5, 0.5), (10, 1.0)]);
        let b = curve("y/b", 20, &[(0, 0.2), (20, 1.0)]);
        let avg = average_curves(&[a, b]).unwrap();
        // b at fraction 0.5 interpolates to 0.6
        assert!((avg.points[1].f1 - 0.55).abs() < 1e-12);
        let short = curve("z/c", 20, &[(0, 0.2), (4, 0.3)]);
        let a = curve("x/a", 10, &[(0, 0.0), (5, 0.5), (10, 1.0)]);
        assert!(matches!(average_curves(&[a, short]), Err(Error::CurveMismatch(_))));
    }

    #[test]
    fn timing_summary() {
        let s = summarize_timings(&[0.01, 0.03, 0.02]);
        assert_eq!(s.max_seconds, 0.03);
        assert!((s.mean_seconds - 0.02).abs() < 1e-15);
        assert_eq!(s.iterations, 3);
        let mut a = curve("t/a", 4, &[(0, 0.1)]);
        a.max_iter_seconds = 0.05;
        let mut b = curve("t/a", 4, &[(0, 0.1)]);
        b.max_iter_seconds = 0.09;
        assert_eq!(timing_stats(&[a, b]), 0.09);
    }
}
