//! Labeled corpora and their decomposition into binary tasks.
//!
//! Corpora are read from JSON Lines, one verbatim per line:
//!
//! ```text
//! {"id": "r17", "text": "Who are you voting for?", "codes": ["Politics"]}
//! ```
//!
//! `id` must be unique, `codes` may be empty. The first line may instead
//! declare the codeframe, `{"codeframe": ["Politics", "Economy"]}`; without
//! it the codeframe is the set of codes in order of first use. Declared codes
//! that are never assigned are dropped at load time.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// One free-text answer with its (possibly empty) set of codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verbatim {
    pub id: String,
    pub text: String,
    pub codes: BTreeSet<String>,
}

impl Verbatim {
    pub fn new<I, S>(id: impl Into<String>, text: impl Into<String>, codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            text: text.into(),
            codes: codes.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Jsonl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub verbatims: Vec<Verbatim>,
    /// Codes in order of first appearance; every one has at least one positive.
    pub codeframe: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Header { codeframe: Vec<String> },
    Record(Record),
}

#[derive(Deserialize)]
struct Record {
    id: String,
    text: String,
    codes: Vec<String>,
}

/// Loads a corpus. The corpus is named after the file stem.
pub fn load_corpus(path: impl AsRef<Path>, format: Format) -> Result<Corpus> {
    let path = path.as_ref();
    let Format::Jsonl = format;
    let reader = BufReader::new(File::open(path)?);
    let mut verbatims = Vec::new();
    let mut declared = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_error = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        match serde_json::from_str::<Line>(&line) {
            Ok(Line::Record(r)) => verbatims.push(Verbatim::new(r.id, r.text, r.codes)),
            Ok(Line::Header { codeframe }) if declared.is_none() && verbatims.is_empty() => {
                declared = Some(codeframe)
            }
            Ok(Line::Header { .. }) => {
                return Err(parse_error("codeframe header must be the first line".into()))
            }
            Err(_) => {
                // Re-parse as a record to get a field-level message.
                let e = serde_json::from_str::<Record>(&line).err();
                let message = e.map_or_else(|| "malformed record".to_owned(), |e| e.to_string());
                return Err(parse_error(message));
            }
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_owned());
    match declared {
        Some(codes) => Corpus::with_codeframe(name, verbatims, &codes),
        None => Corpus::new(name, verbatims),
    }
}

/// The codeframe declared in the header line of a JSONL corpus, including
/// codes that have no instance yet (which [`load_corpus`] drops).
pub fn declared_codeframe(path: impl AsRef<Path>) -> Result<Option<Vec<String>>> {
    let reader = BufReader::new(File::open(path)?);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        return Ok(match serde_json::from_str::<Line>(&line) {
            Ok(Line::Header { codeframe }) => Some(codeframe),
            _ => None,
        });
    }
    Ok(None)
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and deriving the codeframe.
    pub fn new(name: impl Into<String>, verbatims: Vec<Verbatim>) -> Result<Self> {
        let name = name.into();
        if verbatims.is_empty() {
            return Err(Error::EmptyCorpus(name));
        }
        let mut seen = HashSet::with_capacity(verbatims.len());
        let mut codeframe = Vec::new();
        let mut known = HashSet::new();
        for v in &verbatims {
            if !seen.insert(v.id.as_str()) {
                return Err(Error::DuplicateId(v.id.clone()));
            }
            for code in &v.codes {
                if known.insert(code.as_str()) {
                    codeframe.push(code.clone());
                }
            }
        }
        Ok(Self {
            name,
            verbatims,
            codeframe,
        })
    }

    /// Builds a corpus against a declared codeframe. Declared codes with no
    /// instance are dropped with a warning; undeclared codes are an error.
    pub fn with_codeframe(
        name: impl Into<String>,
        verbatims: Vec<Verbatim>,
        declared: &[String],
    ) -> Result<Self> {
        let mut corpus = Self::new(name, verbatims)?;
        let used: HashSet<&str> = corpus.codeframe.iter().map(String::as_str).collect();
        let declared_set: HashSet<&str> = declared.iter().map(String::as_str).collect();
        if let Some(extra) = used.iter().find(|c| !declared_set.contains(**c)) {
            return Err(Error::UnknownCode((*extra).to_owned()));
        }
        let mut codeframe = Vec::with_capacity(declared.len());
        for code in declared {
            if used.contains(code.as_str()) {
                codeframe.push(code.clone());
            } else {
                log::warn!(
                    "{}: code `{code}` has no instances and is dropped",
                    corpus.name
                );
            }
        }
        corpus.codeframe = codeframe;
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.verbatims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verbatims.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.verbatims.iter().map(|v| v.text.as_str())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.verbatims.iter().position(|v| v.id == id)
    }

    /// Restricts the codeframe to `codes` (kept in the given order).
    pub fn restrict_codes(&self, codes: &[String]) -> Result<Self> {
        for code in codes {
            if !self.codeframe.contains(code) {
                return Err(Error::UnknownCode(code.clone()));
            }
        }
        let keep: HashSet<&str> = codes.iter().map(String::as_str).collect();
        let verbatims = self
            .verbatims
            .iter()
            .map(|v| Verbatim {
                codes: v
                    .codes
                    .iter()
                    .filter(|c| keep.contains(c.as_str()))
                    .cloned()
                    .collect(),
                ..v.clone()
            })
            .collect();
        Ok(Self {
            name: self.name.clone(),
            verbatims,
            codeframe: codes.to_vec(),
        })
    }

    /// Keeps a seeded random subset of `n` verbatims (file order preserved)
    /// and recomputes the codeframe.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Self> {
        if n >= self.len() {
            return Ok(self.clone());
        }
        let mut order = rng::permutation(self.len(), &mut rng::stream(seed, Stream::Subsample));
        order.truncate(n);
        order.sort_unstable();
        let verbatims = order.into_iter().map(|i| self.verbatims[i].clone()).collect();
        let sub = Self::new(self.name.clone(), verbatims)?;
        let codeframe = self
            .codeframe
            .iter()
            .filter(|c| sub.codeframe.contains(c))
            .cloned()
            .collect();
        Ok(Self { codeframe, ..sub })
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for v in &self.verbatims {
            serde_json::to_writer(&mut out, v)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One code's view of a corpus: `labels[i]` is true iff verbatim `i` carries
/// the code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTask {
    pub corpus: String,
    pub code: String,
    pub labels: Vec<bool>,
}

impl BinaryTask {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    /// Label as ±1.
    pub fn sign(&self, item: usize) -> f64 {
        if self.labels[item] {
            1.0
        } else {
            -1.0
        }
    }
}

/// One binary task per codeframe entry.
pub fn decompose(corpus: &Corpus) -> Vec<BinaryTask> {
    corpus
        .codeframe
        .iter()
        .map(|code| BinaryTask {
            corpus: corpus.name.clone(),
            code: code.clone(),
            labels: corpus
                .verbatims
                .iter()
                .map(|v| v.codes.contains(code))
                .collect(),
        })
        .collect()
}

/// Seeded shuffle of the task's item indices.
pub fn split(task: &BinaryTask, seed: u64) -> Vec<usize> {
    rng::permutation(task.len(), &mut rng::stream(seed, Stream::Shuffle))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".jsonl").tempfile().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn header_declared_code_without_instances_is_dropped() {
        let f = write(&[
            r#"{"codeframe":["A","B"]}"#,
            r#"{"id":"1","text":"coke","codes":["A"]}"#,
            r#"{"id":"2","text":"pepsi","codes":["A"]}"#,
            r#"{"id":"3","text":"water","codes":[]}"#,
        ]);
        let c = load_corpus(f.path(), Format::Jsonl).unwrap();
        assert_eq!(c.codeframe, vec!["A".to_string()]);
        assert_eq!(c.len(), 3);
        assert_eq!(
            declared_codeframe(f.path()).unwrap(),
            Some(vec!["A".to_string(), "B".to_string()])
        );
    }

    #[test]
    fn unused_declared_code_is_dropped() {
        let vs = vec![
            Verbatim::new("1", "coke", ["A"]),
            Verbatim::new("2", "pepsi", ["A"]),
            Verbatim::new("3", "water", Vec::<String>::new()),
        ];
        let c = Corpus::with_codeframe("t", vs, &["A".into(), "B".into()]).unwrap();
        assert_eq!(c.codeframe, vec!["A".to_string()]);
    }

    #[test]
    fn loads_jsonl_and_accepts_empty_codes() {
        let f = write(&[
            r#"{"id":"a","text":"Coke","codes":["A"]}"#,
            "",
            r#"{"id":"b","text":"","codes":[]}"#,
            r#"{"id":"c","text":"Pepsi!","codes":["A","C"]}"#,
        ]);
        let c = load_corpus(f.path(), Format::Jsonl).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.verbatims[1].codes.is_empty());
        assert_eq!(c.codeframe, vec!["A", "C"]);
        assert_eq!(c.verbatims[2].id, "c");
    }

    #[test]
    fn malformed_record_reports_line() {
        let f = write(&[
            r#"{"id":"a","text":"x","codes":[]}"#,
            r#"{"id":"b","text":"y"}"#,
        ]);
        match load_corpus(f.path(), Format::Jsonl) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_empty_are_errors() {
        let f = write(&[
            r#"{"id":"a","text":"x","codes":[]}"#,
            r#"{"id":"a","text":"y","codes":[]}"#,
        ]);
        assert!(matches!(
            load_corpus(f.path(), Format::Jsonl),
            Err(Error::DuplicateId(id)) if id == "a"
        ));
        let f = write(&[]);
        assert!(matches!(
            load_corpus(f.path(), Format::Jsonl),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn decompose_one_task_per_code() {
        let c = Corpus::new(
            "t",
            vec![
                Verbatim::new("1", "a", ["A", "B"]),
                Verbatim::new("2", "b", ["C"]),
                Verbatim::new("3", "c", Vec::<String>::new()),
            ],
        )
        .unwrap();
        let tasks = decompose(&c);
        assert_eq!(tasks.len(), 3);
        assert_eq!(tasks[0].labels, vec![true, false, false]);
        assert_eq!(tasks[2].labels, vec![false, true, false]);
    }

    #[test]
    fn single_code_corpus_has_one_task() {
        // "Dislike" is the non-assignment of "Like".
        let c = Corpus::new(
            "anes",
            vec![
                Verbatim::new("1", "honest man", ["Like"]),
                Verbatim::new("2", "liar", Vec::<String>::new()),
            ],
        )
        .unwrap();
        let tasks = decompose(&c);
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].negatives(), 1);
    }

    #[test]
    fn split_is_deterministic() {
        let task = BinaryTask {
            corpus: "t".into(),
            code: "A".into(),
            labels: vec![false; 100],
        };
        assert_eq!(split(&task, 0), split(&task, 0));
        assert_ne!(split(&task, 0), split(&task, 1));
        let one = BinaryTask {
            labels: vec![true],
            ..task
        };
        assert_eq!(split(&one, 42), vec![0]);
    }

    #[test]
    fn subsample_keeps_order_and_recomputes_codeframe() {
        let vs: Vec<_> = (0..20)
            .map(|i| Verbatim::new(i.to_string(), "x", if i == 0 { vec!["rare"] } else { vec!["common"] }))
            .collect();
        let c = Corpus::new("t", vs).unwrap();
        let s = c.subsample(10, 1).unwrap();
        assert_eq!(s.len(), 10);
        let ids: Vec<usize> = s.verbatims.iter().map(|v| v.id.parse().unwrap()).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        for code in &s.codeframe {
            assert!(s.verbatims.iter().any(|v| v.codes.contains(code)));
        }
    }
}
