//! Converters from public raw corpus layouts to [`Corpus`].
//!
//! * [`reuters_nltk`] reads the NLTK `reuters` directory (ModApte split:
//!   `cats.txt` plus `training/` and `test/` document files) and keeps the
//!   `top` most frequent categories as the codeframe. Every document is kept,
//!   including those carrying none of the retained codes.
//! * [`mds_domain`] reads one domain directory of the multi-domain sentiment
//!   dataset (`positive.review`, `negative.review`) into a corpus with the
//!   single code [`crate::synth::POSITIVE`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::corpus::{Corpus, Verbatim};
use crate::error::{Error, Result};
use crate::synth::POSITIVE;

fn read_lossy(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::Io(io_context(path, e)))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn io_context(path: &Path, e: std::io::Error) -> std::io::Error {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

/// Parses `cats.txt`: `training/123 earn acq` per line.
fn parse_cats(text: &str, path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(doc) = parts.next() else { continue };
        if !doc.contains('/') {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected `split/id`, got `{doc}`"),
            });
        }
        out.push((doc.to_owned(), parts.map(str::to_owned).collect()));
    }
    Ok(out)
}

/// Reuters-21578 from the NLTK directory layout, restricted to the `top`
/// most frequent categories (ties broken by name).
pub fn reuters_nltk(dir: impl AsRef<Path>, top: usize) -> Result<Corpus> {
    let dir = dir.as_ref();
    let cats_path = dir.join("cats.txt");
    let docs = parse_cats(&read_lossy(&cats_path)?, &cats_path)?;

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, cats) in &docs {
        for c in cats {
            *counts.entry(c).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let codeframe: Vec<String> = ranked.iter().take(top).map(|(c, _)| c.to_string()).collect();
    let keep: BTreeSet<&str> = codeframe.iter().map(String::as_str).collect();

    let mut verbatims = Vec::with_capacity(docs.len());
    for (doc, cats) in &docs {
        let text = read_lossy(&dir.join(doc))?;
        let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
        let codes = cats.iter().filter(|c| keep.contains(c.as_str()));
        verbatims.push(Verbatim::new(doc.clone(), text, codes));
    }
    Corpus::with_codeframe(format!("reuters{top}"), verbatims, &codeframe)
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

/// Contents of every `<tag>...</tag>` element, in order.
fn elements<'a>(text: &'a str, tag: &str) -> Vec<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find(&open) {
        let body = &rest[start + open.len()..];
        let Some(end) = body.find(&close) else { break };
        out.push(&body[..end]);
        rest = &body[end + close.len()..];
    }
    out
}

/// Review texts of one MDS `.review` file (title and body joined).
pub fn parse_reviews(text: &str) -> Vec<String> {
    elements(text, "review")
        .into_iter()
        .map(|review| {
            let title = elements(review, "title").first().map(|s| s.trim()).unwrap_or("");
            let body = elements(review, "review_text").first().map(|s| s.trim()).unwrap_or("");
            let joined = if title.is_empty() {
                body.to_owned()
            } else {
                format!("{title}. {body}")
            };
            unescape(&joined.split_whitespace().collect::<Vec<_>>().join(" "))
        })
        .collect()
}

/// One MDS domain directory; the corpus is named after the directory.
pub fn mds_domain(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "domain".into());
    let mut verbatims = Vec::new();
    for (file, positive) in [("positive.review", true), ("negative.review", false)] {
        let reviews = parse_reviews(&read_lossy(&dir.join(file))?);
        let tag = if positive { "pos" } else { "neg" };
        for (i, text) in reviews.into_iter().enumerate() {
            let codes: Vec<&str> = if positive { vec![POSITIVE] } else { vec![] };
            verbatims.push(Verbatim::new(format!("{name}-{tag}-{i}"), text, codes));
        }
    }
    Corpus::with_codeframe(name, verbatims, &[POSITIVE.to_owned()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reuters_layout() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::create_dir_all(root.join("training")).unwrap();
        fs::create_dir_all(root.join("test")).unwrap();
        fs::write(
            root.join("cats.txt"),
            "training/1 earn\ntraining/2 acq earn\ntest/3 cocoa\ntest/4 acq\n",
        )
        .unwrap();
        for (f, t) in [
            ("training/1", "PROFIT UP\n  net rose"),
            ("training/2", "deal"),
            ("test/3", "cocoa prices"),
            ("test/4", "merger"),
        ] {
            fs::write(root.join(f), t).unwrap();
        }
        let c = reuters_nltk(root, 2).unwrap();
        assert_eq!(c.name, "reuters2");
        assert_eq!(c.codeframe, vec!["acq", "earn"]);
        assert_eq!(c.len(), 4);
        assert_eq!(c.verbatims[0].text, "PROFIT UP net rose");
        assert!(c.verbatims[2].codes.is_empty());
    }

    #[test]
    fn cats_without_split_is_a_parse_error() {
        let err = parse_cats("1 earn\n", Path::new("cats.txt")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn mds_reviews() {
        let raw = "<review>\n<rating>\n5.0\n</rating>\n<title>\nGreat &amp; cheap\n</title>\n\
                   <review_text>\nWorks\nwell.\n</review_text>\n</review>\n\
                   <review>\n<review_text>\nNo title here\n</review_text>\n</review>\n";
        assert_eq!(
            parse_reviews(raw),
            vec!["Great & cheap. Works well.".to_string(), "No title here".to_string()]
        );

        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("kitchen");
        fs::create_dir(&d).unwrap();
        fs::write(d.join("positive.review"), raw).unwrap();
        fs::write(d.join("negative.review"), "<review><review_text>bad</review_text></review>").unwrap();
        let c = mds_domain(&d).unwrap();
        assert_eq!(c.name, "kitchen");
        assert_eq!(c.len(), 3);
        assert_eq!(c.codeframe, vec![POSITIVE]);
        assert_eq!(c.verbatims[2].id, "kitchen-neg-0");
        assert!(c.verbatims[2].codes.is_empty());
    }
}
