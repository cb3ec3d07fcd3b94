//! Writes the synthetic stand-in corpora as JSONL, ready for the CLI.
//!
//! ```text
//! cargo run --release -p verbacode --example generate_corpora -- data
//! ```

use std::path::PathBuf;

use verbacode::synth::{sentiment_domains, topic_corpus, SentimentParams, TopicCorpusParams};

fn main() -> verbacode::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(out.join("mds"))?;

    let news = topic_corpus(&TopicCorpusParams::default(), 0)?;
    let path = out.join(format!("{}.jsonl", news.name));
    news.write_jsonl(&path)?;
    println!("{:>6} items {:?} -> {}", news.len(), news.codeframe, path.display());

    for domain in sentiment_domains(&SentimentParams::default(), 0)? {
        let path = out.join("mds").join(format!("{}.jsonl", domain.name));
        domain.write_jsonl(&path)?;
        println!("{:>6} items {:?} -> {}", domain.len(), domain.codeframe, path.display());
    }
    Ok(())
}
