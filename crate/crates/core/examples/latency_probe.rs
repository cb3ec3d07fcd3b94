//! Per-iteration latency of the interactive loop as the pool grows.
//!
//! ```text
//! cargo run --release -p verbacode --example latency_probe
//! ```

use verbacode::experiment::{bench, Dataset};
use verbacode::features::FeatureSpace;
use verbacode::synth::{topic_corpus, TopicCorpusParams};
use verbacode::Policy;

fn main() -> verbacode::Result<()> {
    let space = FeatureSpace::new(1 << 18, 0)?;
    println!("{:>7} {:>10} {:>10} {:>10}", "items", "max ms", "mean ms", "p99 ms");
    for n_docs in [250, 1000, 4000, 10_788] {
        let params = TopicCorpusParams {
            n_docs,
            ..TopicCorpusParams::default()
        };
        let corpus = topic_corpus(&params, 0)?.restrict_codes(&["earn".into()])?;
        let data = Dataset::new(corpus, space)?;
        let t = bench(&data, 2, 100, Policy::Uncertain, 0)?.row.timing;
        println!(
            "{n_docs:>7} {:>10.3} {:>10.3} {:>10.3}",
            t.max_seconds * 1e3,
            t.mean_seconds * 1e3,
            t.p99_seconds * 1e3
        );
    }
    Ok(())
}
