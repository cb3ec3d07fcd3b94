//! The interactive loop on one code: pick, validate, update, re-score,
//! with pooled F1 after every step.
//!
//! ```text
//! cargo run --release -p verbacode --example interactive_loop
//! ```

use verbacode::engine::{Budget, TruthOracle};
use verbacode::experiment::Dataset;
use verbacode::features::FeatureSpace;
use verbacode::synth::{topic_corpus, TopicCorpusParams};
use verbacode::{run_interactive, Policy, RunConfig, Workflow};

fn main() -> verbacode::Result<()> {
    let params = TopicCorpusParams {
        n_docs: 2000,
        ..TopicCorpusParams::default()
    };
    let data = Dataset::new(topic_corpus(&params, 3)?, FeatureSpace::new(1 << 18, 0)?)?;
    let task = data.task("crude")?;
    let td = data.task_data("crude")?;
    println!("{} items, {} with `crude`", task.len(), task.positives());

    let config = RunConfig::new(Workflow::Interactive)
        .policy(Policy::Uncertain)
        .budget(Budget::Count(400))
        .timed(true);
    let mut oracle = TruthOracle::new(task);
    let out = run_interactive(&td, &config, &mut oracle)?;

    for p in out.curve.points.iter().filter(|p| p.labeled_count % 40 == 0) {
        println!(
            "{:>4} validated ({:>5.1}%)  F1 {:.3}",
            p.labeled_count,
            100.0 * out.curve.fraction(p),
            p.f1
        );
    }
    let slowest = out.iteration_seconds.iter().copied().fold(0.0, f64::max);
    println!("{} oracle calls, slowest iteration {:.2} ms", oracle.calls(), slowest * 1e3);
    Ok(())
}
