//! k-batch active learning for several batch sizes next to the fully
//! interactive loop, averaged over codes and trials.
//!
//! ```text
//! cargo run --release -p verbacode --example k_sweep
//! ```

use verbacode::engine::{Budget, Checkpoints};
use verbacode::eval::average_curves;
use verbacode::experiment::{run_trials, Dataset};
use verbacode::features::FeatureSpace;
use verbacode::synth::{topic_corpus, TopicCorpusParams};
use verbacode::{Policy, RunConfig, Workflow};

fn main() -> verbacode::Result<()> {
    let params = TopicCorpusParams {
        n_docs: 1000,
        ..TopicCorpusParams::default()
    };
    let corpus = topic_corpus(&params, 2)?.restrict_codes(&["earn".into(), "acq".into(), "grain".into()])?;
    let data = Dataset::new(corpus, FeatureSpace::new(1 << 18, 0)?)?;
    let checkpoints = Checkpoints::Explicit(vec![50, 100, 200]);

    let mut systems = vec![(
        "interactive".to_owned(),
        RunConfig::new(Workflow::Interactive).policy(Policy::Uncertain),
    )];
    for k in [1, 5, 10, 50, 100] {
        systems.push((
            format!("k = {k}"),
            RunConfig::new(Workflow::KbatchActive).policy(Policy::Uncertain).k(k),
        ));
    }

    println!("{:<12} {:>7} {:>7} {:>7}", "system", "5%", "10%", "20%");
    for (name, config) in systems {
        let config = config.budget(Budget::Fraction(0.2)).checkpoints(checkpoints.clone());
        let runs = run_trials(&data, &config, 3, 0)?;
        let curves: Vec<_> = runs.into_iter().map(|r| r.curve).collect();
        let avg = average_curves(&curves)?;
        let at = |x| avg.f1_at_fraction(x).unwrap_or(f64::NAN);
        println!("{name:<12} {:>7.3} {:>7.3} {:>7.3}", at(0.05), at(0.1), at(0.2));
    }
    Ok(())
}
