//! Batch passive learning against the interactive loop under each
//! selection policy.
//!
//! ```text
//! cargo run --release -p verbacode --example policy_comparison
//! ```

use verbacode::engine::Budget;
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
    let data = Dataset::new(topic_corpus(&params, 4)?, FeatureSpace::new(1 << 18, 0)?)?;
    let systems = [
        ("batch passive", RunConfig::new(Workflow::BatchPassive)),
        ("random", RunConfig::new(Workflow::Interactive).policy(Policy::Random)),
        ("minmax", RunConfig::new(Workflow::Interactive).policy(Policy::MinMax)),
        ("uncertain", RunConfig::new(Workflow::Interactive).policy(Policy::Uncertain)),
    ];
    let fractions = [0.0, 0.02, 0.05, 0.1, 0.2, 0.3];

    print!("{:<14}", "system");
    for x in fractions {
        print!(" {:>6}", format!("{:.0}%", x * 100.0));
    }
    println!();
    for (name, config) in systems {
        let config = config.budget(Budget::Fraction(0.3));
        let curves: Vec<_> = run_trials(&data, &config, 3, 0)?.into_iter().map(|r| r.curve).collect();
        let avg = average_curves(&curves)?;
        print!("{name:<14}");
        for x in fractions {
            print!(" {:>6.3}", avg.f1_at_fraction(x).unwrap_or(f64::NAN));
        }
        println!();
    }
    Ok(())
}
