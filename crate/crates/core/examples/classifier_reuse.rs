//! Warm-starting the interactive loop on a new domain with classifiers
//! trained on other domains.
//!
//! ```text
//! cargo run --release -p verbacode --example classifier_reuse
//! ```

use verbacode::engine::{Budget, Checkpoints};
use verbacode::experiment::{reuse_study, Dataset, ReuseConfig};
use verbacode::synth::{sentiment_domains, SentimentParams};

fn main() -> verbacode::Result<()> {
    let params = SentimentParams {
        docs_per_domain: 600,
        ..SentimentParams::default()
    };
    let mut config = ReuseConfig::new("unused", vec![]);
    config.trials = 3;
    config.budget = Budget::Count(150);
    config.checkpoints = Checkpoints::Explicit(vec![0, 10, 25, 50, 100, 150]);
    let space = config.space()?;
    let domains = sentiment_domains(&params, 0)?
        .into_iter()
        .map(|c| Dataset::new(c, space))
        .collect::<verbacode::Result<Vec<_>>>()?;

    let report = reuse_study(&config, &domains)?;
    println!("code `{}`, {} targets", report.code, report.per_target.len());
    for curves in report.per_target.iter().chain([&report.average]) {
        println!("target {}", curves.target);
        for (label, curve) in curves.labelled(domains.len() - 1) {
            let f1s: Vec<String> = curve.points.iter().map(|p| format!("{:.3}", p.f1)).collect();
            println!("  {label:<16} {}", f1s.join(" "));
        }
    }
    Ok(())
}
