//! One Passive-Aggressive pass against a batch SVM on the same labelled
//! items, scored on items neither has seen.
//!
//! ```text
//! cargo run --release -p verbacode --example pa_vs_svm
//! ```

use verbacode::eval::Contingency;
use verbacode::experiment::Dataset;
use verbacode::features::FeatureSpace;
use verbacode::learners::{svm_train, Label, LinearModel, SvmParams};
use verbacode::synth::{topic_corpus, TopicCorpusParams};

fn score(model: &LinearModel, data: &Dataset, labels: &[bool], items: &[usize]) -> f64 {
    let mut c = Contingency::default();
    for &i in items {
        c.record(model.margin_unchecked(&data.vectors[i]) > 0.0, labels[i]);
    }
    c.f1()
}

fn main() -> verbacode::Result<()> {
    let params = TopicCorpusParams {
        n_docs: 3000,
        ..TopicCorpusParams::default()
    };
    let data = Dataset::new(topic_corpus(&params, 1)?, FeatureSpace::new(1 << 18, 0)?)?;
    let (train, test): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|i| i % 3 != 0);

    println!("{:<10} {:>6} {:>9} {:>9} {:>7}", "code", "train", "PA F1", "SVM F1", "epochs");
    for code in ["earn", "acq", "grain", "crude", "ship"] {
        let labels = &data.task(code)?.labels;
        for n in [50, 500, train.len()] {
            let seen = &train[..n];
            let mut pa = LinearModel::zeros(data.space);
            for &i in seen {
                pa.pa_update(&data.vectors[i], Label::from_bool(labels[i]), 1.0)?;
            }
            let examples: Vec<_> = seen
                .iter()
                .map(|&i| (&data.vectors[i], Label::from_bool(labels[i])))
                .collect();
            let fit = svm_train(&examples, data.space, SvmParams::default())?;
            println!(
                "{code:<10} {n:>6} {:>9.3} {:>9.3} {:>7}",
                score(&pa, &data, labels, &test),
                score(&fit.model, &data, labels, &test),
                fit.epochs
            );
        }
    }
    Ok(())
}
