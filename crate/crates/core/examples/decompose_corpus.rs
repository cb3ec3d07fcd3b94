//! Splits a small multi-label survey corpus into one binary task per code.
//!
//! ```text
//! cargo run -p verbacode --example decompose_corpus
//! ```

use verbacode::corpus::{decompose, split, Corpus, Verbatim};

fn main() -> verbacode::Result<()> {
    let answers = [
        ("r1", "The staff were friendly but the wait was far too long", vec!["staff", "waiting"]),
        ("r2", "Prices went up again this year", vec!["price"]),
        ("r3", "Nothing to add", vec![]),
        ("r4", "Long queue at the checkout, rude cashier", vec!["waiting", "staff"]),
        ("r5", "Good value for money", vec!["price"]),
        ("r6", "Parking is impossible on weekends", vec!["parking"]),
    ];
    let verbatims = answers
        .into_iter()
        .map(|(id, text, codes)| Verbatim::new(id, text, codes))
        .collect();
    let corpus = Corpus::new("store-survey", verbatims)?;
    println!("codeframe: {:?}", corpus.codeframe);

    for task in decompose(&corpus) {
        let marks: String = task.labels.iter().map(|&l| if l { '+' } else { '.' }).collect();
        println!(
            "{:<8} {marks}  {} positive, {} negative, seed-0 order {:?}",
            task.code,
            task.positives(),
            task.negatives(),
            split(&task, 0)
        );
    }
    Ok(())
}
