//! Hashed tf-idf vectors: tokenization, hashing into a fixed space and
//! unit-length scaling.
//!
//! ```text
//! cargo run -p verbacode --example vectorize_text
//! ```

use verbacode::features::{tokenize, FeatureSpace, Vectorizer};

fn main() -> verbacode::Result<()> {
    let texts = [
        "Shares of the bank rose after quarterly profit beat forecasts",
        "The bank agreed to acquire a smaller rival for cash",
        "Wheat and corn exports fell as the harvest shrank",
        "Profit profit profit",
    ];
    let space = FeatureSpace::new(1 << 18, 0)?;
    let vectorizer = Vectorizer::fit(texts, space)?;

    for text in texts {
        let tokens: Vec<String> = tokenize(text).collect();
        let x = vectorizer.vectorize(text);
        println!("{text:?}");
        println!("  tokens {tokens:?}");
        let mut weights: Vec<(usize, f64)> = x.iter().collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, w) in weights.iter().take(4) {
            println!("  feature {i:>6}  weight {w:.4}");
        }
        println!("  {} nonzero, norm {:.6}", x.nnz(), x.norm());
    }

    // a word never seen during fitting still hashes somewhere
    let unseen = vectorizer.vectorize("zeppelin");
    println!("unseen word: {} nonzero, index {}", unseen.nnz(), space.index("zeppelin"));
    Ok(())
}
