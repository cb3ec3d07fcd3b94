//! Which item each selection policy asks about on a fixed pool.
//!
//! ```text
//! cargo run -p verbacode --example selection_policies
//! ```

use verbacode::policies::{select_minmax, select_random, select_uncertain, Policy, PoolView};
use verbacode::rng::{stream, Stream};

fn main() -> verbacode::Result<()> {
    // (item index, confidence that the item has the code)
    let pool = [(0, 0.91), (1, 0.12), (2, 0.47), (3, 0.66), (4, 0.55), (5, 0.03)];
    for (i, c) in pool {
        println!("item {i}: confidence {c:.2}");
    }
    let mut rng = stream(7, Stream::Selection);
    for iteration in 0..4 {
        let view = PoolView::new(&pool, iteration);
        println!(
            "iteration {iteration}: uncertain -> {}, minmax -> {}, random -> {}",
            select_uncertain(&view)?,
            select_minmax(&view)?,
            select_random(&view, &mut rng)?
        );
    }

    for policy in [Policy::Uncertain, Policy::MinMax, Policy::Random] {
        let batch = policy.select_batch(&pool, 0, 3, &mut stream(7, Stream::Selection))?;
        println!("{:<9} batch of 3: {batch:?}", policy.as_str());
    }
    Ok(())
}
