//! Approximate MAP search on a repulsive model, checked against brute force.
//!
//! cargo run --release --example mode_search

use dkpp::modeopt::exhaustive_cardinality_mode;
use dkpp::{
    double_greedy, exhaustive_mode, greedy_mode, random_greedy_cardinality,
    random_wishart_kernel, Dkpp, SpectralFunction,
};

fn main() -> dkpp::Result<()> {
    let model = Dkpp::new(random_wishart_kernel(14, 9), SpectralFunction::boxcox(0.5));
    let results = [
        exhaustive_mode(&model)?,
        greedy_mode(&model)?,
        double_greedy(&model, false, 0)?,
        double_greedy(&model, true, 3)?,
    ];
    for r in &results {
        println!("{:<26} {:>9.4}  {{{}}}", r.method, r.objective, r.subset);
    }

    let k = 4;
    let best = exhaustive_cardinality_mode(&model, k)?;
    println!("\n|A| = {k}: best {:.4} {{{}}}", best.objective, best.subset);
    for seed in 0..5 {
        let r = random_greedy_cardinality(&model, k, seed)?;
        println!("  random greedy seed {seed}: {:.4} {{{}}}", r.objective, r.subset);
    }
    Ok(())
}
