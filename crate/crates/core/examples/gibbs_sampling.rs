//! A heat-bath Gibbs chain compared with exact inclusion probabilities.
//!
//! cargo run --release --example gibbs_sampling

use dkpp::{
    inclusion_frequencies, random_wishart_kernel, run_chain, ChainConfig, Dkpp, SpectralFunction,
    Subset,
};

fn main() -> dkpp::Result<()> {
    let model = Dkpp::new(random_wishart_kernel(8, 4), SpectralFunction::boxcox(0.5));
    let config = ChainConfig {
        sweeps: 20_000,
        burn_in: 200,
        thin: 2,
        seed: 1,
    };
    let chain = run_chain(&model, &Subset::empty(), &config)?;
    let freq = inclusion_frequencies(&chain, model.n())?;
    let exact = model.log_weight_table()?.marginals();
    println!(
        "{} states kept, {} of {} site updates changed the state",
        chain.states.len(),
        chain.accepted,
        chain.proposed
    );
    for i in 0..model.n() {
        println!("item {i}: chain {:.4}  exact {:.4}", freq[i], exact[i]);
    }
    println!("last few states:");
    for s in chain.states.iter().rev().take(5) {
        println!("  {{{s}}}");
    }
    Ok(())
}
