//! Sweeping the Box–Cox parameter moves the model from repulsive to
//! attractive. Prints modularity checks on a random kernel, then the
//! conditional probability of a spread-out and a clumped grid subset.
//!
//! cargo run --release --example dependence_control

use dkpp::experiments::gathered_block;
use dkpp::inference::conditional_prob_given_cardinality;
use dkpp::{
    gaussian_kernel, grid_points, random_greedy_cardinality, random_wishart_kernel, Dkpp,
    McConfig, SpectralFunction,
};

fn main() -> dkpp::Result<()> {
    let kernel = random_wishart_kernel(6, 3);
    println!("lambda  submodular  supermodular");
    for lambda in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let m = Dkpp::new(kernel.clone(), SpectralFunction::boxcox(lambda));
        println!(
            "{lambda:>6}  {:>10}  {:>12}",
            m.check_log_submodular()?.holds,
            m.check_log_supermodular()?.holds
        );
    }

    let side = 8;
    let k = 9;
    let grid = gaussian_kernel(&grid_points(side), 1.0)?;
    let dpp = Dkpp::new(grid.clone(), SpectralFunction::Log);
    let scattered = random_greedy_cardinality(&dpp, k, 0)?.subset;
    let gathered = gathered_block(side, k)?;
    println!("\nscattered {scattered}\ngathered  {gathered}");
    println!("lambda  log10 P(scattered | k)  log10 P(gathered | k)");
    let cfg = McConfig::sampled(2000, 1);
    for lambda in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let m = Dkpp::new(grid.clone(), SpectralFunction::boxcox(lambda));
        let s = conditional_prob_given_cardinality(&m, &scattered, &cfg)?;
        let g = conditional_prob_given_cardinality(&m, &gathered, &cfg)?;
        println!(
            "{lambda:>6}  {:>22.3}  {:>21.3}",
            s.value / std::f64::consts::LN_10,
            g.value / std::f64::consts::LN_10
        );
    }
    Ok(())
}
