//! Fit a low-rank kernel to baskets drawn from a known model.
//!
//! cargo run --release --example ratio_matching

use dkpp::learning::factor_loss;
use dkpp::{
    random_wishart_kernel, ratio_matching_loss, sgd_fit, BasketDataset, Batch, Dkpp,
    SpectralFunction, TrainConfig,
};

fn main() -> dkpp::Result<()> {
    let n = 8;
    let phi = SpectralFunction::boxcox(1.5);
    let truth = Dkpp::new(random_wishart_kernel(n, 21), phi);
    let train = BasketDataset::sample_from(&truth, 2000, 1)?;
    let test = BasketDataset::sample_from(&truth, 2000, 2)?;
    println!("{} baskets, largest has {} items", train.len(), train.kappa());

    let config = TrainConfig {
        learning_rate: 0.05,
        n_iters: 2000,
        rank: n,
        phi,
        eval_every: 250,
        seed: 3,
        ..Default::default()
    };
    let fit = sgd_fit(&train, &config)?;
    for p in &fit.trace {
        println!("iter {:>5}  loss {:.5}  {:>8.1} ms", p.iter, p.loss, p.wall_ms);
    }
    println!(
        "held-out loss: fitted {:.5}, true kernel {:.5}",
        factor_loss(&fit.kernel, &phi, &test, &Batch::Full)?,
        ratio_matching_loss(truth.kernel(), &phi, &test, &Batch::Full)?
    );
    Ok(())
}
