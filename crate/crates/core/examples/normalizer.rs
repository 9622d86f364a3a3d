//! Estimating log Z: the mean-field ELBO is a lower bound, importance
//! sampling with the mean-field proposal is unbiased in Z.
//!
//! cargo run --release --example normalizer

use dkpp::{
    elbo, importance_log_partition, mean_field_fit, random_wishart_kernel, BernoulliProduct, Dkpp,
    ElboConfig, MeanFieldConfig, SpectralFunction,
};

fn main() -> dkpp::Result<()> {
    let n = 14;
    let kernel = random_wishart_kernel(n, 11);
    println!("lambda  exact      elbo       IS(mean-field)      IS(uniform)");
    for lambda in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let model = Dkpp::new(kernel.clone(), SpectralFunction::boxcox(lambda));
        let exact = model.exact_log_partition()?;
        let fit = mean_field_fit(&model, &MeanFieldConfig::default())?;
        // exact expectation; the Monte Carlo ELBO can land above log Z
        let exact_elbo = ElboConfig {
            exact_below: n,
            ..Default::default()
        };
        let bound = elbo(&model, &fit.q, &exact_elbo)?;
        let is = importance_log_partition(&model, &fit.q, 2000, 5)?;
        let uniform = BernoulliProduct::uniform(n, 0.5)?;
        let naive = importance_log_partition(&model, &uniform, 2000, 5)?;
        println!(
            "{lambda:>6}  {exact:<9.4}  {:<9.4}  {:.4} ± {:.4}   {:.4} ± {:.4}",
            bound.value, is.value, is.std_error, naive.value, naive.std_error
        );
    }
    Ok(())
}
