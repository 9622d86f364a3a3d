//! Interval and cardinality marginals, sampled and exact.
//!
//! cargo run --release --example marginals

use dkpp::inference::naive_log_marginal_between;
use dkpp::{
    conditional_prob_between, mean_field_fit, rb_marginal_between, rb_marginal_cardinality,
    random_wishart_kernel, Dkpp, McConfig, MeanFieldConfig, SpectralFunction, Subset,
};

fn main() -> dkpp::Result<()> {
    let n = 12;
    let model = Dkpp::new(random_wishart_kernel(n, 2), SpectralFunction::boxcox(1.5)).normalized()?;
    let q = mean_field_fit(&model, &MeanFieldConfig::default())?.q;

    // P({1, 4} ⊆ A ⊆ {0, 1, 2, 4, 7, 9})
    let lower = Subset::new(vec![1, 4])?;
    let upper = Subset::new(vec![0, 1, 2, 4, 7, 9])?;
    let exact = rb_marginal_between(&model, &lower, &upper, &q, &McConfig::default())?;
    println!("interval marginal, exact: {:.6}", exact.probability.unwrap());

    let log_z = model.cached_log_partition().unwrap();
    for seed in 0..3 {
        let cfg = McConfig::sampled(100, seed);
        let rb = rb_marginal_between(&model, &lower, &upper, &q, &cfg)?;
        let naive = naive_log_marginal_between(&model, &lower, &upper, &q, 100, seed)?;
        println!(
            "  seed {seed}: rao-blackwell {:.6}  plain {:.6}",
            rb.probability.unwrap(),
            (naive.value - log_z).exp()
        );
    }

    let a = Subset::new(vec![1, 4, 7])?;
    let cond = conditional_prob_between(&model, &a, &lower, &upper, &q, &McConfig::default())?;
    println!("P(A = {a} | interval) = {:.6}", cond.value.exp());

    println!("\nk  P(|A| = k)  sampled (n=200)");
    for k in 0..=n {
        let exact = rb_marginal_cardinality(&model, k, &McConfig::default())?;
        let mc = rb_marginal_cardinality(&model, k, &McConfig::sampled(200, k as u64))?;
        println!("{k:<2} {:.6}    {:.6} ± {:.6}", exact.value, mc.value, mc.std_error);
    }
    Ok(())
}
