//! The three closed-form special cases: a DPP, a Boltzmann machine and a
//! product of independent coins.
//!
//! cargo run --example special_cases

use dkpp::{random_wishart_kernel, Dkpp, SpectralFunction, Subset};

fn main() -> dkpp::Result<()> {
    let n = 6;
    let kernel = random_wishart_kernel(n, 7);
    let a = Subset::new(vec![0, 2, 5])?;

    // log φ: P(A) = det L[A] / det(I + L)
    let dpp = Dkpp::new(kernel.clone(), SpectralFunction::Log);
    let sub = kernel.principal_submatrix(&a)?;
    let plus = kernel.matrix() + nalgebra::DMatrix::identity(n, n);
    println!(
        "DPP      P({a}) = {:.6}  det ratio = {:.6}",
        dpp.exact_prob(&a)?,
        sub.determinant() / plus.determinant()
    );

    // quadratic φ: a fully visible Boltzmann machine
    let quad = Dkpp::new(kernel.clone(), SpectralFunction::quadratic(0.5, -0.2, 0.1));
    let bm = quad.to_boltzmann()?;
    println!(
        "Boltzmann  log P~({a}) = {:.6}  energy = {:.6}",
        quad.unnorm_logprob(&a)?,
        bm.energy(&a)
    );

    // affine φ: independent inclusions
    let affine = Dkpp::new(kernel, SpectralFunction::affine(1.0, -1.0));
    let coins = affine.to_bernoulli()?;
    let marginals = affine.log_weight_table()?.marginals();
    for i in 0..n {
        println!("item {i}: q = {:.6}  enumerated = {:.6}", coins.q()[i], marginals[i]);
    }
    Ok(())
}
