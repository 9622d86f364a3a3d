//! Determinantal kernel point processes.
//!
//! A distribution over subsets `A` of a ground set `{0, …, N-1}` with
//! `P(A) ∝ exp tr φ(L[A])`, where `L` is a positive semidefinite kernel,
//! `L[A]` its principal submatrix on `A`, and `φ` a spectral function applied
//! to the eigenvalues. With `φ = log` this is an ordinary DPP; other choices of
//! `φ` move the model between repulsive and attractive behaviour.
//!
//! The crate covers exact enumeration for small ground sets, mean-field and
//! importance-sampling estimates of the normalizer and marginals, Gibbs
//! sampling, approximate mode search, and kernel learning by ratio matching.
//!
//! ```
//! use dkpp::{Dkpp, KernelMatrix, SpectralFunction, Subset};
//!
//! let kernel = KernelMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
//! let model = Dkpp::new(kernel, SpectralFunction::Log);
//! // With φ = log the normalizer is det(I + L).
//! let log_z = model.exact_log_partition().unwrap();
//! assert!((log_z - (3.0f64 * 2.0 - 0.25).ln()).abs() < 1e-12);
//! let p = model.exact_prob(&Subset::new(vec![0]).unwrap()).unwrap();
//! assert!((p - 2.0 / 5.75).abs() < 1e-12);
//! ```

pub mod bernoulli;
pub mod enumerate;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod kernel;
pub mod learning;
pub mod model;
pub mod modeopt;
pub mod numeric;
pub mod sampling;
pub mod spectral;
pub mod subset;

pub use bernoulli::BernoulliProduct;
pub use enumerate::{LogWeightTable, SpectrumTable, DEFAULT_ENUMERATION_CAP};
pub use error::{Error, Result};
pub use kernel::{gaussian_kernel, grid_points, random_wishart_kernel, KernelMatrix};
pub use model::{BoltzmannParams, Dkpp, ModularityCheck, SetFunction};
pub use learning::{
    flip, ratio_matching_grad_l, ratio_matching_grad_v, ratio_matching_loss, sgd_fit,
    BasketDataset, Batch, FactorizedKernel, TrainConfig,
};
pub use modeopt::{
    double_greedy, exhaustive_mode, greedy_mode, random_greedy_cardinality, OptResult,
};
pub use sampling::{gibbs_step, inclusion_frequencies, run_chain, Chain, ChainConfig};
pub use spectral::SpectralFunction;
pub use subset::Subset;
pub use inference::{
    conditional_prob_between, conditional_prob_given_cardinality, elbo, importance_log_partition,
    marginal_gain, mean_field_fit, rb_marginal_between, rb_marginal_cardinality, ElboConfig,
    EstimateWithError, McConfig, MeanFieldConfig, MeanFieldResult,
};
