//! Mean-field approximation, the ELBO, and importance-sampling estimators of
//! the normalizer, interval and cardinality marginals, and conditionals.
//!
//! Everything here works on any [`SetFunction`], so the same code runs on a
//! [`Dkpp`] directly or on a precomputed [`LogWeightTable`].

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bernoulli::BernoulliProduct;
use crate::enumerate::{LogWeightTable, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::model::{Dkpp, SetFunction};
use crate::numeric::{log_mean, log_sum_exp, mean_var, sigmoid, stream_rng};
use crate::subset::{binomial, ln_binomial, Combinations, Subset};

/// A Monte Carlo (or exact) estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    /// Zero for exact results and for single-sample estimates.
    pub std_error: f64,
    /// Number of samples drawn, or of terms summed in exact mode.
    pub n_samples: usize,
    pub seed: u64,
    /// The value was computed by exhaustive summation.
    pub exact: bool,
}

impl EstimateWithError {
    fn exact(value: f64, terms: usize, seed: u64) -> Self {
        EstimateWithError {
            value,
            std_error: 0.0,
            n_samples: terms.max(1),
            seed,
            exact: true,
        }
    }

    fn sampled(value: f64, std_error: f64, n_samples: usize, seed: u64) -> Self {
        let std_error = if value.is_finite() && std_error.is_finite() {
            std_error
        } else {
            0.0
        };
        EstimateWithError {
            value,
            std_error,
            n_samples,
            seed,
            exact: false,
        }
    }
}

/// `f(i | A) = log P̃(A ∪ {i}) - log P̃(A)` in the extended reals.
pub fn marginal_gain<F: SetFunction + ?Sized>(f: &F, i: usize, a: &Subset) -> Result<f64> {
    let n = f.ground_size();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if a.contains(i) {
        return Err(Error::InvalidArgument(format!(
            "item {i} already belongs to the conditioning set"
        )));
    }
    let with = f.log_weight(&a.with(i))?;
    let without = f.log_weight(a)?;
    gain(with, without).ok_or(Error::UndefinedGain(i))
}

fn gain(with: f64, without: f64) -> Option<f64> {
    match (with == f64::NEG_INFINITY, without == f64::NEG_INFINITY) {
        (true, true) => None,
        (false, true) => Some(f64::INFINITY),
        _ => Some(with - without),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanFieldConfig {
    /// Draws per expectation in Monte Carlo mode.
    pub mc_samples: usize,
    pub max_sweeps: usize,
    /// Convergence threshold on `max_i |Δq_i|` over one sweep.
    pub tol: f64,
    pub seed: u64,
    /// Expectations are computed exactly when `N - 1` does not exceed this.
    pub exact_below: usize,
}

impl Default for MeanFieldConfig {
    fn default() -> Self {
        MeanFieldConfig {
            mc_samples: 64,
            max_sweeps: 50,
            tol: 1e-4,
            seed: 0,
            exact_below: 12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeanFieldResult {
    pub q: BernoulliProduct,
    pub sweeps: usize,
    pub converged: bool,
    /// Coordinates whose expected gain was `-∞`; their `q_i` is 0.
    pub degenerate: Vec<usize>,
}

/// Probability of every mask under the product measure, with coordinate
/// `skip` marginalized out (its bit is always treated as 0).
fn product_weights(q: &[f64], skip: Option<usize>) -> Vec<f64> {
    let mut w = Vec::with_capacity(1 << q.len());
    w.push(1.0);
    for (j, &p) in q.iter().enumerate() {
        let (p0, p1) = if skip == Some(j) { (1.0, 0.0) } else { (1.0 - p, p) };
        let len = w.len();
        w.extend_from_within(..);
        for x in &mut w[..len] {
            *x *= p0;
        }
        for x in &mut w[len..] {
            *x *= p1;
        }
    }
    w
}

/// Adds up `p · v` over `(p, v)` pairs with `p > 0`, letting any infinite
/// value with positive mass dominate; `-∞` wins over `+∞`.
struct ExtendedSum {
    total: f64,
    neg_inf: bool,
    pos_inf: bool,
}

impl ExtendedSum {
    fn new() -> Self {
        ExtendedSum {
            total: 0.0,
            neg_inf: false,
            pos_inf: false,
        }
    }

    fn add(&mut self, p: f64, v: f64) {
        if p <= 0.0 {
            return;
        }
        if v == f64::NEG_INFINITY {
            self.neg_inf = true;
        } else if v == f64::INFINITY {
            self.pos_inf = true;
        } else {
            self.total += p * v;
        }
    }

    fn value(&self) -> f64 {
        if self.neg_inf {
            f64::NEG_INFINITY
        } else if self.pos_inf {
            f64::INFINITY
        } else {
            self.total
        }
    }
}

fn expected_gain_exact(table: &LogWeightTable, q: &[f64], i: usize) -> f64 {
    let w = product_weights(q, Some(i));
    let bit = 1u64 << i;
    let mut acc = ExtendedSum::new();
    for (mask, &p) in w.iter().enumerate() {
        let mask = mask as u64;
        if mask & bit != 0 || p == 0.0 {
            continue;
        }
        // A zero-probability conditioning set contributes a -∞ gain.
        let g = gain(table.at(mask | bit), table.at(mask)).unwrap_or(f64::NEG_INFINITY);
        acc.add(p, g);
    }
    acc.value()
}

fn expected_gain_mc<F: SetFunction + ?Sized>(
    f: &F,
    q: &[f64],
    i: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = q.len();
    // The same uniforms are reused on every sweep, so the iteration has a
    // deterministic fixed point instead of jittering around one.
    let mut rng = stream_rng(seed, i as u64);
    let mut u = vec![0.0; n];
    let mut acc = ExtendedSum::new();
    for _ in 0..samples {
        for x in u.iter_mut() {
            *x = rng.random::<f64>();
        }
        let items: Vec<usize> = (0..n).filter(|&j| j != i && u[j] < q[j]).collect();
        let a = Subset::new(items)?;
        let without = f.log_weight(&a)?;
        let with = f.log_weight(&a.with(i))?;
        let g = gain(with, without).unwrap_or(f64::NEG_INFINITY);
        acc.add(1.0 / samples as f64, g);
    }
    Ok(acc.value())
}

/// Coordinate-ascent mean field, `q_i ← σ(E[f(i | A)])`, from `q = 0.5`.
pub fn mean_field_fit<F: SetFunction + ?Sized>(
    f: &F,
    config: &MeanFieldConfig,
) -> Result<MeanFieldResult> {
    if config.mc_samples == 0 {
        return Err(Error::InvalidArgument("mc_samples must be positive".into()));
    }
    if !(config.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let n = f.ground_size();
    let table = if n <= config.exact_below + 1 {
        Some(LogWeightTable::build(f, DEFAULT_ENUMERATION_CAP.max(config.exact_below + 1))?)
    } else {
        None
    };
    let mut q = vec![0.5; n];
    let mut degenerate = vec![false; n];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let e = match &table {
                Some(t) => expected_gain_exact(t, &q, i),
                None => expected_gain_mc(f, &q, i, config.mc_samples, config.seed)?,
            };
            degenerate[i] = e == f64::NEG_INFINITY;
            let next = sigmoid(e);
            delta = delta.max((next - q[i]).abs());
            q[i] = next;
        }
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    Ok(MeanFieldResult {
        q: BernoulliProduct::new(q)?,
        sweeps,
        converged,
        degenerate: (0..n).filter(|&i| degenerate[i]).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElboConfig {
    pub mc_samples: usize,
    pub seed: u64,
    /// The expectation is exact when `N` does not exceed this.
    pub exact_below: usize,
}

impl Default for ElboConfig {
    fn default() -> Self {
        ElboConfig {
            mc_samples: 1000,
            seed: 0,
            exact_below: 12,
        }
    }
}

/// Multilinear extension `Σ_A f(A) Q_q(A)` over a full table.
pub fn multilinear_extension(table: &LogWeightTable, q: &BernoulliProduct) -> Result<f64> {
    if q.len() != table.n() {
        return Err(Error::InvalidArgument(format!(
            "{} Bernoulli parameters for {} items",
            q.len(),
            table.n()
        )));
    }
    let w = product_weights(q.q(), None);
    let mut acc = ExtendedSum::new();
    for (&p, &t) in w.iter().zip(table.values()) {
        acc.add(p, t);
    }
    Ok(acc.value())
}

/// `H[Q_q] + E_q[log P̃(A)]`, a lower bound on `log Z`.
pub fn elbo<F: SetFunction + ?Sized>(
    f: &F,
    q: &BernoulliProduct,
    config: &ElboConfig,
) -> Result<EstimateWithError> {
    let n = f.ground_size();
    if q.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} Bernoulli parameters for {n} items",
            q.len()
        )));
    }
    let entropy = q.entropy();
    if n <= config.exact_below {
        let table = LogWeightTable::build(f, DEFAULT_ENUMERATION_CAP.max(config.exact_below))?;
        let e = multilinear_extension(&table, q)?;
        return Ok(EstimateWithError::exact(entropy + e, 1 << n, config.seed));
    }
    if config.mc_samples == 0 {
        return Err(Error::InvalidArgument("mc_samples must be positive".into()));
    }
    let mut rng = stream_rng(config.seed, 0);
    let values = (0..config.mc_samples)
        .map(|_| f.log_weight(&q.sample(&mut rng)))
        .collect::<Result<Vec<_>>>()?;
    if values.contains(&f64::NEG_INFINITY) {
        return Ok(EstimateWithError::sampled(
            f64::NEG_INFINITY,
            0.0,
            config.mc_samples,
            config.seed,
        ));
    }
    let (mean, var) = mean_var(&values);
    let se = (var / values.len() as f64).sqrt();
    Ok(EstimateWithError::sampled(
        entropy + mean,
        se,
        config.mc_samples,
        config.seed,
    ))
}

/// `log Z` by importance sampling from `proposal`.
pub fn importance_log_partition<F: SetFunction + ?Sized>(
    f: &F,
    proposal: &BernoulliProduct,
    n_samples: usize,
    seed: u64,
) -> Result<EstimateWithError> {
    check_proposal(f, proposal)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut log_w = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let a = proposal.sample(&mut rng);
        log_w.push(f.log_weight(&a)? - proposal.log_mass(&a));
    }
    let lm = log_mean(&log_w);
    if lm.log_mean == f64::NEG_INFINITY {
        return Err(Error::ZeroWeights);
    }
    Ok(EstimateWithError::sampled(lm.log_mean, lm.rel_error, n_samples, seed))
}

fn check_proposal<F: SetFunction + ?Sized>(f: &F, proposal: &BernoulliProduct) -> Result<()> {
    if proposal.len() != f.ground_size() {
        return Err(Error::InvalidArgument(format!(
            "proposal has {} coordinates for {} items",
            proposal.len(),
            f.ground_size()
        )));
    }
    Ok(())
}

/// Sampling settings shared by the marginal and conditional estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Interval estimators sum exactly when at most this many coordinates are free.
    pub max_exhaustive_free: usize,
    /// Cardinality estimators sum exactly when `C(N, k)` is at most this.
    pub max_exhaustive_subsets: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_samples: 1000,
            seed: 0,
            max_exhaustive_free: 20,
            max_exhaustive_subsets: 100_000,
        }
    }
}

impl McConfig {
    pub fn sampled(n_samples: usize, seed: u64) -> Self {
        McConfig {
            n_samples,
            seed,
            max_exhaustive_free: 0,
            max_exhaustive_subsets: 0,
        }
    }
}

fn free_items(n: usize, a_in: &Subset, a_out: &Subset) -> Result<Vec<usize>> {
    a_in.validate(n)?;
    a_out.validate(n)?;
    if !a_in.is_subset_of(a_out) {
        return Err(Error::InvalidArgument(
            "the lower set of an interval must be contained in the upper set".into(),
        ));
    }
    Ok(a_out.difference(a_in).into_items())
}

fn with_free(a_in: &Subset, free: &[usize], pick: impl Fn(usize) -> bool) -> Subset {
    let mut items = a_in.items().to_vec();
    items.extend(free.iter().enumerate().filter(|&(k, _)| pick(k)).map(|(_, &i)| i));
    Subset::from_unsorted(items).expect("interval members are distinct")
}

/// Unnormalized interval marginal `log Σ_{a_in ⊆ A ⊆ a_out} P̃(A)`, sampling
/// only the free coordinates `a_out ∖ a_in`.
pub fn rb_log_marginal_between<F: SetFunction + ?Sized>(
    f: &F,
    a_in: &Subset,
    a_out: &Subset,
    proposal: &BernoulliProduct,
    config: &McConfig,
) -> Result<EstimateWithError> {
    check_proposal(f, proposal)?;
    let free = free_items(f.ground_size(), a_in, a_out)?;
    if free.len() <= config.max_exhaustive_free.min(40) {
        let terms = (0..1u64 << free.len())
            .map(|m| f.log_weight(&with_free(a_in, &free, |k| m >> k & 1 == 1)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(EstimateWithError::exact(
            log_sum_exp(terms.iter().copied()),
            terms.len(),
            config.seed,
        ));
    }
    if config.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    if free.iter().any(|&i| !(proposal.q()[i] > 0.0 && proposal.q()[i] < 1.0)) {
        return Err(Error::InvalidArgument(
            "proposal must lie strictly inside (0, 1) on free coordinates".into(),
        ));
    }
    let mut rng = stream_rng(config.seed, 0);
    let mut log_w = Vec::with_capacity(config.n_samples);
    let mut pick = vec![false; free.len()];
    for _ in 0..config.n_samples {
        for (k, &i) in free.iter().enumerate() {
            pick[k] = rng.random::<f64>() < proposal.q()[i];
        }
        let a = with_free(a_in, &free, |k| pick[k]);
        log_w.push(f.log_weight(&a)? - proposal.log_mass_on(&a, &free));
    }
    let lm = log_mean(&log_w);
    Ok(EstimateWithError::sampled(
        lm.log_mean,
        lm.rel_error,
        config.n_samples,
        config.seed,
    ))
}

/// An interval marginal: the unnormalized log value, and the probability
/// when the model carries a normalizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalEstimate {
    pub log_unnormalized: EstimateWithError,
    pub probability: Option<f64>,
}

/// `P(a_in ⊆ A ⊆ a_out)` for a model.
pub fn rb_marginal_between(
    model: &Dkpp,
    a_in: &Subset,
    a_out: &Subset,
    proposal: &BernoulliProduct,
    config: &McConfig,
) -> Result<MarginalEstimate> {
    let log_unnormalized = rb_log_marginal_between(model, a_in, a_out, proposal, config)?;
    Ok(MarginalEstimate {
        log_unnormalized,
        probability: model
            .cached_log_partition()
            .map(|z| (log_unnormalized.value - z).exp()),
    })
}

/// The plain importance estimator of an interval marginal: sample every
/// coordinate and keep only draws that land in the interval. Returned on
/// the same log scale as [`rb_log_marginal_between`]; `-∞` when no draw hits.
pub fn naive_log_marginal_between<F: SetFunction + ?Sized>(
    f: &F,
    a_in: &Subset,
    a_out: &Subset,
    proposal: &BernoulliProduct,
    n_samples: usize,
    seed: u64,
) -> Result<EstimateWithError> {
    check_proposal(f, proposal)?;
    free_items(f.ground_size(), a_in, a_out)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut log_w = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let a = proposal.sample(&mut rng);
        if a_in.is_subset_of(&a) && a.is_subset_of(a_out) {
            log_w.push(f.log_weight(&a)? - proposal.log_mass(&a));
        } else {
            log_w.push(f64::NEG_INFINITY);
        }
    }
    let lm = log_mean(&log_w);
    Ok(EstimateWithError::sampled(lm.log_mean, lm.rel_error, n_samples, seed))
}

/// `log Σ_{|A| = k} P̃(A)` and its relative error.
struct StratumSum {
    log_total: f64,
    rel_error: f64,
    terms: usize,
    exact: bool,
}

fn stratum_sum<F: SetFunction + ?Sized>(f: &F, k: usize, config: &McConfig) -> Result<StratumSum> {
    let n = f.ground_size();
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "cardinality {k} exceeds ground set size {n}"
        )));
    }
    let count = binomial(n, k);
    // A single-subset stratum (k = 0 or k = N) is always summed.
    if count <= config.max_exhaustive_subsets.max(1) as f64 {
        let terms = Combinations::new(n, k)
            .map(|a| f.log_weight(&a))
            .collect::<Result<Vec<_>>>()?;
        return Ok(StratumSum {
            log_total: log_sum_exp(terms.iter().copied()),
            rel_error: 0.0,
            terms: terms.len(),
            exact: true,
        });
    }
    if config.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let mut rng = stream_rng(config.seed, 0);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut log_values = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        let (chosen, _) = pool.partial_shuffle(&mut rng, k);
        let a = Subset::from_unsorted(chosen.to_vec())?;
        log_values.push(f.log_weight(&a)?);
    }
    let lm = log_mean(&log_values);
    Ok(StratumSum {
        log_total: ln_binomial(n, k) + lm.log_mean,
        rel_error: lm.rel_error,
        terms: config.n_samples,
        exact: false,
    })
}

/// `P(|A| = k)` on the probability scale, given `log Z`.
pub fn rb_marginal_cardinality_of<F: SetFunction + ?Sized>(
    f: &F,
    log_z: f64,
    k: usize,
    config: &McConfig,
) -> Result<EstimateWithError> {
    let s = stratum_sum(f, k, config)?;
    let value = (s.log_total - log_z).exp();
    Ok(if s.exact {
        EstimateWithError::exact(value, s.terms, config.seed)
    } else {
        EstimateWithError::sampled(value, value * s.rel_error, s.terms, config.seed)
    })
}

/// `P(|A| = k)` for a model with a cached or enumerable normalizer.
pub fn rb_marginal_cardinality(
    model: &Dkpp,
    k: usize,
    config: &McConfig,
) -> Result<EstimateWithError> {
    rb_marginal_cardinality_of(model, model.log_partition()?, k, config)
}

/// `log P(A = a | |A| = |a|)`; the normalizer cancels.
pub fn conditional_prob_given_cardinality<F: SetFunction + ?Sized>(
    f: &F,
    a: &Subset,
    config: &McConfig,
) -> Result<EstimateWithError> {
    a.validate(f.ground_size())?;
    let numerator = f.log_weight(a)?;
    let s = stratum_sum(f, a.len(), config)?;
    if s.log_total == f64::NEG_INFINITY {
        return Err(Error::ZeroWeights);
    }
    let value = numerator - s.log_total;
    Ok(if s.exact {
        EstimateWithError::exact(value, s.terms, config.seed)
    } else {
        EstimateWithError::sampled(value, s.rel_error, s.terms, config.seed)
    })
}

/// `log P(A = a | a_in ⊆ A ⊆ a_out)`; the normalizer cancels.
pub fn conditional_prob_between<F: SetFunction + ?Sized>(
    f: &F,
    a: &Subset,
    a_in: &Subset,
    a_out: &Subset,
    proposal: &BernoulliProduct,
    config: &McConfig,
) -> Result<EstimateWithError> {
    a.validate(f.ground_size())?;
    if !(a_in.is_subset_of(a) && a.is_subset_of(a_out)) {
        return Err(Error::InvalidArgument(
            "the subset must lie inside the conditioning interval".into(),
        ));
    }
    let numerator = f.log_weight(a)?;
    let denominator = rb_log_marginal_between(f, a_in, a_out, proposal, config)?;
    if denominator.value == f64::NEG_INFINITY {
        return Err(Error::ZeroWeights);
    }
    Ok(EstimateWithError {
        value: numerator - denominator.value,
        ..denominator
    })
}
