//! Desk-scale experiment drivers and CSV output.
//!
//! Each driver returns plain rows so that tests and examples can inspect the
//! numbers; [`write_csv`] serializes them with a `#` metadata block.

use std::io::Write;

use crate::bernoulli::BernoulliProduct;
use crate::enumerate::{SpectrumTable, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::inference::{
    conditional_prob_given_cardinality, importance_log_partition, mean_field_fit,
    multilinear_extension, McConfig, MeanFieldConfig,
};
use crate::kernel::{gaussian_kernel, grid_points, random_wishart_kernel};
use crate::model::Dkpp;
use crate::modeopt::random_greedy_cardinality;
use crate::numeric::mean_var;
use crate::spectral::SpectralFunction;
use crate::subset::Subset;

/// Evenly spaced values `start, start + step, …` up to `stop` inclusive.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|j| start + j as f64 * step).collect()
}

/// Writes `#`-prefixed metadata lines, a header row and the records.
pub fn write_csv<W: Write, R: CsvRecord>(
    mut w: W,
    metadata: &[(&str, String)],
    rows: &[R],
) -> Result<()> {
    writeln!(w, "# dkpp {}", env!("CARGO_PKG_VERSION"))?;
    for (key, value) in metadata {
        writeln!(w, "# {key}: {value}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(R::header())?;
    for r in rows {
        out.write_record(r.fields())?;
    }
    out.flush()?;
    Ok(())
}

/// A row of an experiment table.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// The centered `⌈√k⌉ × ⌈√k⌉` block of a `side × side` grid, row-major,
/// truncated to `k` items.
pub fn gathered_block(side: usize, k: usize) -> Result<Subset> {
    let w = (k as f64).sqrt().ceil() as usize;
    if k == 0 || w > side {
        return Err(Error::InvalidArgument(format!(
            "cannot place {k} gathered items on a {side}x{side} grid"
        )));
    }
    let start = (side - w) / 2;
    let items: Vec<usize> = (0..w * w)
        .map(|j| (start + j / w) * side + start + j % w)
        .take(k)
        .collect();
    Subset::from_unsorted(items)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DependenceSweepConfig {
    pub grid_side: usize,
    pub bandwidth: f64,
    pub k: usize,
    pub lambdas: Vec<f64>,
    pub n_samples: usize,
    pub seeds: usize,
    /// First seed; run `j` uses `seed + j`. Also seeds the scattered subset.
    pub seed: u64,
}

impl Default for DependenceSweepConfig {
    fn default() -> Self {
        DependenceSweepConfig {
            grid_side: 10,
            bandwidth: 1.0,
            k: 9,
            lambdas: linspace_step(0.0, 2.0, 0.25),
            n_samples: 1000,
            seeds: 30,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DependenceRow {
    pub configuration: &'static str,
    pub lambda: f64,
    pub seed: u64,
    /// `log₁₀ P(A | |A| = k)`.
    pub log10_prob: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub items: Subset,
}

impl CsvRecord for DependenceRow {
    fn header() -> &'static [&'static str] {
        &["configuration", "lambda", "seed", "log10_prob", "std_error", "n_samples", "items"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.configuration.to_string(),
            fmt(self.lambda),
            self.seed.to_string(),
            fmt(self.log10_prob),
            fmt(self.std_error),
            self.n_samples.to_string(),
            self.items.to_string(),
        ]
    }
}

/// Conditional probability of a scattered and a gathered `k`-subset of a
/// grid across Box–Cox parameters.
pub fn dependence_sweep(config: &DependenceSweepConfig) -> Result<Vec<DependenceRow>> {
    let n = config.grid_side * config.grid_side;
    if config.k == 0 || config.k > n {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={n} for a {0}x{0} grid",
            config.grid_side
        )));
    }
    let kernel = gaussian_kernel(&grid_points(config.grid_side), config.bandwidth)?;
    let dpp = Dkpp::new(kernel, SpectralFunction::Log);
    let scattered = random_greedy_cardinality(&dpp, config.k, config.seed)?.subset;
    let gathered = gathered_block(config.grid_side, config.k)?;
    let ln10 = std::f64::consts::LN_10;
    let mut rows = Vec::new();
    for &lambda in &config.lambdas {
        let model = dpp.with_phi(SpectralFunction::boxcox(lambda));
        for j in 0..config.seeds {
            let seed = config.seed + j as u64;
            let mc = McConfig {
                n_samples: config.n_samples,
                seed,
                ..McConfig::default()
            };
            for (name, a) in [("scattered", &scattered), ("gathered", &gathered)] {
                let e = conditional_prob_given_cardinality(&model, a, &mc)?;
                rows.push(DependenceRow {
                    configuration: name,
                    lambda,
                    seed,
                    log10_prob: e.value / ln10,
                    std_error: e.std_error / ln10,
                    n_samples: e.n_samples,
                    items: a.clone(),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZComparisonConfig {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub n_samples: usize,
    pub seeds: usize,
    pub seed: u64,
    pub mean_field: MeanFieldConfig,
}

impl Default for ZComparisonConfig {
    fn default() -> Self {
        ZComparisonConfig {
            n: 16,
            lambdas: linspace_step(0.0, 2.0, 0.25),
            n_samples: 1000,
            seeds: 30,
            seed: 0,
            mean_field: MeanFieldConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZComparisonRow {
    pub lambda: f64,
    pub seed: u64,
    pub log_z: f64,
    pub elbo: f64,
    pub elbo_gap: f64,
    pub is_estimate: f64,
    pub is_std_error: f64,
    pub is_gap: f64,
    pub mean_field_sweeps: usize,
}

impl CsvRecord for ZComparisonRow {
    fn header() -> &'static [&'static str] {
        &[
            "lambda",
            "seed",
            "log_z",
            "elbo",
            "elbo_gap",
            "elbo_ratio",
            "is_estimate",
            "is_std_error",
            "is_gap",
            "is_ratio",
            "mean_field_sweeps",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt(self.lambda),
            self.seed.to_string(),
            fmt(self.log_z),
            fmt(self.elbo),
            fmt(self.elbo_gap),
            fmt(self.elbo_gap.exp()),
            fmt(self.is_estimate),
            fmt(self.is_std_error),
            fmt(self.is_gap),
            fmt(self.is_gap.exp()),
            self.mean_field_sweeps.to_string(),
        ]
    }
}

/// Normalizer estimates from the ELBO and from importance sampling with the
/// mean-field proposal, against enumeration, on random Wishart kernels.
///
/// Run `j` draws its kernel from seed `seed + j` and reuses it across all
/// Box–Cox parameters.
pub fn z_comparison(config: &ZComparisonConfig) -> Result<Vec<ZComparisonRow>> {
    let mut rows = Vec::new();
    for j in 0..config.seeds {
        let seed = config.seed + j as u64;
        let kernel = random_wishart_kernel(config.n, seed);
        let spectra = SpectrumTable::build(&kernel, DEFAULT_ENUMERATION_CAP)?;
        for (li, &lambda) in config.lambdas.iter().enumerate() {
            let table = spectra.log_weights(&SpectralFunction::boxcox(lambda));
            let log_z = table.log_partition();
            let mf = mean_field_fit(
                &table,
                &MeanFieldConfig {
                    seed,
                    ..config.mean_field
                },
            )?;
            let elbo = mf.q.entropy() + multilinear_extension(&table, &mf.q)?;
            let is = importance_log_partition(&table, &mf.q, config.n_samples, seed)?;
            rows.push((
                li,
                ZComparisonRow {
                    lambda,
                    seed,
                    log_z,
                    elbo,
                    elbo_gap: elbo - log_z,
                    is_estimate: is.value,
                    is_std_error: is.std_error,
                    is_gap: is.value - log_z,
                    mean_field_sweeps: mf.sweeps,
                },
            ));
        }
    }
    rows.sort_by_key(|(li, r)| (*li, r.seed));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZVarianceConfig {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub n_samples: usize,
    pub seeds: usize,
    /// Seeds the kernel; importance-sampling run `j` uses `seed + j`.
    pub seed: u64,
    pub mean_field: MeanFieldConfig,
}

impl Default for ZVarianceConfig {
    fn default() -> Self {
        ZVarianceConfig {
            n: 64,
            lambdas: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            n_samples: 1000,
            seeds: 20,
            seed: 0,
            mean_field: MeanFieldConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZVarianceRow {
    pub lambda: f64,
    pub proposal: &'static str,
    pub mean: f64,
    pub variance: f64,
    pub seeds: usize,
    pub n_samples: usize,
}

impl CsvRecord for ZVarianceRow {
    fn header() -> &'static [&'static str] {
        &["lambda", "proposal", "mean_log_z", "variance", "seeds", "n_samples"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt(self.lambda),
            self.proposal.to_string(),
            fmt(self.mean),
            fmt(self.variance),
            self.seeds.to_string(),
            self.n_samples.to_string(),
        ]
    }
}

/// Spread of importance-sampling `log Z` estimates across seeds under the
/// mean-field proposal and under the uniform one-half proposal.
pub fn z_variance(config: &ZVarianceConfig) -> Result<Vec<ZVarianceRow>> {
    if config.seeds < 2 {
        return Err(Error::InvalidArgument(
            "a variance needs at least two seeds".into(),
        ));
    }
    let kernel = random_wishart_kernel(config.n, config.seed);
    let uniform = BernoulliProduct::uniform(config.n, 0.5)?;
    let mut rows = Vec::new();
    for &lambda in &config.lambdas {
        let model = Dkpp::new(kernel.clone(), SpectralFunction::boxcox(lambda));
        let mf = mean_field_fit(
            &model,
            &MeanFieldConfig {
                seed: config.seed,
                ..config.mean_field
            },
        )?;
        for (name, proposal) in [("mean-field", &mf.q), ("uniform", &uniform)] {
            let estimates = (0..config.seeds)
                .map(|j| {
                    importance_log_partition(
                        &model,
                        proposal,
                        config.n_samples,
                        config.seed + j as u64,
                    )
                    .map(|e| e.value)
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean, variance) = mean_var(&estimates);
            rows.push(ZVarianceRow {
                lambda,
                proposal: name,
                mean,
                variance,
                seeds: config.seeds,
                n_samples: config.n_samples,
            });
        }
    }
    Ok(rows)
}
