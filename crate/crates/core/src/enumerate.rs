//! Exhaustive tabulation over all `2^N` subsets.
//!
//! Subsets are indexed in binary-counter order: bit `i` of the index selects
//! item `i`, so index 0 is `∅` and index `2^N - 1` is the full ground set.

use crate::error::{Error, Result};
use crate::kernel::{clamped_spectrum, sum_phi, KernelMatrix};
use crate::model::SetFunction;
use crate::numeric::log_sum_exp;
use crate::spectral::SpectralFunction;
use crate::subset::Subset;

/// Default largest ground set accepted by exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= 64 {
        Err(Error::EnumerationCap { n, cap })
    } else {
        Ok(())
    }
}

/// Unnormalized log-probabilities of every subset.
#[derive(Clone, Debug)]
pub struct LogWeightTable {
    n: usize,
    values: Vec<f64>,
}

impl LogWeightTable {
    /// Evaluates `f` on all `2^N` subsets; `N` must not exceed `cap`.
    pub fn build<F: SetFunction + ?Sized>(f: &F, cap: usize) -> Result<Self> {
        let n = f.ground_size();
        check_cap(n, cap)?;
        let values = (0..1u64 << n)
            .map(|mask| f.log_weight(&Subset::from_mask(mask, n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LogWeightTable { n, values })
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if n >= 64 || values.len() != 1usize << n {
            return Err(Error::InvalidArgument(format!(
                "table for {n} items needs 2^{n} entries"
            )));
        }
        Ok(LogWeightTable { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, mask: u64) -> f64 {
        self.values[mask as usize]
    }

    pub fn log_partition(&self) -> f64 {
        log_sum_exp(self.values.iter().copied())
    }

    /// Normalized probabilities in binary-counter order.
    pub fn probabilities(&self) -> Vec<f64> {
        let log_z = self.log_partition();
        self.values.iter().map(|&v| (v - log_z).exp()).collect()
    }

    /// Exact inclusion probabilities `P(i ∈ A)`.
    pub fn marginals(&self) -> Vec<f64> {
        let probs = self.probabilities();
        (0..self.n)
            .map(|i| {
                probs
                    .iter()
                    .enumerate()
                    .filter(|(mask, _)| mask >> i & 1 == 1)
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect()
    }
}

impl SetFunction for LogWeightTable {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn log_weight(&self, a: &Subset) -> Result<f64> {
        a.validate(self.n)?;
        Ok(self.at(a.mask().expect("table ground sets have fewer than 64 items")))
    }
}

/// Clamped spectra of every principal submatrix of one kernel, so that
/// tables for many spectral functions share a single set of eigensolves.
#[derive(Clone, Debug)]
pub struct SpectrumTable {
    n: usize,
    offsets: Vec<usize>,
    eigenvalues: Vec<f64>,
}

impl SpectrumTable {
    pub fn build(kernel: &KernelMatrix, cap: usize) -> Result<Self> {
        let n = kernel.dim();
        check_cap(n, cap)?;
        let mut offsets = Vec::with_capacity((1 << n) + 1);
        let mut eigenvalues = Vec::new();
        offsets.push(0);
        for mask in 0..1u64 << n {
            let a = Subset::from_mask(mask, n);
            let m = kernel.principal_submatrix(&a)?;
            eigenvalues.extend(clamped_spectrum(&m)?);
            offsets.push(eigenvalues.len());
        }
        Ok(SpectrumTable {
            n,
            offsets,
            eigenvalues,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spectrum(&self, mask: u64) -> &[f64] {
        let m = mask as usize;
        &self.eigenvalues[self.offsets[m]..self.offsets[m + 1]]
    }

    pub fn log_weights(&self, phi: &SpectralFunction) -> LogWeightTable {
        let values = (0..1u64 << self.n)
            .map(|mask| sum_phi(self.spectrum(mask), phi))
            .collect();
        LogWeightTable { n: self.n, values }
    }
}
