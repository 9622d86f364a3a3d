//! The discrete kernel point process `P(A) ∝ exp tr φ(L[A])`.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use crate::bernoulli::BernoulliProduct;
use crate::enumerate::{check_cap, LogWeightTable, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::kernel::{
    next_content_line, read_matrix_body, read_square, trace_phi_unchecked, write_rows,
    write_square, KernelMatrix,
};
use crate::numeric::{sigmoid, stream_rng};
use crate::spectral::SpectralFunction;
use crate::subset::Subset;

/// Largest ground set for the exhaustive modularity checks.
pub const MODULARITY_CHECK_CAP: usize = 12;

/// Absolute tolerance of the modularity checks on the log scale.
pub const MODULARITY_TOL: f64 = 1e-9;

/// A set function viewed as an unnormalized log-probability over subsets.
pub trait SetFunction {
    fn ground_size(&self) -> usize;

    /// `log P̃(A)`; `-∞` means probability zero.
    fn log_weight(&self, a: &Subset) -> Result<f64>;
}

impl<T: SetFunction + ?Sized> SetFunction for &T {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn log_weight(&self, a: &Subset) -> Result<f64> {
        (**self).log_weight(a)
    }
}

/// A DKPP: a kernel, a spectral function and an optional cached `log Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dkpp {
    kernel: KernelMatrix,
    phi: SpectralFunction,
    log_z: Option<f64>,
}

impl Dkpp {
    pub fn new(kernel: KernelMatrix, phi: SpectralFunction) -> Self {
        Dkpp {
            kernel,
            phi,
            log_z: None,
        }
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn phi(&self) -> &SpectralFunction {
        &self.phi
    }

    pub fn n(&self) -> usize {
        self.kernel.dim()
    }

    /// The same kernel under another spectral function, without a cached normalizer.
    pub fn with_phi(&self, phi: SpectralFunction) -> Dkpp {
        Dkpp::new(self.kernel.clone(), phi)
    }

    /// Attaches a normalizer computed by the caller, exactly or by estimation.
    pub fn with_log_partition(mut self, log_z: f64) -> Result<Self> {
        if !log_z.is_finite() {
            return Err(Error::NonFinite("log partition"));
        }
        self.log_z = Some(log_z);
        Ok(self)
    }

    /// Attaches the enumerated normalizer.
    pub fn normalized(self) -> Result<Self> {
        let log_z = self.exact_log_partition()?;
        self.with_log_partition(log_z)
    }

    pub fn cached_log_partition(&self) -> Option<f64> {
        self.log_z
    }

    /// `log P̃(A) = tr φ(L[A])`.
    pub fn unnorm_logprob(&self, a: &Subset) -> Result<f64> {
        a.validate(self.n())?;
        trace_phi_unchecked(&self.kernel, a.items(), &self.phi)
    }

    /// Tabulates `log P̃` over all subsets.
    pub fn log_weight_table(&self) -> Result<LogWeightTable> {
        LogWeightTable::build(self, DEFAULT_ENUMERATION_CAP)
    }

    /// `log Z` by enumeration, with the default cap.
    pub fn exact_log_partition(&self) -> Result<f64> {
        self.exact_log_partition_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn exact_log_partition_capped(&self, cap: usize) -> Result<f64> {
        Ok(LogWeightTable::build(self, cap)?.log_partition())
    }

    /// The normalizer used by probability queries: the cached value, or
    /// enumeration when the ground set is small enough.
    pub fn log_partition(&self) -> Result<f64> {
        match self.log_z {
            Some(z) => Ok(z),
            None if self.n() <= DEFAULT_ENUMERATION_CAP => self.exact_log_partition(),
            None => Err(Error::MissingNormalizer(self.n())),
        }
    }

    /// `P(A)`. Without a cached normalizer this enumerates on every call.
    pub fn exact_prob(&self, a: &Subset) -> Result<f64> {
        let log_z = self.log_partition()?;
        Ok((self.unnorm_logprob(a)? - log_z).exp())
    }

    /// Probabilities of all `2^N` subsets in binary-counter order.
    pub fn exact_distribution(&self) -> Result<Vec<f64>> {
        Ok(self.log_weight_table()?.probabilities())
    }

    /// Boltzmann-machine parameters of a quadratic-φ model.
    pub fn to_boltzmann(&self) -> Result<BoltzmannParams> {
        let SpectralFunction::Quadratic { a, b, c } = self.phi else {
            return Err(Error::WrongSpectralFunction {
                expected: "quadratic",
                got: self.phi.to_string(),
            });
        };
        let n = self.n();
        let l = self.kernel.matrix();
        let w = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                a * l[(i, j)] * l[(i, j)]
            }
        });
        let h = (0..n)
            .map(|i| {
                let d = l[(i, i)];
                a * d * d + b * d + c
            })
            .collect();
        Ok(BoltzmannParams { h, w })
    }

    /// Independent inclusion probabilities `σ(b L_ii + c)` of an affine-φ model.
    pub fn to_bernoulli(&self) -> Result<BernoulliProduct> {
        let SpectralFunction::Affine { b, c } = self.phi else {
            return Err(Error::WrongSpectralFunction {
                expected: "affine",
                got: self.phi.to_string(),
            });
        };
        let q = (0..self.n())
            .map(|i| sigmoid(b * self.kernel.get(i, i) + c))
            .collect();
        BernoulliProduct::new(q)
    }

    /// Exhaustive check of `f(S) + f(T) ≥ f(S ∪ T) + f(S ∩ T)` for `f = log P̃`.
    pub fn check_log_submodular(&self) -> Result<ModularityCheck> {
        check_modularity(self, Direction::Sub)
    }

    /// Exhaustive check of `f(S) + f(T) ≤ f(S ∪ T) + f(S ∩ T)`.
    pub fn check_log_supermodular(&self) -> Result<ModularityCheck> {
        check_modularity(self, Direction::Super)
    }

    /// `m` independent exact draws by inverse-CDF over the enumerated distribution.
    pub fn sample_exact(&self, m: usize, seed: u64) -> Result<Vec<Subset>> {
        let probs = self.exact_distribution()?;
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in probs {
            acc += p;
            cdf.push(acc);
        }
        let total = acc;
        let mut rng = stream_rng(seed, 0);
        let n = self.n();
        Ok((0..m)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                Subset::from_mask(idx as u64, n)
            })
            .collect())
    }

    /// Writes the model file: a `phi` descriptor line followed by the kernel.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "phi {}", self.phi)?;
        write_square(&mut w, self.kernel.matrix())?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    /// Reads a model file.
    ///
    /// The first content line is `phi <variant> <coeffs...>`. It is followed by
    /// one of: an inline kernel (`N` and `N` rows), `kernel <path>` naming a
    /// kernel file relative to `base_dir`, or `factor <N> <D>` and `N` rows of a
    /// factor `V` with `L = V Vᵀ`.
    pub fn read_from<R: BufRead>(r: R, base_dir: Option<&Path>) -> Result<Dkpp> {
        let mut lines = r.lines().enumerate();
        let (no, first) = next_content_line(&mut lines)?.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "empty model file".into(),
        })?;
        let phi = first
            .strip_prefix("phi ")
            .ok_or_else(|| Error::Parse {
                line: no,
                msg: "expected `phi <variant> <coeffs...>`".into(),
            })?
            .parse::<SpectralFunction>()
            .map_err(|e| Error::Parse {
                line: no,
                msg: e.to_string(),
            })?;

        let (no, next) = next_content_line(&mut lines)?.ok_or_else(|| Error::Parse {
            line: no,
            msg: "model file has no kernel".into(),
        })?;
        let kernel = if let Some(path) = next.strip_prefix("kernel ") {
            let path = base_dir.map_or_else(|| Path::new(path).to_path_buf(), |d| d.join(path));
            let f = std::fs::File::open(&path)?;
            KernelMatrix::read_from(std::io::BufReader::new(f))?
        } else if let Some(dims) = next.strip_prefix("factor ") {
            let dims: Vec<usize> = dims
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: no,
                    msg: "expected `factor <N> <D>`".into(),
                })?;
            let [n, d] = dims[..] else {
                return Err(Error::Parse {
                    line: no,
                    msg: "expected `factor <N> <D>`".into(),
                });
            };
            let v = read_matrix_body(&mut lines, n, d)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("factor entries"));
            }
            KernelMatrix::from_factor(&v)
        } else {
            let mut chained = std::iter::once((no - 1, Ok(next))).chain(lines);
            KernelMatrix::new(read_square(&mut chained)?)?
        };
        Ok(Dkpp::new(kernel, phi))
    }

    pub fn load(path: &Path) -> Result<Dkpp> {
        let f = std::fs::File::open(path)?;
        Dkpp::read_from(std::io::BufReader::new(f), path.parent())
    }
}

/// Writes a factorized model file (`phi` line, `factor N D`, rows of `V`).
pub fn write_factor_model<W: Write>(
    mut w: W,
    phi: &SpectralFunction,
    v: &DMatrix<f64>,
) -> Result<()> {
    writeln!(w, "phi {phi}")?;
    writeln!(w, "factor {} {}", v.nrows(), v.ncols())?;
    write_rows(&mut w, v)?;
    Ok(())
}

impl SetFunction for Dkpp {
    fn ground_size(&self) -> usize {
        self.n()
    }

    fn log_weight(&self, a: &Subset) -> Result<f64> {
        self.unnorm_logprob(a)
    }
}

/// Fully visible Boltzmann machine `P(ξ) ∝ exp(hᵀξ + ξᵀWξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoltzmannParams {
    pub h: Vec<f64>,
    /// Symmetric with zero diagonal.
    pub w: DMatrix<f64>,
}

impl BoltzmannParams {
    /// `hᵀξ + ξᵀWξ` for the indicator vector of `a`.
    pub fn energy(&self, a: &Subset) -> f64 {
        let items = a.items();
        let bias: f64 = items.iter().map(|&i| self.h[i]).sum();
        let pair: f64 = items
            .iter()
            .flat_map(|&i| items.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.w[(i, j)])
            .sum();
        bias + pair
    }
}

impl SetFunction for BoltzmannParams {
    fn ground_size(&self) -> usize {
        self.h.len()
    }

    fn log_weight(&self, a: &Subset) -> Result<f64> {
        a.validate(self.h.len())?;
        Ok(self.energy(a))
    }
}

/// Outcome of an exhaustive modularity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularityCheck {
    pub holds: bool,
    /// Largest amount by which the inequality fails; `≤ 0` when it holds strictly.
    pub worst_violation: f64,
}

#[derive(Clone, Copy)]
enum Direction {
    Sub,
    Super,
}

fn check_modularity<F: SetFunction>(f: &F, dir: Direction) -> Result<ModularityCheck> {
    let n = f.ground_size();
    check_cap(n, MODULARITY_CHECK_CAP)?;
    let table = LogWeightTable::build(f, MODULARITY_CHECK_CAP)?;
    let mut worst = f64::NEG_INFINITY;
    let size = 1u64 << n;
    for s in 0..size {
        for t in s + 1..size {
            let sides = table.at(s) + table.at(t);
            let joins = table.at(s | t) + table.at(s & t);
            let v = match dir {
                Direction::Sub => excess(joins, sides),
                Direction::Super => excess(sides, joins),
            };
            worst = worst.max(v);
        }
    }
    if size == 1 {
        worst = 0.0;
    }
    Ok(ModularityCheck {
        holds: worst <= MODULARITY_TOL,
        worst_violation: worst,
    })
}

/// `big - small` on the extended reals, with `-∞ - (-∞) = -∞` (no violation).
fn excess(big: f64, small: f64) -> f64 {
    if big == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        big - small
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::random_wishart_kernel;

    fn set(items: &[usize]) -> Subset {
        Subset::new(items.to_vec()).unwrap()
    }

    #[test]
    fn unnormalized_examples() {
        let m = Dkpp::new(random_wishart_kernel(4, 1), SpectralFunction::boxcox(0.3));
        assert_eq!(m.unnorm_logprob(&Subset::empty()).unwrap(), 0.0);
        let id = Dkpp::new(KernelMatrix::identity(4), SpectralFunction::Log);
        assert_eq!(id.unnorm_logprob(&set(&[0, 2, 3])).unwrap(), 0.0);
        let d = Dkpp::new(
            KernelMatrix::from_diagonal(&[4.0]).unwrap(),
            SpectralFunction::boxcox(0.5),
        );
        assert!((d.unnorm_logprob(&set(&[0])).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_model_partition_and_probs() {
        let m = Dkpp::new(random_wishart_kernel(3, 5), SpectralFunction::affine(0.0, 0.0));
        assert!((m.exact_log_partition().unwrap() - 8f64.ln()).abs() < 1e-14);
        let m2 = Dkpp::new(random_wishart_kernel(2, 5), SpectralFunction::affine(0.0, 0.0));
        for mask in 0..4 {
            let p = m2.exact_prob(&Subset::from_mask(mask, 2)).unwrap();
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn dpp_diag_probability() {
        let m = Dkpp::new(KernelMatrix::identity(2), SpectralFunction::Log);
        assert!((m.exact_prob(&set(&[0])).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn enumeration_cap_and_missing_normalizer() {
        let m = Dkpp::new(random_wishart_kernel(5, 0), SpectralFunction::Log);
        assert!(matches!(
            m.exact_log_partition_capped(4),
            Err(Error::EnumerationCap { n: 5, cap: 4 })
        ));
        let big = Dkpp::new(KernelMatrix::identity(30), SpectralFunction::Log);
        assert!(matches!(
            big.exact_prob(&Subset::empty()),
            Err(Error::MissingNormalizer(30))
        ));
        let cached = big.with_log_partition(30.0 * 2f64.ln()).unwrap();
        assert!((cached.exact_prob(&Subset::empty()).unwrap() - 0.5f64.powi(30)).abs() < 1e-20);
    }

    #[test]
    fn boltzmann_examples() {
        let l = KernelMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let bm = Dkpp::new(l.clone(), SpectralFunction::quadratic(1.0, 0.0, 0.0))
            .to_boltzmann()
            .unwrap();
        assert_eq!(bm.w[(0, 1)], 0.25);
        assert_eq!(bm.w[(0, 0)], 0.0);
        assert_eq!(bm.h, vec![1.0, 1.0]);

        let bm0 = Dkpp::new(l.clone(), SpectralFunction::quadratic(0.0, 2.0, -1.0))
            .to_boltzmann()
            .unwrap();
        assert!(bm0.w.iter().all(|&w| w == 0.0));
        assert_eq!(bm0.h, vec![1.0, 1.0]);

        assert!(Dkpp::new(l, SpectralFunction::Log).to_boltzmann().is_err());
    }

    #[test]
    fn bernoulli_examples() {
        let m = Dkpp::new(random_wishart_kernel(3, 2), SpectralFunction::affine(0.0, 0.0));
        assert!(m.to_bernoulli().unwrap().q().iter().all(|&q| q == 0.5));
        let d = Dkpp::new(
            KernelMatrix::from_diagonal(&[2.0]).unwrap(),
            SpectralFunction::affine(1.0, -2.0),
        );
        assert_eq!(d.to_bernoulli().unwrap().q(), &[0.5]);
        assert!(d.with_phi(SpectralFunction::Log).to_bernoulli().is_err());
    }

    #[test]
    fn affine_is_log_modular() {
        let m = Dkpp::new(random_wishart_kernel(5, 8), SpectralFunction::affine(0.7, -0.3));
        assert!(m.check_log_submodular().unwrap().holds);
        assert!(m.check_log_supermodular().unwrap().holds);
    }

    #[test]
    fn modularity_check_cap() {
        let m = Dkpp::new(KernelMatrix::identity(13), SpectralFunction::Log);
        assert!(matches!(
            m.check_log_submodular(),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn exact_sampler_matches_distribution() {
        let m = Dkpp::new(random_wishart_kernel(3, 4), SpectralFunction::boxcox(0.5));
        let probs = m.exact_distribution().unwrap();
        let draws = m.sample_exact(40_000, 1).unwrap();
        let mut counts = vec![0usize; 8];
        for d in &draws {
            counts[d.mask().unwrap() as usize] += 1;
        }
        for (c, p) in counts.iter().zip(&probs) {
            let f = *c as f64 / 40_000.0;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / 40_000.0).sqrt() + 1e-3);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let m = Dkpp::new(random_wishart_kernel(4, 3), SpectralFunction::quadratic(1.0, -0.5, 0.25));
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = Dkpp::read_from(buf.as_slice(), None).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn factor_model_file() {
        let v = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 2.0]);
        let mut buf = Vec::new();
        write_factor_model(&mut buf, &SpectralFunction::boxcox(1.5), &v).unwrap();
        let m = Dkpp::read_from(buf.as_slice(), None).unwrap();
        assert_eq!(m.phi(), &SpectralFunction::boxcox(1.5));
        assert_eq!(m.kernel(), &KernelMatrix::from_factor(&v));
    }

    #[test]
    fn model_file_rejects_missing_phi() {
        let err = Dkpp::read_from("1\n1\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
