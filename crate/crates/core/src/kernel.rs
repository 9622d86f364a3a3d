//! Kernel matrices, principal submatrices and spectral traces.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::SpectralFunction;
use crate::subset::Subset;

/// Relative threshold below which eigenvalues are treated as exactly zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// A real symmetric positive semidefinite similarity matrix `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    m: DMatrix<f64>,
}

impl KernelMatrix {
    /// Validates squareness, finiteness, symmetry and positive semidefiniteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("kernel must have at least one item".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("kernel entries"));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        let eig = eigen(m.clone())?;
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if min < -PSD_TOL * max.max(1.0) {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        Ok(KernelMatrix { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        KernelMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `L = V Vᵀ`, positive semidefinite by construction.
    pub fn from_factor(v: &DMatrix<f64>) -> Self {
        let mut m = v * v.transpose();
        symmetrize(&mut m);
        KernelMatrix { m }
    }

    pub fn identity(n: usize) -> Self {
        KernelMatrix {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        let n = d.len();
        KernelMatrix::new(DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// `L[A]`: rows and columns of `L` indexed by `a`.
    pub fn principal_submatrix(&self, a: &Subset) -> Result<DMatrix<f64>> {
        a.validate(self.dim())?;
        Ok(self.submatrix_unchecked(a.items()))
    }

    pub(crate) fn submatrix_unchecked(&self, items: &[usize]) -> DMatrix<f64> {
        let k = items.len();
        DMatrix::from_fn(k, k, |s, t| self.m[(items[s], items[t])])
    }

    /// Relabels items: entry `(i, j)` of the result is `L[perm[i], perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<KernelMatrix> {
        let n = self.dim();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        Ok(KernelMatrix {
            m: DMatrix::from_fn(n, n, |i, j| self.m[(perm[i], perm[j])]),
        })
    }

    /// Writes the plain-text kernel format: `N`, then `N` rows of `N` reals.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        write_square(&mut w, &self.m)?;
        Ok(())
    }

    /// Reads the plain-text kernel format and validates the result.
    pub fn read_from<R: BufRead>(r: R) -> Result<KernelMatrix> {
        let mut lines = r.lines().enumerate();
        let m = read_square(&mut lines)?;
        KernelMatrix::new(m)
    }
}

pub(crate) fn write_square<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(w, "{}", m.nrows())?;
    write_rows(w, m)
}

pub(crate) fn write_rows<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Next non-blank, non-comment line with its 1-based number.
pub(crate) fn next_content_line<I>(lines: &mut I) -> Result<Option<(usize, String)>>
where
    I: Iterator<Item = (usize, std::io::Result<String>)>,
{
    for (idx, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        return Ok(Some((idx + 1, t.to_string())));
    }
    Ok(None)
}

pub(crate) fn parse_row(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>> {
    let row = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad number {t:?}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if row.len() != expected {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("expected {expected} values, got {}", row.len()),
        });
    }
    Ok(row)
}

pub(crate) fn read_matrix_body<I>(lines: &mut I, rows: usize, cols: usize) -> Result<DMatrix<f64>>
where
    I: Iterator<Item = (usize, std::io::Result<String>)>,
{
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let (no, line) = next_content_line(lines)?.ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of file after {i} of {rows} rows"),
        })?;
        for (j, x) in parse_row(no, &line, cols)?.into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

pub(crate) fn read_square<I>(lines: &mut I) -> Result<DMatrix<f64>>
where
    I: Iterator<Item = (usize, std::io::Result<String>)>,
{
    let (no, header) = next_content_line(lines)?.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "empty kernel file".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line: no,
        msg: format!("expected dimension, got {header:?}"),
    })?;
    read_matrix_body(lines, n, n)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Gaussian kernel `L_ij = exp(-|x_i - x_j|² / (2 h²))`.
pub fn gaussian_kernel(points: &[Vec<f64>], bandwidth: f64) -> Result<KernelMatrix> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidArgument("points have mixed dimensions".into()));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("point coordinates"));
    }
    let n = points.len();
    let scale = 2.0 * bandwidth * bandwidth;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let sq: f64 = points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-sq / scale).exp()
    });
    KernelMatrix::new(m)
}

/// Points of a `side × side` grid with unit spacing, row-major.
pub fn grid_points(side: usize) -> Vec<Vec<f64>> {
    (0..side * side)
        .map(|k| vec![(k / side) as f64, (k % side) as f64])
        .collect()
}

/// `L = G Gᵀ / n` with `G` an `n × n` standard-normal matrix drawn from `seed`.
pub fn random_wishart_kernel(n: usize, seed: u64) -> KernelMatrix {
    assert!(n >= 1, "wishart kernel needs n >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let mut m = &g * g.transpose() / n as f64;
    symmetrize(&mut m);
    KernelMatrix { m }
}

fn eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    SymmetricEigen::try_new(m, f64::EPSILON, 1000 + 100 * n).ok_or(Error::EigenNoConvergence(n))
}

fn clamp_threshold(eigenvalues: impl Iterator<Item = f64>) -> f64 {
    let max = eigenvalues.fold(f64::NEG_INFINITY, f64::max);
    EIGEN_CLAMP * max.max(1.0)
}

/// Eigenvalues of a symmetric matrix with near-zero and negative values set to 0.
pub fn clamped_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    match m.nrows() {
        0 => Ok(Vec::new()),
        1 => {
            let x = m[(0, 0)];
            Ok(vec![if x < EIGEN_CLAMP * x.max(1.0) { 0.0 } else { x }])
        }
        _ => {
            let mut vals: Vec<f64> = eigen(m.clone())?.eigenvalues.iter().copied().collect();
            let thr = clamp_threshold(vals.iter().copied());
            for v in vals.iter_mut() {
                if *v < thr {
                    *v = 0.0;
                }
            }
            Ok(vals)
        }
    }
}

/// `Σ φ(μ)` over a clamped spectrum; `-∞` when any term is.
pub fn sum_phi(spectrum: &[f64], phi: &SpectralFunction) -> f64 {
    spectrum.iter().map(|&mu| phi.value(mu)).sum()
}

/// `tr φ(L[A])`. The empty subset gives exactly 0.
pub fn trace_phi(l: &KernelMatrix, a: &Subset, phi: &SpectralFunction) -> Result<f64> {
    a.validate(l.dim())?;
    trace_phi_unchecked(l, a.items(), phi)
}

pub(crate) fn trace_phi_unchecked(
    l: &KernelMatrix,
    items: &[usize],
    phi: &SpectralFunction,
) -> Result<f64> {
    if items.is_empty() {
        return Ok(0.0);
    }
    let spec = clamped_spectrum(&l.submatrix_unchecked(items))?;
    Ok(sum_phi(&spec, phi))
}

/// `φ(x)` as a free function.
pub fn phi_eval(phi: &SpectralFunction, x: f64) -> Result<f64> {
    phi.eval(x)
}

/// `φ'(x)` as a free function.
pub fn phi_derivative_eval(phi: &SpectralFunction, x: f64) -> Result<f64> {
    phi.derivative(x)
}

/// `tr φ(M)` together with the matrix `φ'(M) = U diag(φ'(μ)) Uᵀ`.
pub fn trace_and_derivative(
    m: &DMatrix<f64>,
    phi: &SpectralFunction,
) -> Result<(f64, DMatrix<f64>)> {
    let k = m.nrows();
    if k == 0 {
        return Ok((0.0, DMatrix::zeros(0, 0)));
    }
    let eig = eigen(m.clone())?;
    let thr = clamp_threshold(eig.eigenvalues.iter().copied());
    let mut trace = 0.0;
    let mut dphi = Vec::with_capacity(k);
    for &mu in eig.eigenvalues.iter() {
        let mu = if mu < thr { 0.0 } else { mu };
        trace += phi.value(mu);
        dphi.push(phi.derivative(mu)?);
    }
    let u = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(k, k, |i, j| u[(i, j)] * dphi[j]);
    let mut d = scaled * u.transpose();
    symmetrize(&mut d);
    Ok((trace, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(items: &[usize]) -> Subset {
        Subset::new(items.to_vec()).unwrap()
    }

    #[test]
    fn gaussian_kernel_examples() {
        let l = gaussian_kernel(&[vec![1.0, 2.0], vec![1.0, 2.0]], 1.0).unwrap();
        assert_eq!(l.matrix(), &DMatrix::from_element(2, 2, 1.0));
        let one = gaussian_kernel(&[vec![0.3]], 1.0).unwrap();
        assert_eq!(one.get(0, 0), 1.0);
        let l = gaussian_kernel(&[vec![0.0, 0.0], vec![0.0, 2f64.sqrt()]], 1.0).unwrap();
        assert_abs_diff_eq!(l.get(0, 1), (-1f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn gaussian_kernel_errors() {
        assert!(matches!(gaussian_kernel(&[], 1.0), Err(Error::EmptyPoints)));
        assert!(gaussian_kernel(&[vec![f64::NAN]], 1.0).is_err());
        assert!(gaussian_kernel(&[vec![0.0]], 0.0).is_err());
    }

    #[test]
    fn wishart_is_deterministic() {
        assert_eq!(random_wishart_kernel(5, 3), random_wishart_kernel(5, 3));
        assert_ne!(random_wishart_kernel(5, 3), random_wishart_kernel(5, 4));
        let l = random_wishart_kernel(1, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g: f64 = StandardNormal.sample(&mut rng);
        assert_abs_diff_eq!(l.get(0, 0), g * g, epsilon = 1e-15);
    }

    #[test]
    fn wishart_diagonal_mean_near_one() {
        let l = random_wishart_kernel(16, 0);
        let mean = (0..16).map(|i| l.get(i, i)).sum::<f64>() / 16.0;
        assert!((mean - 1.0).abs() < 0.5, "mean diagonal {mean}");
        assert!(KernelMatrix::new(l.matrix().clone()).is_ok());
    }

    #[test]
    fn constructor_rejects_bad_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(KernelMatrix::new(asym), Err(Error::NotSymmetric { .. })));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            KernelMatrix::new(indefinite),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        assert!(KernelMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn principal_submatrix_examples() {
        let l = KernelMatrix::from_rows(&[
            vec![3.0, 1.0, 0.5],
            vec![1.0, 2.0, 0.2],
            vec![0.5, 0.2, 1.0],
        ])
        .unwrap();
        let s = l.principal_submatrix(&set(&[0, 2])).unwrap();
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]));
        assert_eq!(l.principal_submatrix(&Subset::empty()).unwrap().nrows(), 0);
        assert_eq!(&l.principal_submatrix(&Subset::full(3)).unwrap(), l.matrix());
        assert!(l.principal_submatrix(&set(&[3])).is_err());
    }

    #[test]
    fn trace_phi_examples() {
        let l = KernelMatrix::identity(2);
        let both = set(&[0, 1]);
        assert_eq!(trace_phi(&l, &both, &SpectralFunction::Log).unwrap(), 0.0);

        let d = KernelMatrix::from_diagonal(&[2.0, 3.0]).unwrap();
        let t = trace_phi(&d, &both, &SpectralFunction::boxcox(1.0)).unwrap();
        assert_abs_diff_eq!(t, 3.0, epsilon = 1e-14);

        let ones = KernelMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(
            trace_phi(&ones, &both, &SpectralFunction::Log).unwrap(),
            f64::NEG_INFINITY
        );
        for phi in [SpectralFunction::Log, SpectralFunction::boxcox(0.5)] {
            assert_eq!(trace_phi(&ones, &Subset::empty(), &phi).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_text_round_trip() {
        let l = random_wishart_kernel(4, 11);
        let mut buf = Vec::new();
        l.write_to(&mut buf).unwrap();
        let back = KernelMatrix::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn kernel_reader_reports_bad_rows() {
        let err = KernelMatrix::read_from("2\n1 0\n0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn derivative_matrix_of_log_is_inverse() {
        let l = random_wishart_kernel(4, 2);
        let (t, d) = trace_and_derivative(l.matrix(), &SpectralFunction::Log).unwrap();
        let inv = l.matrix().clone().try_inverse().unwrap();
        assert_abs_diff_eq!(t, l.matrix().determinant().ln(), epsilon = 1e-10);
        assert!((d - inv).abs().max() < 1e-9);
    }
}
