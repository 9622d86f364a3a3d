//! Kernel learning by ratio matching.
//!
//! The objective compares each observed basket with its one-item flips:
//! `J = (1/M) Σ_{m,n} σ(-Δ_{mn})²` where
//! `Δ_{mn} = tr φ(L[A_m]) - tr φ(L[A_m ⊕ n])`. It never touches the
//! normalizer, so its cost depends only on basket sizes and the batch.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernel::{
    clamped_spectrum, sum_phi, trace_and_derivative, trace_phi_unchecked, KernelMatrix,
};
use crate::model::Dkpp;
use crate::numeric::{sigmoid, stream_rng};
use crate::spectral::SpectralFunction;
use crate::subset::Subset;

/// Evaluation batches are subsampled once `M · N` exceeds this.
pub const EVAL_SUBSAMPLE_THRESHOLD: usize = 1_000_000;
/// Size of the fixed evaluation subsample.
pub const EVAL_SUBSAMPLE_PAIRS: usize = 100_000;

/// Observed subsets over `n_items` items.
#[derive(Clone, Debug, PartialEq)]
pub struct BasketDataset {
    n_items: usize,
    baskets: Vec<Subset>,
}

impl BasketDataset {
    pub fn new(n_items: usize, baskets: Vec<Subset>) -> Result<Self> {
        if n_items == 0 {
            return Err(Error::EmptyPoints);
        }
        if baskets.is_empty() {
            return Err(Error::InvalidArgument("dataset has no baskets".into()));
        }
        for b in &baskets {
            b.validate(n_items)?;
        }
        Ok(BasketDataset { n_items, baskets })
    }

    /// Draws `m` baskets from a model by exact enumeration.
    pub fn sample_from(model: &Dkpp, m: usize, seed: u64) -> Result<Self> {
        BasketDataset::new(model.n(), model.sample_exact(m, seed)?)
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn baskets(&self) -> &[Subset] {
        &self.baskets
    }

    pub fn len(&self) -> usize {
        self.baskets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baskets.is_empty()
    }

    /// Largest basket size.
    pub fn kappa(&self) -> usize {
        self.baskets.iter().map(Subset::len).max().unwrap_or(0)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "N {}", self.n_items)?;
        for b in &self.baskets {
            writeln!(w, "{b}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads the basket format: a `N <int>` header, then one basket per
    /// line. Blank lines after the header are empty baskets; `#` lines are
    /// comments.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut n_items = None;
        let mut baskets = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            let Some(n) = n_items else {
                if trimmed.is_empty() {
                    continue;
                }
                let mut parts = trimmed.split_whitespace();
                let n = match (parts.next(), parts.next(), parts.next()) {
                    (Some("N"), Some(v), None) => v
                        .parse::<usize>()
                        .map_err(|_| parse_err(format!("bad item count {v:?}")))?,
                    _ => return Err(parse_err("expected header `N <int>`".into())),
                };
                if n == 0 {
                    return Err(parse_err("item count must be positive".into()));
                }
                n_items = Some(n);
                continue;
            };
            let basket = Subset::parse(trimmed).map_err(|e| parse_err(e.to_string()))?;
            basket.validate(n).map_err(|e| parse_err(e.to_string()))?;
            baskets.push(basket);
        }
        let n_items = n_items.ok_or(Error::Parse {
            line: 0,
            msg: "missing `N <int>` header".into(),
        })?;
        BasketDataset::new(n_items, baskets)
    }

    pub fn load(path: &Path) -> Result<Self> {
        BasketDataset::read_from(BufReader::new(File::open(path)?))
    }
}

/// `L = V Vᵀ` kept in factored form.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorizedKernel {
    v: DMatrix<f64>,
}

impl FactorizedKernel {
    pub fn new(v: DMatrix<f64>) -> Result<Self> {
        if v.nrows() == 0 || v.ncols() == 0 {
            return Err(Error::EmptyPoints);
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("factor"));
        }
        Ok(FactorizedKernel { v })
    }

    /// Entries drawn i.i.d. from `N(0, 1/D)`.
    pub fn random(n: usize, d: usize, seed: u64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::EmptyPoints);
        }
        let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("positive scale");
        let mut rng = stream_rng(seed, 0);
        Ok(FactorizedKernel {
            v: DMatrix::from_fn(n, d, |_, _| normal.sample(&mut rng)),
        })
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn kernel(&self) -> KernelMatrix {
        KernelMatrix::from_factor(&self.v)
    }

    /// `V[A,:] V[A,:]ᵀ` without forming the full kernel.
    fn submatrix(&self, items: &[usize]) -> DMatrix<f64> {
        let rows = self.v.select_rows(items);
        &rows * rows.transpose()
    }
}

/// `A ⊕ {n}`: removes `n` if present, adds it otherwise.
pub fn flip(a: &Subset, n: usize) -> Subset {
    a.toggled(n)
}

/// Which `(basket, item)` pairs enter the objective.
#[derive(Clone, Debug, PartialEq)]
pub enum Batch {
    /// All `M · N` pairs, scaled by `1/M`.
    Full,
    /// The listed pairs, scaled by `N / |Ω|` so the expectation under uniform
    /// sampling equals the full objective.
    Pairs(Vec<(usize, usize)>),
}

impl Batch {
    /// `size` pairs drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(data: &BasketDataset, size: usize, rng: &mut R) -> Batch {
        Batch::Pairs(
            (0..size)
                .map(|_| {
                    (
                        rng.random_range(0..data.len()),
                        rng.random_range(0..data.n_items()),
                    )
                })
                .collect(),
        )
    }

    fn scale(&self, data: &BasketDataset) -> Result<f64> {
        match self {
            Batch::Full => Ok(1.0 / data.len() as f64),
            Batch::Pairs(p) if p.is_empty() => {
                Err(Error::InvalidArgument("batch has no pairs".into()))
            }
            Batch::Pairs(p) => Ok(data.n_items() as f64 / p.len() as f64),
        }
    }

    fn check(&self, data: &BasketDataset) -> Result<()> {
        if let Batch::Pairs(pairs) = self {
            for &(m, n) in pairs {
                if m >= data.len() {
                    return Err(Error::IndexOutOfRange {
                        index: m,
                        n: data.len(),
                    });
                }
                if n >= data.n_items() {
                    return Err(Error::IndexOutOfRange {
                        index: n,
                        n: data.n_items(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// `σ(-Δ)²` for the pair flipping `item`; finite for infinite `Δ`, an
/// error for NaN.
fn term(delta: f64, item: usize) -> Result<f64> {
    if delta.is_nan() {
        return Err(Error::UndefinedRatio(item));
    }
    let s = sigmoid(-delta);
    Ok(s * s)
}

fn check_dims(n: usize, data: &BasketDataset) -> Result<()> {
    if n != data.n_items() {
        return Err(Error::InvalidArgument(format!(
            "kernel has {n} items but the data has {}",
            data.n_items()
        )));
    }
    Ok(())
}

fn loss_with<S>(sub: S, data: &BasketDataset, batch: &Batch) -> Result<f64>
where
    S: Fn(&[usize]) -> Result<f64>,
{
    batch.check(data)?;
    let scale = batch.scale(data)?;
    let mut total = 0.0;
    match batch {
        Batch::Full => {
            for a in data.baskets() {
                let ta = sub(a.items())?;
                for n in 0..data.n_items() {
                    total += term(ta - sub(flip(a, n).items())?, n)?;
                }
            }
        }
        Batch::Pairs(pairs) => {
            for &(m, n) in pairs {
                let a = &data.baskets()[m];
                total += term(sub(a.items())? - sub(flip(a, n).items())?, n)?;
            }
        }
    }
    Ok(total * scale)
}

/// Ratio-matching objective for a dense kernel.
pub fn ratio_matching_loss(
    l: &KernelMatrix,
    phi: &SpectralFunction,
    data: &BasketDataset,
    batch: &Batch,
) -> Result<f64> {
    check_dims(l.dim(), data)?;
    loss_with(|items| trace_phi_unchecked(l, items, phi), data, batch)
}

/// Ratio-matching objective for a factored kernel.
pub fn factor_loss(
    fk: &FactorizedKernel,
    phi: &SpectralFunction,
    data: &BasketDataset,
    batch: &Batch,
) -> Result<f64> {
    check_dims(fk.n(), data)?;
    loss_with(
        |items| {
            if items.is_empty() {
                return Ok(0.0);
            }
            let spec = clamped_spectrum(&fk.submatrix(items))?;
            Ok(sum_phi(&spec, phi))
        },
        data,
        batch,
    )
}

/// Trace and derivative matrix of one principal submatrix, or `None` when
/// the trace is `-∞` (the derivative is then undefined but never needed,
/// because the pair weight vanishes).
fn trace_and_grad(m: &DMatrix<f64>, phi: &SpectralFunction) -> Result<(f64, Option<DMatrix<f64>>)> {
    match trace_and_derivative(m, phi) {
        Ok((t, d)) => Ok((t, Some(d))),
        Err(Error::SingularDerivative(s)) => {
            let t = sum_phi(&clamped_spectrum(m)?, phi);
            if t == f64::NEG_INFINITY {
                Ok((t, None))
            } else {
                Err(Error::SingularDerivative(s))
            }
        }
        Err(e) => Err(e),
    }
}

/// Calls `visit(items, φ'(L[items]), coefficient)` for every term of the
/// gradient `Σ w (scatter(A) - scatter(A ⊕ n))`.
fn for_each_gradient_term<S, V>(
    sub: S,
    phi: &SpectralFunction,
    data: &BasketDataset,
    batch: &Batch,
    mut visit: V,
) -> Result<()>
where
    S: Fn(&[usize]) -> DMatrix<f64>,
    V: FnMut(&[usize], &DMatrix<f64>, f64),
{
    batch.check(data)?;
    let scale = batch.scale(data)?;
    let mut pair = |a: &Subset, ta: f64, da: &Option<DMatrix<f64>>, n: usize| -> Result<()> {
        let b = flip(a, n);
        let (tb, db) = trace_and_grad(&sub(b.items()), phi)?;
        let delta = ta - tb;
        if delta.is_nan() {
            return Err(Error::UndefinedRatio(n));
        }
        if delta.is_infinite() {
            return Ok(());
        }
        let s = sigmoid(-delta);
        let w = -2.0 * sigmoid(delta) * s * s * scale;
        if let (Some(da), Some(db)) = (da, db) {
            visit(a.items(), da, w);
            visit(b.items(), &db, -w);
        }
        Ok(())
    };
    match batch {
        Batch::Full => {
            for a in data.baskets() {
                let (ta, da) = trace_and_grad(&sub(a.items()), phi)?;
                for n in 0..data.n_items() {
                    pair(a, ta, &da, n)?;
                }
            }
        }
        Batch::Pairs(pairs) => {
            for &(m, n) in pairs {
                let a = &data.baskets()[m];
                let (ta, da) = trace_and_grad(&sub(a.items()), phi)?;
                pair(a, ta, &da, n)?;
            }
        }
    }
    Ok(())
}

/// Gradient of the objective with respect to the entries of `L`.
pub fn ratio_matching_grad_l(
    l: &KernelMatrix,
    phi: &SpectralFunction,
    data: &BasketDataset,
    batch: &Batch,
) -> Result<DMatrix<f64>> {
    check_dims(l.dim(), data)?;
    let n = l.dim();
    let mut g = DMatrix::zeros(n, n);
    for_each_gradient_term(
        |items| l.submatrix_unchecked(items),
        phi,
        data,
        batch,
        |items, d, w| {
            for (p, &i) in items.iter().enumerate() {
                for (q, &j) in items.iter().enumerate() {
                    g[(i, j)] += w * d[(p, q)];
                }
            }
        },
    )?;
    Ok(g)
}

/// Gradient with respect to the factor, `2 (∂J/∂L) V`, accumulated on the
/// rows of each basket only.
pub fn ratio_matching_grad_v(
    fk: &FactorizedKernel,
    phi: &SpectralFunction,
    data: &BasketDataset,
    batch: &Batch,
) -> Result<DMatrix<f64>> {
    check_dims(fk.n(), data)?;
    let v = fk.v();
    let mut g = DMatrix::zeros(v.nrows(), v.ncols());
    for_each_gradient_term(
        |items| fk.submatrix(items),
        phi,
        data,
        batch,
        |items, d, w| {
            if items.is_empty() {
                return;
            }
            let rows = d * v.select_rows(items) * (2.0 * w);
            for (p, &i) in items.iter().enumerate() {
                let mut dst = g.row_mut(i);
                dst += rows.row(p);
            }
        },
    )?;
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub n_iters: usize,
    /// Pairs per minibatch.
    pub batch_size: usize,
    pub seed: u64,
    pub phi: SpectralFunction,
    /// Columns of the factor `V`.
    pub rank: usize,
    pub momentum: f64,
    /// Iterations between loss evaluations.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            n_iters: 1000,
            batch_size: 100,
            seed: 0,
            phi: SpectralFunction::boxcox(0.5),
            rank: 10,
            momentum: 0.0,
            eval_every: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iter: usize,
    pub loss: f64,
    /// Time spent in gradient steps so far; evaluations are not counted.
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub kernel: FactorizedKernel,
    pub trace: Vec<TracePoint>,
    /// The evaluation loss used a fixed subsample rather than all pairs.
    pub eval_subsampled: bool,
}

/// SGD on the factor from a seeded random start.
pub fn sgd_fit(data: &BasketDataset, config: &TrainConfig) -> Result<FitResult> {
    let init = FactorizedKernel::random(data.n_items(), config.rank, config.seed)?;
    sgd_fit_from(data, config, init)
}

/// SGD on the factor from a given start.
pub fn sgd_fit_from(
    data: &BasketDataset,
    config: &TrainConfig,
    init: FactorizedKernel,
) -> Result<FitResult> {
    if !(config.learning_rate >= 0.0) || !config.learning_rate.is_finite() {
        return Err(Error::InvalidArgument(
            "learning rate must be finite and nonnegative".into(),
        ));
    }
    if config.batch_size == 0 || config.eval_every == 0 {
        return Err(Error::InvalidArgument(
            "batch size and evaluation interval must be positive".into(),
        ));
    }
    check_dims(init.n(), data)?;
    let eval_subsampled = data.len() * data.n_items() > EVAL_SUBSAMPLE_THRESHOLD;
    let eval_batch = if eval_subsampled {
        Batch::sample(data, EVAL_SUBSAMPLE_PAIRS, &mut stream_rng(config.seed, 2))
    } else {
        Batch::Full
    };
    let mut rng = stream_rng(config.seed, 1);
    let mut fk = init;
    let mut velocity = DMatrix::zeros(fk.n(), fk.rank());
    let mut trace = Vec::new();
    let mut train_secs = 0.0;
    let evaluate = |fk: &FactorizedKernel, iter: usize, secs: f64| -> Result<TracePoint> {
        let loss = factor_loss(fk, &config.phi, data, &eval_batch)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                iter,
                detail: format!("loss became {loss}"),
            });
        }
        Ok(TracePoint {
            iter,
            loss,
            wall_ms: secs * 1e3,
        })
    };
    trace.push(evaluate(&fk, 0, 0.0)?);
    for iter in 1..=config.n_iters {
        let start = Instant::now();
        let batch = Batch::sample(data, config.batch_size, &mut rng);
        let grad = ratio_matching_grad_v(&fk, &config.phi, data, &batch)?;
        velocity = velocity * config.momentum - grad * config.learning_rate;
        let v = fk.v() + &velocity;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged {
                iter,
                detail: "factor has non-finite entries".into(),
            });
        }
        fk = FactorizedKernel { v };
        train_secs += start.elapsed().as_secs_f64();
        if iter % config.eval_every == 0 || iter == config.n_iters {
            trace.push(evaluate(&fk, iter, train_secs)?);
        }
    }
    Ok(FitResult {
        kernel: fk,
        trace,
        eval_subsampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_examples() {
        let a = Subset::new(vec![0, 2]).unwrap();
        assert_eq!(flip(&a, 2), Subset::new(vec![0]).unwrap());
        assert_eq!(flip(&Subset::new(vec![0]).unwrap(), 1), Subset::new(vec![0, 1]).unwrap());
        assert_eq!(flip(&flip(&a, 1), 1), a);
    }

    #[test]
    fn basket_file_parsing() {
        let d = BasketDataset::read_from("N 3\n0 2\n\n1".as_bytes()).unwrap();
        assert_eq!(d.n_items(), 3);
        assert_eq!(
            d.baskets(),
            &[
                Subset::new(vec![0, 2]).unwrap(),
                Subset::empty(),
                Subset::new(vec![1]).unwrap()
            ]
        );
        match BasketDataset::read_from("N 3\n0 0\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }
        assert!(BasketDataset::read_from("N 3\n# note\n3\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        assert_eq!(BasketDataset::read_from(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn affine_zero_loss_is_quarter_n() {
        let data = BasketDataset::new(
            4,
            vec![Subset::new(vec![1]).unwrap(), Subset::full(4), Subset::empty()],
        )
        .unwrap();
        let l = KernelMatrix::identity(4);
        let loss = ratio_matching_loss(&l, &SpectralFunction::affine(0.0, 0.0), &data, &Batch::Full)
            .unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_learning_rate_keeps_factor() {
        let data = BasketDataset::new(3, vec![Subset::new(vec![0, 2]).unwrap()]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            n_iters: 5,
            batch_size: 4,
            rank: 3,
            eval_every: 1,
            ..Default::default()
        };
        let init = FactorizedKernel::random(3, 3, 0).unwrap();
        let fit = sgd_fit(&data, &cfg).unwrap();
        assert_eq!(fit.kernel, init);
        assert!(fit.trace.windows(2).all(|w| w[0].loss == w[1].loss));
        assert_eq!(fit.trace.len(), 6);
    }
}
