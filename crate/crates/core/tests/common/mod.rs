//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the eigen-based code paths of the library: determinants
//! come from a hand-written LU factorization and set functions are summed
//! directly, so agreement is a genuine cross-check.

#![allow(dead_code)]

use dkpp::{KernelMatrix, Subset};

/// `log det M` by LU with partial pivoting; `-∞` for a singular matrix.
pub fn lu_log_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut log_det = 0.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return f64::NEG_INFINITY;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        log_det += p.abs().ln();
        for r in col + 1..n {
            let factor = a[r][col] / p;
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    log_det
}

pub fn dense(l: &KernelMatrix) -> Vec<Vec<f64>> {
    (0..l.dim())
        .map(|i| (0..l.dim()).map(|j| l.get(i, j)).collect())
        .collect()
}

/// `log det(I + L)`.
pub fn log_det_i_plus(l: &KernelMatrix) -> f64 {
    let mut m = dense(l);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    lu_log_det(&m)
}

/// `log det L[A]` by LU, with `det L[∅] = 1`.
pub fn log_det_sub(l: &KernelMatrix, a: &Subset) -> f64 {
    let m: Vec<Vec<f64>> = a
        .items()
        .iter()
        .map(|&i| a.items().iter().map(|&j| l.get(i, j)).collect())
        .collect();
    lu_log_det(&m)
}

/// `Σ_{i∈A} (a L_ii² + b L_ii + c) + Σ_{i≠j∈A} a L_ij²`, which is
/// `tr(a X² + b X + c I)` for `X = L[A]` written out entrywise.
pub fn quadratic_trace(l: &KernelMatrix, items: &[usize], a: f64, b: f64, c: f64) -> f64 {
    let mut t = 0.0;
    for &i in items {
        let d = l.get(i, i);
        t += a * d * d + b * d + c;
        for &j in items {
            if j != i {
                t += a * l.get(i, j).powi(2);
            }
        }
    }
    t
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Unnormalized log-weights in binary-counter order from any closure.
pub fn brute_log_weights(n: usize, f: impl Fn(&Subset) -> f64) -> Vec<f64> {
    (0..1u64 << n).map(|m| f(&Subset::from_mask(m, n))).collect()
}

/// Normalizes log-weights into probabilities by a plain max-shifted sum.
pub fn normalize(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Whether `i ↦ f(i | A)` is non-increasing along every `A ⊆ B`, checked
/// over all pairs of masks; returns the largest violation.
pub fn worst_submodularity_violation(log_w: &[f64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..1usize << n {
        for b in 0..1usize << n {
            if a & b != a {
                continue;
            }
            for i in (0..n).filter(|i| b >> i & 1 == 0) {
                let ga = log_w[a | 1 << i] - log_w[a];
                let gb = log_w[b | 1 << i] - log_w[b];
                worst = worst.max(gb - ga);
            }
        }
    }
    worst
}
