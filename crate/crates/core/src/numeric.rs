//! Log-space arithmetic and small statistics helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `log Σ exp(x_i)` with max-shift; `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Logistic sigmoid, exact at `±∞`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean and unbiased sample variance; variance is 0 for a single value.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Summary of a sample of log-values `ℓ_j` viewed on the linear scale `w_j = e^{ℓ_j}`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogMean {
    /// `log mean(w)`.
    pub log_mean: f64,
    /// `sd(w) / (√n · mean(w))`, the delta-method error of `log_mean`.
    pub rel_error: f64,
}

pub(crate) fn log_mean(log_values: &[f64]) -> LogMean {
    let n = log_values.len();
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || n == 0 {
        return LogMean {
            log_mean: f64::NEG_INFINITY,
            rel_error: f64::INFINITY,
        };
    }
    let scaled: Vec<f64> = log_values.iter().map(|&l| (l - max).exp()).collect();
    let (mean, var) = mean_var(&scaled);
    LogMean {
        log_mean: max + mean.ln(),
        rel_error: if n > 1 {
            var.sqrt() / ((n as f64).sqrt() * mean)
        } else {
            0.0
        },
    }
}

/// Deterministic RNG for stream `stream` of run `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn lse_handles_infinities() {
        assert_eq!(log_sum_exp([f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_sum_exp([0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, 1.5]), 1.5);
    }

    #[test]
    fn sigmoid_limits() {
        assert_eq!(sigmoid(f64::NEG_INFINITY), 0.0);
        assert_eq!(sigmoid(f64::INFINITY), 1.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
    }

    #[test]
    fn log_mean_matches_direct() {
        let ls = [0.1f64, -0.3, 0.7, 0.2];
        let lm = log_mean(&ls);
        let w: Vec<f64> = ls.iter().map(|l| l.exp()).collect();
        let (m, v) = mean_var(&w);
        assert!((lm.log_mean - m.ln()).abs() < 1e-14);
        assert!((lm.rel_error - v.sqrt() / (2.0 * m)).abs() < 1e-14);
        assert_eq!(log_mean(&[3.0]).rel_error, 0.0);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        let c: u64 = stream_rng(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
