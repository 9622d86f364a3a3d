//! Approximate and exact maximization of the unnormalized log-probability.

use rand::Rng;

use crate::enumerate::check_cap;
use crate::error::{Error, Result};
use crate::model::SetFunction;
use crate::numeric::stream_rng;
use crate::subset::{Combinations, Subset};

/// Largest ground set searched by [`exhaustive_mode`].
pub const EXHAUSTIVE_MODE_CAP: usize = 20;

/// Stand-in for `-∞` inside the double-greedy arithmetic.
pub const NEG_INF_SENTINEL: f64 = -1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub subset: Subset,
    /// `log P̃(subset)`, evaluated when the result is built.
    pub objective: f64,
    pub method: String,
    pub seed: Option<u64>,
}

impl OptResult {
    pub fn new<F: SetFunction + ?Sized>(
        f: &F,
        subset: Subset,
        method: &str,
        seed: Option<u64>,
    ) -> Result<Self> {
        let objective = f.log_weight(&subset)?;
        Ok(OptResult {
            subset,
            objective,
            method: method.to_string(),
            seed,
        })
    }
}

/// Global maximizer over all subsets; ties go to the lexicographically
/// smallest subset.
pub fn exhaustive_mode<F: SetFunction + ?Sized>(f: &F) -> Result<OptResult> {
    let n = f.ground_size();
    check_cap(n, EXHAUSTIVE_MODE_CAP)?;
    let mut best = Subset::empty();
    let mut best_val = f.log_weight(&best)?;
    for mask in 1..1u64 << n {
        let a = Subset::from_mask(mask, n);
        let v = f.log_weight(&a)?;
        if v > best_val || (v == best_val && a < best) {
            best = a;
            best_val = v;
        }
    }
    OptResult::new(f, best, "exhaustive", None)
}

/// Maximizer over subsets of size exactly `k`, by enumeration.
pub fn exhaustive_cardinality_mode<F: SetFunction + ?Sized>(f: &F, k: usize) -> Result<OptResult> {
    let n = f.ground_size();
    check_k(n, k)?;
    let mut best: Option<(Subset, f64)> = None;
    for a in Combinations::new(n, k) {
        let v = f.log_weight(&a)?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((a, v));
        }
    }
    let (subset, _) = best.expect("at least one k-subset exists");
    OptResult::new(f, subset, "exhaustive-k", None)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "cardinality {k} exceeds ground set size {n}"
        )));
    }
    Ok(())
}

fn sentinel(v: f64) -> f64 {
    if v == f64::NEG_INFINITY {
        NEG_INF_SENTINEL
    } else {
        v
    }
}

/// Adds the item with the largest positive gain until none is positive.
pub fn greedy_mode<F: SetFunction + ?Sized>(f: &F) -> Result<OptResult> {
    let n = f.ground_size();
    let mut a = Subset::empty();
    let mut current = sentinel(f.log_weight(&a)?);
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !a.contains(i)) {
            let v = sentinel(f.log_weight(&a.with(i))?);
            let g = v - current;
            if g > 0.0 && best.is_none_or(|(_, bg)| g > bg) {
                best = Some((i, g));
            }
        }
        match best {
            Some((i, g)) => {
                a = a.with(i);
                current += g;
            }
            None => break,
        }
    }
    OptResult::new(f, a, "greedy", None)
}

/// The two-pointer double greedy; `randomized` selects the randomized
/// variant. Approximation guarantees need a nonnegative submodular objective.
pub fn double_greedy<F: SetFunction + ?Sized>(
    f: &F,
    randomized: bool,
    seed: u64,
) -> Result<OptResult> {
    let n = f.ground_size();
    let mut rng = stream_rng(seed, 0);
    let mut x = Subset::empty();
    let mut y = Subset::full(n);
    let mut fx = sentinel(f.log_weight(&x)?);
    let mut fy = sentinel(f.log_weight(&y)?);
    for i in 0..n {
        let x_add = x.with(i);
        let y_drop = y.without(i);
        let fx_add = sentinel(f.log_weight(&x_add)?);
        let fy_drop = sentinel(f.log_weight(&y_drop)?);
        let a = fx_add - fx;
        let b = fy_drop - fy;
        let include = if randomized {
            let (ap, bp) = (a.max(0.0), b.max(0.0));
            ap + bp == 0.0 || rng.random::<f64>() < ap / (ap + bp)
        } else {
            a >= b
        };
        if include {
            x = x_add;
            fx = fx_add;
        } else {
            y = y_drop;
            fy = fy_drop;
        }
    }
    let method = if randomized {
        "double-greedy-randomized"
    } else {
        "double-greedy"
    };
    OptResult::new(f, x, method, randomized.then_some(seed))
}

/// Random greedy under `|A| = k`: each round adds one item drawn uniformly
/// from the `k` remaining items with the largest gains.
///
/// When fewer than `k` items remain the pool is padded with dummies; a drawn
/// dummy adds nothing, and any rounds lost this way are made up greedily at
/// the end so that exactly `k` items are returned.
pub fn random_greedy_cardinality<F: SetFunction + ?Sized>(
    f: &F,
    k: usize,
    seed: u64,
) -> Result<OptResult> {
    let n = f.ground_size();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cardinality must lie in 1..={n}, got {k}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let mut a = Subset::empty();
    let ranked = |a: &Subset| -> Result<Vec<usize>> {
        let base = sentinel(f.log_weight(a)?);
        let mut scored = Vec::with_capacity(n);
        for i in (0..n).filter(|&i| !a.contains(i)) {
            scored.push((i, sentinel(f.log_weight(&a.with(i))?) - base));
        }
        // Stable sort keeps lower indices first among equal gains.
        scored.sort_by(|x, y| y.1.total_cmp(&x.1));
        Ok(scored.into_iter().map(|(i, _)| i).collect())
    };
    for _ in 0..k {
        let order = ranked(&a)?;
        let r = rng.random_range(0..k);
        if let Some(&i) = order.get(r) {
            a = a.with(i);
        }
    }
    while a.len() < k {
        let order = ranked(&a)?;
        a = a.with(order[0]);
    }
    OptResult::new(f, a, "random-greedy", Some(seed))
}
