use rand::Rng;

use crate::error::{Error, Result};
use crate::subset::Subset;

/// Independent Bernoulli inclusion probabilities `q ∈ [0, 1]^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliProduct {
    q: Vec<f64>,
}

impl BernoulliProduct {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidArgument(
                "Bernoulli parameters must lie in [0, 1]".into(),
            ));
        }
        Ok(BernoulliProduct { q })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        BernoulliProduct::new(vec![p; n])
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// `log Q(ξ_i)` for one coordinate.
    #[inline]
    pub fn log_coordinate(&self, i: usize, included: bool) -> f64 {
        let p = if included { self.q[i] } else { 1.0 - self.q[i] };
        p.ln()
    }

    /// `log Q(A)`; `-∞` when `A` is outside the support.
    pub fn log_mass(&self, a: &Subset) -> f64 {
        let mut members = a.items().iter().peekable();
        let mut total = 0.0;
        for i in 0..self.q.len() {
            let inc = members.next_if(|&&j| j == i).is_some();
            total += self.log_coordinate(i, inc);
        }
        total
    }

    /// `log Q°(A ∩ free)`, restricted to the coordinates in `free`.
    pub fn log_mass_on(&self, a: &Subset, free: &[usize]) -> f64 {
        free.iter()
            .map(|&i| self.log_coordinate(i, a.contains(i)))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Subset {
        let xi: Vec<bool> = self.q.iter().map(|&p| rng.random::<f64>() < p).collect();
        Subset::from_indicator(&xi)
    }

    /// `Σ_i H(q_i)` with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let h = |p: f64| if p <= 0.0 || p >= 1.0 { 0.0 } else { -p * p.ln() };
        self.q.iter().map(|&p| h(p) + h(1.0 - p)).sum()
    }
}
