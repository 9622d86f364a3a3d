//! Subsets of the ground set `{0, .., N-1}`.

use std::fmt;

use crate::error::{Error, Result};

/// A subset of the ground set, stored as strictly increasing item indices.
///
/// The derived ordering is lexicographic on the item sequence, so `∅` sorts
/// first and `{0, 1}` sorts before `{1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    /// Builds a subset from strictly increasing indices.
    pub fn new(items: Vec<usize>) -> Result<Self> {
        if items.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedSubset(items));
        }
        Ok(Subset(items))
    }

    /// Sorts `items`; duplicates are rejected.
    pub fn from_unsorted(mut items: Vec<usize>) -> Result<Self> {
        items.sort_unstable();
        Subset::new(items)
    }

    pub fn full(n: usize) -> Self {
        Subset((0..n).collect())
    }

    /// Bit `i` of `mask` selects item `i`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        debug_assert!(n <= 64);
        Subset((0..n).filter(|&i| mask >> i & 1 == 1).collect())
    }

    /// Bitmask view of the subset; `None` when an item does not fit in 64 bits.
    pub fn mask(&self) -> Option<u64> {
        self.0
            .iter()
            .try_fold(0u64, |m, &i| (i < 64).then(|| m | (1u64 << i)))
    }

    /// Builds a subset from an indicator vector.
    pub fn from_indicator(xi: &[bool]) -> Self {
        Subset(
            xi.iter()
                .enumerate()
                .filter_map(|(i, &on)| on.then_some(i))
                .collect(),
        )
    }

    pub fn indicator(&self, n: usize) -> Vec<bool> {
        let mut xi = vec![false; n];
        for &i in &self.0 {
            xi[i] = true;
        }
        xi
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn into_items(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Checks every index against a ground set of `n` items.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= n => Err(Error::IndexOutOfRange { index: last, n }),
            _ => Ok(()),
        }
    }

    pub fn with(&self, item: usize) -> Subset {
        let mut items = self.0.clone();
        if let Err(pos) = items.binary_search(&item) {
            items.insert(pos, item);
        }
        Subset(items)
    }

    pub fn without(&self, item: usize) -> Subset {
        let mut items = self.0.clone();
        if let Ok(pos) = items.binary_search(&item) {
            items.remove(pos);
        }
        Subset(items)
    }

    /// Symmetric difference with `{item}`.
    pub fn toggled(&self, item: usize) -> Subset {
        if self.contains(item) {
            self.without(item)
        } else {
            self.with(item)
        }
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn union(&self, other: &Subset) -> Subset {
        let mut items: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        items.sort_unstable();
        items.dedup();
        Subset(items)
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    /// Items of `self` not in `other`.
    pub fn difference(&self, other: &Subset) -> Subset {
        Subset(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }

    /// Parses space-separated indices in any order.
    pub fn parse(s: &str) -> Result<Subset> {
        let items = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad item index {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Subset::from_unsorted(items)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

/// Iterates over all `k`-subsets of `{0, .., n-1}` in lexicographic order.
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Subset;

    fn next(&mut self) -> Option<Subset> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut pos = k;
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            if next[pos] < self.n - k + pos {
                next[pos] += 1;
                for j in pos + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(Subset(out))
    }
}

/// Binomial coefficient as a float, exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64).round()
}

/// Natural log of the binomial coefficient; stays finite for large `n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_duplicates() {
        assert!(Subset::new(vec![2, 1]).is_err());
        assert!(Subset::new(vec![1, 1]).is_err());
        assert!(Subset::from_unsorted(vec![3, 0, 3]).is_err());
        assert_eq!(Subset::from_unsorted(vec![3, 0]).unwrap().items(), &[0, 3]);
    }

    #[test]
    fn mask_round_trip() {
        let a = Subset::from_mask(0b1011, 5);
        assert_eq!(a.items(), &[0, 1, 3]);
        assert_eq!(a.mask(), Some(0b1011));
        assert_eq!(Subset::new(vec![70]).unwrap().mask(), None);
    }

    #[test]
    fn toggle_is_an_involution() {
        let a = Subset::new(vec![0, 2]).unwrap();
        assert_eq!(a.toggled(2).items(), &[0]);
        assert_eq!(a.toggled(1).items(), &[0, 1, 2]);
        assert_eq!(a.toggled(1).toggled(1), a);
    }

    #[test]
    fn validate_checks_range() {
        let a = Subset::new(vec![0, 4]).unwrap();
        assert!(a.validate(5).is_ok());
        assert!(matches!(
            a.validate(4),
            Err(Error::IndexOutOfRange { index: 4, n: 4 })
        ));
    }

    #[test]
    fn combinations_count_and_order() {
        let all: Vec<_> = Combinations::new(5, 2).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0].items(), &[0, 1]);
        assert_eq!(all[9].items(), &[3, 4]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(3, 4).count(), 0);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 4), 210.0);
        assert_eq!(binomial(100, 9), 1_902_231_808_400.0);
        assert!((ln_binomial(400, 25) - binomial(400, 25).ln()).abs() < 1e-9);
    }

    #[test]
    fn parse_and_display() {
        let a = Subset::parse(" 4 1 2 ").unwrap();
        assert_eq!(a.to_string(), "1 2 4");
        assert_eq!(Subset::parse("").unwrap(), Subset::empty());
    }
}
