//! Heat-bath Gibbs sampling on the subset lattice.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::enumerate::LogWeightTable;
use crate::error::{Error, Result};
use crate::inference::marginal_gain;
use crate::model::SetFunction;
use crate::numeric::{sigmoid, stream_rng};
use crate::subset::Subset;

/// Recorded states of a Gibbs run, one per retained sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub states: Vec<Subset>,
    /// Site updates that changed the state.
    pub accepted: usize,
    /// Site updates performed, burn-in included.
    pub proposed: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConfig {
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            sweeps: 1000,
            burn_in: 100,
            thin: 1,
            seed: 0,
        }
    }
}

/// Resamples item `i` from its exact conditional given the other items.
pub fn gibbs_step<F: SetFunction + ?Sized, R: Rng + ?Sized>(
    f: &F,
    current: &Subset,
    i: usize,
    rng: &mut R,
) -> Result<Subset> {
    current.validate(f.ground_size())?;
    let base = current.without(i);
    let p = sigmoid(marginal_gain(f, i, &base)?);
    Ok(if rng.random::<f64>() < p { base.with(i) } else { base })
}

/// Runs a random-scan Gibbs chain from `init`.
pub fn run_chain<F: SetFunction + ?Sized>(
    f: &F,
    init: &Subset,
    config: &ChainConfig,
) -> Result<Chain> {
    let n = f.ground_size();
    init.validate(n)?;
    if config.sweeps == 0 || config.thin == 0 {
        return Err(Error::InvalidArgument(
            "sweeps and thin must be positive".into(),
        ));
    }
    let mut weight = f.log_weight(init)?;
    if weight == f64::NEG_INFINITY {
        return Err(Error::ZeroProbabilityState);
    }
    let mut rng = stream_rng(config.seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    let mut current = init.clone();
    let mut chain = Chain {
        states: Vec::new(),
        accepted: 0,
        proposed: 0,
        seed: config.seed,
        burn_in: config.burn_in,
        thin: config.thin,
    };
    for sweep in 0..config.sweeps {
        order.shuffle(&mut rng);
        for &i in &order {
            let had = current.contains(i);
            let flipped = current.toggled(i);
            let other = f.log_weight(&flipped)?;
            let (with, without) = if had { (weight, other) } else { (other, weight) };
            // The current state has positive weight, so the gain is defined.
            let p = sigmoid(if without == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                with - without
            });
            let include = rng.random::<f64>() < p;
            chain.proposed += 1;
            if include != had {
                current = flipped;
                weight = other;
                chain.accepted += 1;
            }
        }
        if sweep >= config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
            chain.states.push(current.clone());
        }
    }
    Ok(chain)
}

/// Empirical inclusion rate of each item over the chain.
pub fn inclusion_frequencies(chain: &Chain, n: usize) -> Result<Vec<f64>> {
    if chain.states.is_empty() {
        return Err(Error::InvalidArgument("chain has no states".into()));
    }
    let mut counts = vec![0usize; n];
    for s in &chain.states {
        s.validate(n)?;
        for &i in s.items() {
            counts[i] += 1;
        }
    }
    let m = chain.states.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / m).collect())
}

/// Applies one exact heat-bath update of site `i` to a distribution over
/// all subsets, given in binary-counter order.
pub fn site_update(table: &LogWeightTable, dist: &[f64], i: usize) -> Result<Vec<f64>> {
    let n = table.n();
    if dist.len() != 1 << n || i >= n {
        return Err(Error::InvalidArgument(
            "distribution and site must match the table".into(),
        ));
    }
    let bit = 1usize << i;
    let mut out = vec![0.0; dist.len()];
    for lo in (0..dist.len()).filter(|m| m & bit == 0) {
        let hi = lo | bit;
        let mass = dist[lo] + dist[hi];
        if mass == 0.0 {
            continue;
        }
        let (w1, w0) = (table.at(hi as u64), table.at(lo as u64));
        let p = match (w1 == f64::NEG_INFINITY, w0 == f64::NEG_INFINITY) {
            (true, true) => return Err(Error::UndefinedGain(i)),
            (false, true) => 1.0,
            _ => sigmoid(w1 - w0),
        };
        out[hi] = mass * p;
        out[lo] = mass * (1.0 - p);
    }
    Ok(out)
}

impl Chain {
    /// Writes a `#` header line followed by one state per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# seed={} burn_in={} thin={} accepted={} proposed={}",
            self.seed, self.burn_in, self.thin, self.accepted, self.proposed
        )?;
        for s in &self.states {
            writeln!(w, "{s}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Chain> {
        let mut chain = Chain {
            states: Vec::new(),
            accepted: 0,
            proposed: 0,
            seed: 0,
            burn_in: 0,
            thin: 1,
        };
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if let Some(header) = line.trim_start().strip_prefix('#') {
                for field in header.split_whitespace() {
                    let Some((key, value)) = field.split_once('=') else {
                        continue;
                    };
                    let parse = |v: &str| {
                        v.parse::<u64>().map_err(|_| Error::Parse {
                            line: line_no,
                            msg: format!("bad value for {key}: {v}"),
                        })
                    };
                    match key {
                        "seed" => chain.seed = parse(value)?,
                        "burn_in" => chain.burn_in = parse(value)? as usize,
                        "thin" => chain.thin = parse(value)? as usize,
                        "accepted" => chain.accepted = parse(value)? as usize,
                        "proposed" => chain.proposed = parse(value)? as usize,
                        _ => {}
                    }
                }
                continue;
            }
            let s = Subset::parse(&line).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            chain.states.push(s);
        }
        Ok(chain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelMatrix;
    use crate::model::Dkpp;
    use crate::spectral::SpectralFunction;

    #[test]
    fn chain_length_and_round_trip() {
        let m = Dkpp::new(KernelMatrix::identity(3), SpectralFunction::affine(0.0, 0.0));
        let cfg = ChainConfig {
            sweeps: 25,
            burn_in: 0,
            thin: 1,
            seed: 4,
        };
        let chain = run_chain(&m, &Subset::empty(), &cfg).unwrap();
        assert_eq!(chain.states.len(), 25);
        assert!(chain.accepted <= chain.proposed);
        let mut buf = Vec::new();
        chain.write_to(&mut buf).unwrap();
        let back = Chain::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, chain);
    }

    #[test]
    fn burn_in_and_thinning() {
        let m = Dkpp::new(KernelMatrix::identity(2), SpectralFunction::Log);
        let cfg = ChainConfig {
            sweeps: 20,
            burn_in: 5,
            thin: 4,
            seed: 1,
        };
        assert_eq!(run_chain(&m, &Subset::empty(), &cfg).unwrap().states.len(), 4);
    }

    #[test]
    fn frequencies() {
        let chain = |states: Vec<Subset>| Chain {
            states,
            accepted: 0,
            proposed: 0,
            seed: 0,
            burn_in: 0,
            thin: 1,
        };
        let one = Subset::new(vec![0]).unwrap();
        assert_eq!(
            inclusion_frequencies(&chain(vec![one.clone(), one]), 2).unwrap(),
            vec![1.0, 0.0]
        );
        let alt = vec![Subset::empty(), Subset::full(2)];
        assert_eq!(inclusion_frequencies(&chain(alt), 2).unwrap(), vec![0.5, 0.5]);
        assert!(inclusion_frequencies(&chain(vec![]), 2).is_err());
    }

    #[test]
    fn zero_probability_start_rejected() {
        let m = Dkpp::new(
            KernelMatrix::from_diagonal(&[1.0, 0.0]).unwrap(),
            SpectralFunction::Log,
        );
        let err = run_chain(&m, &Subset::full(2), &ChainConfig::default());
        assert!(matches!(err, Err(Error::ZeroProbabilityState)));
    }
}
