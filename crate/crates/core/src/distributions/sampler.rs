use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{pmf_table, DistributionSpec, TableStatus};
use crate::combinatorics::MultiIndex;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::FormulaMode;

/// Seeded sampler drawing one coordinate at a time from its conditional
/// univariate distribution.
///
/// Finite kinds run the chain forwards with `n - s_{j-1}` trials at stage
/// `j`; negative kinds run it backwards from the last coordinate with
/// `n + s_k - s_j` trials; limit kinds draw coordinates independently.
pub struct Sampler<'a, T: Real> {
    spec: &'a DistributionSpec<T>,
    rng: ChaCha8Rng,
    cdfs: HashMap<(usize, u32), Vec<f64>>,
}

impl<'a, T: Real> Sampler<'a, T> {
    pub fn new(spec: &'a DistributionSpec<T>, seed: u64) -> Result<Self> {
        if spec.mode() != FormulaMode::Corrected {
            return Err(Error::Sampling(
                "printed formulas are not normalised in general; sample in corrected mode".into(),
            ));
        }
        Ok(Sampler {
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cdfs: HashMap::new(),
        })
    }

    fn cdf(&mut self, j: usize, trials: u32) -> Result<&Vec<f64>> {
        if !self.cdfs.contains_key(&(j, trials)) {
            let uni = self.spec.univariate(j, trials)?;
            let table = pmf_table(&uni)?;
            match table.status() {
                TableStatus::Complete => {}
                TableStatus::Truncated => {
                    return Err(Error::Sampling(format!(
                        "conditional table for coordinate {j} hit the enumeration cap"
                    )))
                }
                TableStatus::SubStochastic => {
                    return Err(Error::Sampling(format!(
                        "conditional distribution of coordinate {j} is defective (mass {})",
                        table.total_mass().to_f64()
                    )))
                }
            }
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = table
                .entries()
                .map(|(_, p)| {
                    acc += p.to_f64();
                    acc
                })
                .collect();
            // the remaining tail mass goes to the last enumerated value
            if let Some(last) = cdf.last_mut() {
                *last = 1.0;
            }
            self.cdfs.insert((j, trials), cdf);
        }
        Ok(&self.cdfs[&(j, trials)])
    }

    fn draw_coordinate(&mut self, j: usize, trials: u32) -> Result<u32> {
        let u: f64 = self.rng.gen();
        let cdf = self.cdf(j, trials)?;
        let i = cdf.partition_point(|&c| c <= u);
        Ok(i.min(cdf.len() - 1) as u32)
    }

    pub fn draw(&mut self) -> Result<MultiIndex> {
        let k = self.spec.k();
        let kind = self.spec.kind();
        let n = self.spec.n();
        let mut v = vec![0u32; k];
        if kind.is_limit() {
            for j in 1..=k {
                v[j - 1] = self.draw_coordinate(j, 0)?;
            }
        } else if kind.is_negative() {
            let mut trials = n;
            for j in (1..=k).rev() {
                let x = self.draw_coordinate(j, trials)?;
                v[j - 1] = x;
                trials += x;
            }
        } else {
            let mut trials = n;
            for j in 1..=k {
                let x = self.draw_coordinate(j, trials)?;
                v[j - 1] = x;
                trials -= x;
            }
        }
        MultiIndex::new(v)
    }
}

/// `m` seeded draws.
pub fn sample<T: Real>(spec: &DistributionSpec<T>, seed: u64, m: usize) -> Result<Vec<MultiIndex>> {
    let mut s = Sampler::new(spec, seed)?;
    (0..m).map(|_| s.draw()).collect()
}
