use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::samples::GenSample;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitLevel {
    Sample,
    Topic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub level: SplitLevel,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(fractions: (f64, f64, f64), level: SplitLevel, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train: fractions.0,
            validation: fractions.1,
            test: fractions.2,
            level,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 85/5/10 at sample level.
    pub fn sample_level(seed: u64) -> Self {
        SplitSpec {
            train: 0.85,
            validation: 0.05,
            test: 0.10,
            level: SplitLevel::Sample,
            seed,
        }
    }

    /// 80/10/10 at topic level.
    pub fn topic_level(seed: u64) -> Self {
        SplitSpec {
            train: 0.80,
            validation: 0.10,
            test: 0.10,
            level: SplitLevel::Topic,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidInput(format!("split fractions must be >= 0, got {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("split fractions must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

fn raw_sizes(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let mut sizes = fractions.map(|f| (n as f64 * f).round() as usize);
    let total: usize = sizes.iter().sum();
    let eligible: Vec<usize> = (0..3).filter(|&i| fractions[i] > 0.0).collect();
    if total < n {
        for i in eligible.iter().cycle().take(n - total) {
            sizes[*i] += 1;
        }
    } else if total > n {
        let mut excess = total - n;
        while excess > 0 {
            for &i in &eligible {
                if excess > 0 && sizes[i] > 0 {
                    sizes[i] -= 1;
                    excess -= 1;
                }
            }
        }
    }
    sizes
}

fn sizes_ok(sizes: &[usize; 3], fractions: &[f64; 3]) -> bool {
    (0..3).all(|i| fractions[i] == 0.0 || sizes[i] > 0)
}

/// Partition sizes for `n` units: each fraction rounded to the nearest
/// integer, then any shortfall or excess settled one unit at a time in
/// train, validation, test order. Every non-zero fraction must receive at
/// least one unit.
pub fn split_sizes(n: usize, spec: &SplitSpec) -> Result<[usize; 3]> {
    spec.validate()?;
    let fractions = spec.fractions();
    let sizes = raw_sizes(n, fractions);
    if sizes_ok(&sizes, &fractions) {
        return Ok(sizes);
    }
    let floor = fractions.iter().filter(|&&f| f > 0.0).count();
    let required = (floor.max(1)..)
        .take(1_000_000)
        .find(|&m| sizes_ok(&raw_sizes(m, fractions), &fractions))
        .unwrap_or(usize::MAX);
    Err(Error::InsufficientUnits {
        required,
        available: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Shuffles unit indices with the spec's seed and cuts them into three
/// partitions. Each partition keeps the original relative order.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<Partition<usize>> {
    let sizes = split_sizes(n, spec)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut parts = [
        idx[..sizes[0]].to_vec(),
        idx[sizes[0]..sizes[0] + sizes[1]].to_vec(),
        idx[sizes[0] + sizes[1]..].to_vec(),
    ];
    parts.iter_mut().for_each(|p| p.sort_unstable());
    let [train, validation, test] = parts;
    Ok(Partition {
        train,
        validation,
        test,
    })
}

pub fn split_units<T: Clone>(units: &[T], spec: &SplitSpec) -> Result<Partition<T>> {
    let p = split_indices(units.len(), spec)?;
    let pick = |v: &[usize]| v.iter().map(|&i| units[i].clone()).collect();
    Ok(Partition {
        train: pick(&p.train),
        validation: pick(&p.validation),
        test: pick(&p.test),
    })
}

/// Splits samples at the spec's level. At topic level, samples sharing a
/// topic name (samples without one stand alone) always land in the same
/// partition.
pub fn split_samples(samples: &[GenSample], spec: &SplitSpec) -> Result<Partition<GenSample>> {
    match spec.level {
        SplitLevel::Sample => split_units(samples, spec),
        SplitLevel::Topic => {
            let mut groups: BTreeMap<(bool, String), Vec<usize>> = BTreeMap::new();
            let mut order: Vec<(bool, String)> = Vec::new();
            for (i, s) in samples.iter().enumerate() {
                let key = match &s.topic {
                    Some(t) => (true, t.clone()),
                    None => (false, format!("#{i}")),
                };
                let entry = groups.entry(key.clone()).or_default();
                if entry.is_empty() {
                    order.push(key);
                }
                entry.push(i);
            }
            let p = split_indices(order.len(), spec)?;
            let expand = |gs: &[usize]| {
                let mut idx: Vec<usize> = gs.iter().flat_map(|&g| groups[&order[g]].iter().copied()).collect();
                idx.sort_unstable();
                idx.into_iter().map(|i| samples[i].clone()).collect()
            };
            Ok(Partition {
                train: expand(&p.train),
                validation: expand(&p.validation),
                test: expand(&p.test),
            })
        }
    }
}
