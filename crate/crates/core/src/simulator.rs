//! Shot sampler for the uniform-superposition circuit under per-qubit
//! rotation and readout errors.
//!
//! There is no crosstalk and every qubit sees only single-qubit operations,
//! so each qubit's measured bit is an independent Bernoulli draw and the
//! register needs no statevector.
//!
//! Bit convention: qubit `j` (0-based) sits at string position `j` and at bit
//! `j` of the outcome index, so `"01"` is index 2 (qubit 0 read 0, qubit 1
//! read 1).

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::ErrorParams;

pub const MAX_QUBITS: usize = 12;

/// Probability of reading 0 from a qubit prepared by a Hadamard with rotation
/// offset `e2`, seen through a readout channel with flip rates `e0`, `e1`.
///
/// `π₀ = (1 + e1 − e0)/2 − sin(2·e2)·(e0 + e1 − 1)/2`
#[inline]
pub fn zero_probability(e0: f64, e1: f64, e2: f64) -> f64 {
    let p = 0.5 * (1.0 + e1 - e0) - 0.5 * (2.0 * e2).sin() * (e0 + e1 - 1.0);
    p.clamp(0.0, 1.0)
}

pub fn p_zero(e: &ErrorParams) -> f64 {
    zero_probability(e.e0(), e.e1(), e.e2())
}

fn check_register(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        Err(Error::RegisterSize(n))
    } else {
        Ok(())
    }
}

/// Probability vector over the 2ⁿ outcomes of an n-qubit register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_register(n)?;
        if probs.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                got: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| p.is_nan() || **p < 0.0) {
            return Err(Error::Distribution(format!("negative or NaN entry {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Distribution(format!("entries sum to {total}")));
        }
        Ok(Self { n, probs })
    }

    pub(crate) fn from_parts_unchecked(n: usize, probs: Vec<f64>) -> Self {
        Self { n, probs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Ideal output of the uniform-superposition circuit.
pub fn ideal_distribution(n: usize) -> Result<OutcomeDistribution> {
    check_register(n)?;
    let size = 1usize << n;
    Ok(OutcomeDistribution {
        n,
        probs: vec![1.0 / size as f64; size],
    })
}

/// Histogram of measured bitstrings from one execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    n: usize,
    total: u64,
    /// Dense counts indexed by outcome index.
    counts: Vec<u64>,
}

impl ShotCounts {
    pub fn from_dense(n: usize, counts: Vec<u64>) -> Result<Self> {
        check_register(n)?;
        if counts.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                got: counts.len(),
            });
        }
        let total = counts.iter().sum();
        Ok(Self { n, total, counts })
    }

    /// Builds counts from `(bitstring, count)` pairs. Repeated keys add up.
    pub fn from_strings<'a, I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, u64)>,
    {
        check_register(n)?;
        let mut counts = vec![0u64; 1 << n];
        for (key, c) in entries {
            counts[parse_bitstring(key, n)?] += c;
        }
        Self::from_dense(n, counts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dense(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, key: &str) -> Result<u64> {
        Ok(self.counts[parse_bitstring(key, self.n)?])
    }

    /// Observed outcomes only, keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(i, c)| (bitstring(i, self.n), *c))
            .collect()
    }
}

/// Renders an outcome index as a bitstring, qubit 0 first.
pub fn bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|j| if index >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bitstring(key: &str, n: usize) -> Result<usize> {
    if key.len() != n {
        return Err(Error::Counts(format!("key {key:?} does not have {n} bits")));
    }
    key.bytes()
        .enumerate()
        .try_fold(0usize, |acc, (j, b)| match b {
            b'0' => Ok(acc),
            b'1' => Ok(acc | 1 << j),
            _ => Err(Error::Counts(format!("key {key:?} is not a bitstring"))),
        })
}

/// Runs the circuit for `shots` shots.
///
/// Qubit `j` reads 0 with probability `zero_probability(e0, e1, e2 − c_j)`
/// where `c_j` is its compensation offset. One uniform draw is consumed per
/// qubit per shot, shot-major.
pub fn execute<R: Rng + ?Sized>(
    noise: &[ErrorParams],
    compensation: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<ShotCounts> {
    if noise.len() != compensation.len() {
        return Err(Error::LengthMismatch {
            expected: noise.len(),
            got: compensation.len(),
        });
    }
    let n = noise.len();
    check_register(n)?;
    if shots == 0 {
        return Err(Error::Counts("shot count must be at least 1".into()));
    }
    let p0: Vec<f64> = noise
        .iter()
        .zip(compensation)
        .map(|(e, c)| zero_probability(e.e0(), e.e1(), e.e2() - c))
        .collect();
    let mut counts = vec![0u64; 1 << n];
    for _ in 0..shots {
        let mut index = 0usize;
        for (j, p) in p0.iter().enumerate() {
            let u: f64 = rng.random();
            if u >= *p {
                index |= 1 << j;
            }
        }
        counts[index] += 1;
    }
    Ok(ShotCounts {
        n,
        total: shots,
        counts,
    })
}

pub fn counts_to_distribution(counts: &ShotCounts) -> Result<OutcomeDistribution> {
    if counts.total == 0 {
        return Err(Error::Empty("shot counts"));
    }
    let total = counts.total as f64;
    Ok(OutcomeDistribution {
        n: counts.n,
        probs: counts.counts.iter().map(|&c| c as f64 / total).collect(),
    })
}
