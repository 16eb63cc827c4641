//! Readout-error inversion and coherent angle compensation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::MapEstimate;
use crate::noise::ErrorParams;
use crate::simulator::OutcomeDistribution;

/// Matrices with `|e0 + e1 − 1|` at or below this are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-6;

/// Single-qubit readout channel. Columns are true states, rows observed
/// states: `[[1−e0, e1], [e0, 1−e1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    m: [[f64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn is_invertible(&self) -> bool {
        self.determinant().abs() > SINGULAR_TOL
    }

    pub fn inverse(&self) -> Option<[[f64; 2]; 2]> {
        if !self.is_invertible() {
            return None;
        }
        let d = self.determinant();
        let [[a, b], [c, e]] = self.m;
        Some([[e / d, -b / d], [-c / d, a / d]])
    }
}

pub fn confusion_matrix(e0: f64, e1: f64) -> ConfusionMatrix {
    ConfusionMatrix {
        m: [[1.0 - e0, e1], [e0, 1.0 - e1]],
    }
}

/// Applies one 2×2 matrix per qubit to a 2ⁿ vector, qubit `j` acting on
/// bit `j` of the index.
fn contract(probs: &mut [f64], mats: &[[[f64; 2]; 2]]) {
    for (j, m) in mats.iter().enumerate() {
        let stride = 1usize << j;
        for i in 0..probs.len() {
            if i & stride != 0 {
                continue;
            }
            let (a, b) = (probs[i], probs[i | stride]);
            probs[i] = m[0][0] * a + m[0][1] * b;
            probs[i | stride] = m[1][0] * a + m[1][1] * b;
        }
    }
}

fn inverses(n: usize, estimates: &[ErrorParams]) -> Result<Vec<[[f64; 2]; 2]>> {
    if estimates.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: estimates.len(),
        });
    }
    estimates
        .iter()
        .enumerate()
        .map(|(q, e)| {
            confusion_matrix(e.e0(), e.e1())
                .inverse()
                .ok_or(Error::MitigationSingular {
                    qubit: q + 1,
                    sum: e.e0() + e.e1(),
                })
        })
        .collect()
}

/// Pushes a true-state distribution through each qubit's readout channel.
pub fn apply_readout(
    dist: &OutcomeDistribution,
    params: &[ErrorParams],
) -> Result<OutcomeDistribution> {
    if params.len() != dist.n() {
        return Err(Error::LengthMismatch {
            expected: dist.n(),
            got: params.len(),
        });
    }
    let mats: Vec<_> = params
        .iter()
        .map(|e| confusion_matrix(e.e0(), e.e1()).entries())
        .collect();
    let mut probs = dist.probs().to_vec();
    contract(&mut probs, &mats);
    Ok(OutcomeDistribution::from_parts_unchecked(dist.n(), probs))
}

/// Inverse readout channel applied to `dist` with no clipping. Entries may
/// be negative; they still sum to one.
pub fn invert_readout_raw(
    dist: &OutcomeDistribution,
    estimates: &[ErrorParams],
) -> Result<Vec<f64>> {
    let inv = inverses(dist.n(), estimates)?;
    let mut probs = dist.probs().to_vec();
    contract(&mut probs, &inv);
    Ok(probs)
}

/// Readout mitigation by tensor-structured matrix inversion. Negative
/// entries of the inverted vector are clipped to zero and the result is
/// renormalized.
pub fn invert_readout(
    dist: &OutcomeDistribution,
    estimates: &[ErrorParams],
) -> Result<OutcomeDistribution> {
    let mut probs = invert_readout_raw(dist, estimates)?;
    for p in probs.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Distribution(
            "mitigated distribution has no positive mass".into(),
        ));
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(OutcomeDistribution::from_parts_unchecked(dist.n(), probs))
}

/// Rotation offsets to subtract from each qubit's commanded angle.
pub fn compensation_offsets(estimate: &MapEstimate) -> Vec<f64> {
    offsets_from_params(&estimate.params)
}

pub fn offsets_from_params(params: &[ErrorParams]) -> Vec<f64> {
    params.iter().map(ErrorParams::e2).collect()
}
