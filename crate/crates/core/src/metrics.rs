//! Distribution distances and stability statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::OutcomeDistribution;

/// Overlap `Σ √(fᵢ gᵢ)`, clamped to [0,1].
pub fn bhattacharyya(f: &OutcomeDistribution, g: &OutcomeDistribution) -> Result<f64> {
    bhattacharyya_slices(f.probs(), g.probs())
}

pub fn bhattacharyya_slices(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    let bc: f64 = f.iter().zip(g).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(bc.clamp(0.0, 1.0))
}

/// Hellinger distance `√(1 − BC(f, g))`.
///
/// Evaluated as `√(½ Σ (√fᵢ − √gᵢ)²)`, which equals `√(1 − BC)` for
/// normalized inputs and is exactly zero for identical ones.
pub fn hellinger(f: &OutcomeDistribution, g: &OutcomeDistribution) -> Result<f64> {
    hellinger_slices(f.probs(), g.probs())
}

pub fn hellinger_slices(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    let half_sq: f64 = 0.5
        * f.iter()
            .zip(g)
            .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
            .sum::<f64>();
    Ok(half_sq.clamp(0.0, 1.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub distances: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator); zero for a single run.
    pub std: f64,
    pub observable_variance: Option<f64>,
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn stability_report(distances: &[f64], observables: Option<&[f64]>) -> Result<StabilityReport> {
    if distances.is_empty() {
        return Err(Error::Empty("distance list"));
    }
    let (mean, var) = mean_and_var(distances);
    let observable_variance = match observables {
        Some([]) => return Err(Error::Empty("observable list")),
        Some(obs) => Some(mean_and_var(obs).1),
        None => None,
    };
    Ok(StabilityReport {
        distances: distances.to_vec(),
        mean,
        std: var.sqrt(),
        observable_variance,
    })
}
