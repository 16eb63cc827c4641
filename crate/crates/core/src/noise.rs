//! Error parameters and their drift distributions.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible rotation offset magnitude, in radians.
pub const MAX_ROTATION: f64 = FRAC_PI_4;

/// One qubit's error triple.
///
/// `e0` is the readout flip probability when the qubit is in |0⟩, `e1` the
/// flip probability from |1⟩, and `e2` the Hadamard rotation offset in
/// radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorParams {
    e0: f64,
    e1: f64,
    e2: f64,
}

impl ErrorParams {
    pub fn new(e0: f64, e1: f64, e2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&e0) || !(0.0..=1.0).contains(&e1) {
            return Err(Error::InvalidParams(format!(
                "flip probabilities must lie in [0,1], got e0={e0}, e1={e1}"
            )));
        }
        if e2.is_nan() || e2.abs() > MAX_ROTATION {
            return Err(Error::InvalidParams(format!(
                "rotation offset {e2} exceeds pi/4 in magnitude"
            )));
        }
        Ok(Self { e0, e1, e2 })
    }

    pub fn noiseless() -> Self {
        Self {
            e0: 0.0,
            e1: 0.0,
            e2: 0.0,
        }
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn e0(&self) -> f64 {
        self.e0
    }

    #[inline]
    pub fn e1(&self) -> f64 {
        self.e1
    }

    #[inline]
    pub fn e2(&self) -> f64 {
        self.e2
    }

    #[inline]
    pub fn to_array(&self) -> [f64; 3] {
        [self.e0, self.e1, self.e2]
    }
}

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    alpha: f64,
    beta: f64,
}

impl BetaSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "beta shapes must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub const fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_uniform(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Log of the beta function B(alpha, beta).
    pub fn ln_beta_fn(&self) -> f64 {
        ln_beta(self.alpha, self.beta)
    }

    /// Log density at `x`. Points outside (0,1) give `-inf`; the boundary is
    /// included only where the corresponding exponent vanishes.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        shape_term(self.alpha, x) + shape_term(self.beta, 1.0 - x) - self.ln_beta_fn()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Shapes were validated at construction.
        Beta::new(self.alpha, self.beta)
            .expect("validated beta shapes")
            .sample(rng)
    }
}

#[inline]
fn shape_term(shape: f64, x: f64) -> f64 {
    if shape == 1.0 {
        0.0
    } else if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        (shape - 1.0) * x.ln()
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Moment-matched beta shapes for the given mean and standard deviation.
pub fn beta_from_mean_std(mean: f64, std: f64) -> Result<BetaSpec> {
    let bad = |reason: &str| Error::InvalidDriftSpec {
        mean,
        std,
        reason: reason.to_string(),
    };
    if !(mean > 0.0 && mean < 1.0) {
        return Err(bad("mean must lie strictly inside (0,1)"));
    }
    if !(std > 0.0 && std.is_finite()) {
        return Err(bad("std must be positive"));
    }
    let bound = mean * (1.0 - mean);
    let var = std * std;
    if var >= bound {
        return Err(bad("variance must be below mean*(1-mean)"));
    }
    let k = bound / var - 1.0;
    BetaSpec::new(mean * k, (1.0 - mean) * k).map_err(|_| bad("degenerate shapes"))
}

/// Moment-matched beta fit of samples in (0,1).
pub fn fit_beta_moments(samples: &[f64]) -> Result<BetaSpec> {
    if samples.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if let Some(x) = samples.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::Fit(format!("sample {x} outside (0,1)")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 || samples.iter().all(|x| *x == samples[0]) {
        return Err(Error::Fit("samples have zero variance".into()));
    }
    beta_from_mean_std(mean, var.sqrt()).map_err(|e| Error::Fit(e.to_string()))
}

/// Drift process of a single parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamDrift {
    Beta(BetaSpec),
    /// Held at a constant value; used for noiseless or pinned parameters.
    Fixed(f64),
}

impl ParamDrift {
    /// Builds a drift from mean and std; a zero std pins the parameter.
    pub fn from_mean_std(mean: f64, std: f64) -> Result<Self> {
        if std == 0.0 {
            if !(0.0..=1.0).contains(&mean) {
                return Err(Error::InvalidDriftSpec {
                    mean,
                    std,
                    reason: "fixed value must lie in [0,1]".into(),
                });
            }
            return Ok(ParamDrift::Fixed(mean));
        }
        beta_from_mean_std(mean, std).map(ParamDrift::Beta)
    }

    pub fn mean(&self) -> f64 {
        match self {
            ParamDrift::Beta(b) => b.mean(),
            ParamDrift::Fixed(v) => *v,
        }
    }
}

/// Per-qubit drift processes for (e0, e1, e2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    qubits: Vec<[ParamDrift; 3]>,
}

/// Draws rejected before an out-of-range rotation draw is clamped.
const MAX_ROTATION_REJECTIONS: usize = 1000;

impl DriftModel {
    pub fn new(qubits: Vec<[ParamDrift; 3]>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::Empty("drift model has no qubits"));
        }
        Ok(Self { qubits })
    }

    /// Same beta spec for every parameter of every qubit.
    pub fn uniform_spec(n: usize, spec: BetaSpec) -> Result<Self> {
        Self::new(vec![[ParamDrift::Beta(spec); 3]; n])
    }

    /// Every parameter pinned at zero.
    pub fn noiseless(n: usize) -> Result<Self> {
        Self::new(vec![[ParamDrift::Fixed(0.0); 3]; n])
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[[ParamDrift; 3]] {
        &self.qubits
    }

    /// Mean error triple of each qubit.
    pub fn means(&self) -> Vec<ErrorParams> {
        self.qubits
            .iter()
            .map(|p| ErrorParams {
                e0: p[0].mean(),
                e1: p[1].mean(),
                e2: p[2].mean(),
            })
            .collect()
    }
}

/// Draws one noise realization. Values are drawn qubit by qubit in
/// (e0, e1, e2) order. Rotation draws above pi/4 are redrawn.
pub fn sample_drift<R: Rng + ?Sized>(model: &DriftModel, rng: &mut R) -> Vec<ErrorParams> {
    model
        .qubits
        .iter()
        .map(|[d0, d1, d2]| {
            let e0 = draw(d0, rng);
            let e1 = draw(d1, rng);
            let mut e2 = draw(d2, rng);
            let mut tries = 0;
            while e2 > MAX_ROTATION && tries < MAX_ROTATION_REJECTIONS {
                e2 = draw(d2, rng);
                tries += 1;
            }
            ErrorParams {
                e0,
                e1,
                e2: e2.min(MAX_ROTATION),
            }
        })
        .collect()
}

fn draw<R: Rng + ?Sized>(d: &ParamDrift, rng: &mut R) -> f64 {
    match d {
        ParamDrift::Beta(b) => b.sample(rng),
        ParamDrift::Fixed(v) => *v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn uniform_moments_give_unit_shapes() {
        let b = beta_from_mean_std(0.5, (1.0f64 / 12.0).sqrt()).unwrap();
        assert!((b.alpha() - 1.0).abs() < 1e-12);
        assert!((b.beta() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn high_mean_shapes() {
        // k = 0.09/0.0081 - 1 = 91/9; alpha = 0.9k = 9.1, beta = 0.1k = 91/90
        let b = beta_from_mean_std(0.9, 0.09).unwrap();
        assert!((b.alpha() - 9.1).abs() < 1e-12);
        assert!((b.beta() - 91.0 / 90.0).abs() < 1e-12);

        let mut rng = rng_from_seed(7);
        let xs: Vec<f64> = (0..1_000_000).map(|_| b.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!((m - 0.9).abs() < 1e-3, "{m}");
        assert!((sd - 0.09).abs() < 1e-3, "{sd}");
    }

    #[test]
    fn variance_bound_rejected() {
        assert!(matches!(
            beta_from_mean_std(0.5, 0.6),
            Err(Error::InvalidDriftSpec { .. })
        ));
        assert!(beta_from_mean_std(0.0, 0.1).is_err());
    }

    #[test]
    fn ln_pdf_values() {
        let b = BetaSpec::new(2.0, 2.0).unwrap();
        assert!((b.ln_pdf(0.5) - 1.5f64.ln()).abs() < 1e-12);
        assert_eq!(b.ln_pdf(0.0), f64::NEG_INFINITY);
        assert_eq!(BetaSpec::uniform().ln_pdf(0.0), 0.0);
        assert_eq!(BetaSpec::uniform().ln_pdf(1.2), f64::NEG_INFINITY);
    }

    #[test]
    fn sample_drift_support_and_determinism() {
        let spec = BetaSpec::new(9.1, 91.0 / 90.0).unwrap();
        let model = DriftModel::uniform_spec(4, spec).unwrap();
        let a = sample_drift(&model, &mut rng_from_seed(3));
        let b = sample_drift(&model, &mut rng_from_seed(3));
        assert_eq!(a, b);
        for _ in 0..100 {
            for e in sample_drift(&model, &mut rng_from_seed(11)) {
                for x in e.to_array() {
                    assert!(x > 0.0 && x < 1.0);
                }
            }
        }
    }

    #[test]
    fn sample_drift_means() {
        let means = [0.9, 0.8, 0.85, 0.75];
        let qubits = means
            .iter()
            .map(|&m| {
                let d = ParamDrift::from_mean_std(m, m / 10.0).unwrap();
                [d, ParamDrift::Fixed(0.0), ParamDrift::Fixed(0.0)]
            })
            .collect();
        let model = DriftModel::new(qubits).unwrap();
        let mut rng = rng_from_seed(99);
        let mut acc = [0.0; 4];
        let draws = 100_000;
        for _ in 0..draws {
            for (q, e) in sample_drift(&model, &mut rng).iter().enumerate() {
                acc[q] += e.e0();
            }
        }
        for q in 0..4 {
            let m = acc[q] / draws as f64;
            assert!((m - means[q]).abs() < 0.005, "qubit {q}: {m}");
        }
    }

    #[test]
    fn fit_round_trip() {
        let mut rng = rng_from_seed(5);
        let u = BetaSpec::uniform();
        let xs: Vec<f64> = (0..1_000_000).map(|_| u.sample(&mut rng)).collect();
        let f = fit_beta_moments(&xs).unwrap();
        assert!(
            (f.alpha() - 1.0).abs() < 0.02 && (f.beta() - 1.0).abs() < 0.02,
            "{f:?}"
        );

        let b = BetaSpec::new(9.1, 91.0 / 90.0).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| b.sample(&mut rng)).collect();
        let f = fit_beta_moments(&xs).unwrap();
        assert!((f.mean() - 0.9).abs() < 0.01);
        assert!((f.alpha() / 9.1 - 1.0).abs() < 0.05, "{f:?}");
        assert!((f.beta() / (91.0 / 90.0) - 1.0).abs() < 0.05, "{f:?}");
    }

    #[test]
    fn fit_degenerate() {
        assert!(matches!(fit_beta_moments(&[0.5, 0.5]), Err(Error::Fit(_))));
        assert!(fit_beta_moments(&[0.5]).is_err());
        assert!(fit_beta_moments(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn error_params_ranges() {
        assert!(ErrorParams::new(1.1, 0.0, 0.0).is_err());
        assert!(ErrorParams::new(0.0, 0.0, 0.8).is_err());
        assert!(ErrorParams::new(0.0, 1.0, -FRAC_PI_4).is_ok());
    }

    #[test]
    fn wide_rotation_spec_stays_in_range() {
        let model = DriftModel::uniform_spec(3, BetaSpec::uniform()).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..2000 {
            for e in sample_drift(&model, &mut rng) {
                assert!(e.e2() <= MAX_ROTATION);
            }
        }
    }

    proptest! {
        #[test]
        fn moment_matching_identity(mean in 0.01f64..0.99, frac in 0.01f64..0.99) {
            let std = frac * (mean * (1.0 - mean)).sqrt();
            let b = beta_from_mean_std(mean, std).unwrap();
            prop_assert!((b.mean() - mean).abs() < 1e-12);
            prop_assert!((b.std() - std).abs() < 1e-12 * (1.0 + std));
        }

        #[test]
        fn sampled_params_in_range(a in 0.2f64..20.0, b in 0.2f64..20.0, seed in any::<u64>()) {
            let model = DriftModel::uniform_spec(2, BetaSpec::new(a, b).unwrap());
            prop_assume!(model.is_ok());
            for e in sample_drift(&model.unwrap(), &mut rng_from_seed(seed)) {
                prop_assert!(ErrorParams::new(e.e0(), e.e1(), e.e2()).is_ok());
            }
        }
    }
}
