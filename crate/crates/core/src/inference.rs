//! Bayesian estimation of per-qubit error parameters from shot counts.
//!
//! The posterior over all 3n parameters factorizes into one 3-parameter
//! posterior per qubit, and each of those depends on the data only through
//! the qubit's zero count. Each qubit gets its own random-walk
//! Metropolis-Hastings chain; the MAP estimate is the best chain sample
//! polished by a derivative-free coordinate ascent.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{fit_beta_moments, BetaSpec, ErrorParams, MAX_ROTATION};
use crate::seed::{derive_seed, rng_from_seed};
use crate::simulator::{zero_probability, ShotCounts};

/// Sampler support per parameter. Readout flips live on [0,1]; the rotation
/// offset lives on [0, pi/4], the part of its beta support that is also an
/// admissible rotation.
pub const SUPPORT: [(f64, f64); 3] = [(0.0, 1.0), (0.0, 1.0), (0.0, MAX_ROTATION)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    Uniform,
    Configured,
    Sequential,
}

/// Factorized beta prior over every qubit's (e0, e1, e2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    mode: PriorMode,
    qubits: Vec<[BetaSpec; 3]>,
}

impl PriorSpec {
    pub fn uniform(n: usize) -> Self {
        Self {
            mode: PriorMode::Uniform,
            qubits: vec![[BetaSpec::uniform(); 3]; n],
        }
    }

    pub fn configured(qubits: Vec<[BetaSpec; 3]>) -> Self {
        Self {
            mode: PriorMode::Configured,
            qubits,
        }
    }

    pub fn sequential(qubits: Vec<[BetaSpec; 3]>) -> Self {
        Self {
            mode: PriorMode::Sequential,
            qubits,
        }
    }

    pub fn mode(&self) -> PriorMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, q: usize) -> &[BetaSpec; 3] {
        &self.qubits[q]
    }

    pub fn qubits(&self) -> &[[BetaSpec; 3]] {
        &self.qubits
    }

    pub fn is_uniform(&self) -> bool {
        self.qubits.iter().flatten().all(BetaSpec::is_uniform)
    }
}

/// Number of shots whose bit for `qubit` (0-based) reads 0.
pub fn zero_count(counts: &ShotCounts, qubit: usize) -> Result<u64> {
    if qubit >= counts.n() {
        return Err(Error::QubitIndex {
            index: qubit,
            n: counts.n(),
        });
    }
    Ok(counts
        .dense()
        .iter()
        .enumerate()
        .filter(|(i, _)| i >> qubit & 1 == 0)
        .map(|(_, c)| *c)
        .sum())
}

fn ln_prior_raw(e: &[f64; 3], prior: &[BetaSpec; 3]) -> f64 {
    e.iter().zip(prior).map(|(x, b)| b.ln_pdf(*x)).sum()
}

fn ln_likelihood_raw(zeros: u64, shots: u64, e: &[f64; 3]) -> f64 {
    let p = zero_probability(e[0], e[1], e[2]);
    bernoulli_term(zeros, p) + bernoulli_term(shots - zeros, 1.0 - p)
}

#[inline]
fn bernoulli_term(k: u64, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        k as f64 * p.ln()
    }
}

/// Log prior density; `-inf` outside the beta support.
pub fn log_prior(e: &ErrorParams, prior: &[BetaSpec; 3]) -> f64 {
    ln_prior_raw(&e.to_array(), prior)
}

/// Bernoulli log-likelihood of `zeros` zero readings out of `shots`.
///
/// Panics if `zeros > shots`.
pub fn log_likelihood(zeros: u64, shots: u64, e: &ErrorParams) -> f64 {
    assert!(
        zeros <= shots,
        "zero count {zeros} exceeds shot count {shots}"
    );
    ln_likelihood_raw(zeros, shots, &e.to_array())
}

/// Unnormalized log posterior.
pub fn log_posterior(zeros: u64, shots: u64, e: &ErrorParams, prior: &[BetaSpec; 3]) -> f64 {
    QubitPosterior::new(zeros, shots, *prior)
        .expect("zero count within shots")
        .log_density(&e.to_array())
}

/// Posterior target of a single qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitPosterior {
    zeros: u64,
    shots: u64,
    prior: [BetaSpec; 3],
}

impl QubitPosterior {
    pub fn new(zeros: u64, shots: u64, prior: [BetaSpec; 3]) -> Result<Self> {
        if zeros > shots {
            return Err(Error::Counts(format!(
                "zero count {zeros} exceeds shot count {shots}"
            )));
        }
        Ok(Self {
            zeros,
            shots,
            prior,
        })
    }

    pub fn zeros(&self) -> u64 {
        self.zeros
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn prior(&self) -> &[BetaSpec; 3] {
        &self.prior
    }

    pub fn log_density(&self, e: &[f64; 3]) -> f64 {
        if !in_support(e) {
            return f64::NEG_INFINITY;
        }
        let lp = ln_prior_raw(e, &self.prior);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + ln_likelihood_raw(self.zeros, self.shots, e)
    }
}

fn in_support(e: &[f64; 3]) -> bool {
    e.iter()
        .zip(SUPPORT)
        .all(|(x, (lo, hi))| *x >= lo && *x <= hi)
}

/// Folds `x` back into `[lo, hi]` by mirroring at the walls.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let y = (x - lo).rem_euclid(2.0 * width);
    lo + if y > width { 2.0 * width - y } else { y }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub steps: usize,
    pub burn_in_fraction: f64,
    /// Gaussian proposal std per parameter. Zero pins the parameter at its
    /// initial value.
    pub proposal_scales: [f64; 3],
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            burn_in_fraction: 0.2,
            proposal_scales: [0.02, 0.02, 0.01],
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 100 {
            return Err(Error::ChainConfig(format!(
                "need at least 100 steps, got {}",
                self.steps
            )));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::ChainConfig(format!(
                "burn-in fraction {} outside [0,1)",
                self.burn_in_fraction
            )));
        }
        if self
            .proposal_scales
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(Error::ChainConfig(format!(
                "proposal scales must be non-negative, got {:?}",
                self.proposal_scales
            )));
        }
        Ok(())
    }

    fn burn_in(&self) -> usize {
        (self.steps as f64 * self.burn_in_fraction).floor() as usize
    }
}

/// Recorded Metropolis-Hastings run for one qubit.
///
/// `samples[0]` is the initial state and `samples[i]` the state after step
/// `i`; `burn_in` indexes the first retained sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    samples: Vec<[f64; 3]>,
    log_post: Vec<f64>,
    accepted: usize,
    burn_in: usize,
}

impl Chain {
    /// Assembles a chain from recorded parts.
    pub fn from_parts(
        samples: Vec<[f64; 3]>,
        log_post: Vec<f64>,
        accepted: usize,
        burn_in: usize,
    ) -> Result<Self> {
        if samples.len() != log_post.len() {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                got: log_post.len(),
            });
        }
        if samples.is_empty() || burn_in >= samples.len() {
            return Err(Error::EmptyChain);
        }
        if accepted > samples.len() - 1 {
            return Err(Error::ChainConfig(format!(
                "{accepted} acceptances exceed {} steps",
                samples.len() - 1
            )));
        }
        Ok(Self {
            samples,
            log_post,
            accepted,
            burn_in,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn log_post(&self) -> &[f64] {
        &self.log_post
    }

    pub fn kept(&self) -> &[[f64; 3]] {
        &self.samples[self.burn_in..]
    }

    pub fn kept_log_post(&self) -> &[f64] {
        &self.log_post[self.burn_in..]
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.samples.len() <= 1 {
            return 0.0;
        }
        self.accepted as f64 / (self.samples.len() - 1) as f64
    }

    /// Kept values of one parameter.
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        self.kept().iter().map(|s| s[k]).collect()
    }

    /// Highest-scoring kept sample and its log posterior. Ties keep the
    /// earliest sample.
    pub fn argmax(&self) -> Result<([f64; 3], f64)> {
        let lp = self.kept_log_post();
        let mut best = 0;
        for (i, v) in lp.iter().enumerate() {
            if *v > lp[best] {
                best = i;
            }
        }
        lp.get(best)
            .map(|v| (self.kept()[best], *v))
            .ok_or(Error::EmptyChain)
    }
}

/// Random-walk Metropolis-Hastings on one qubit's posterior.
///
/// Each step perturbs every free parameter by an independent Gaussian,
/// reflects the proposal into the support and accepts with the usual
/// Metropolis ratio. Reflection keeps the proposal symmetric.
pub fn metropolis_hastings<R: Rng + ?Sized>(
    target: &QubitPosterior,
    config: &ChainConfig,
    init: &ErrorParams,
    rng: &mut R,
) -> Result<Chain> {
    config.validate()?;
    let mut state = init.to_array();
    if !in_support(&state) {
        return Err(Error::InitOutsideSupport(state));
    }
    let mut lp = target.log_density(&state);
    let mut samples = Vec::with_capacity(config.steps + 1);
    let mut log_post = Vec::with_capacity(config.steps + 1);
    samples.push(state);
    log_post.push(lp);
    let mut accepted = 0;

    for _ in 0..config.steps {
        let mut proposal = state;
        for (k, x) in proposal.iter_mut().enumerate() {
            let scale = config.proposal_scales[k];
            if scale > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                let (lo, hi) = SUPPORT[k];
                *x = reflect(*x + scale * z, lo, hi);
            }
        }
        let lp_new = target.log_density(&proposal);
        let u: f64 = rng.random();
        if lp_new > lp || u.ln() < lp_new - lp {
            state = proposal;
            lp = lp_new;
            accepted += 1;
        }
        samples.push(state);
        log_post.push(lp);
    }

    Ok(Chain {
        samples,
        log_post,
        accepted,
        burn_in: config.burn_in(),
    })
}

const REFINE_SWEEPS: usize = 50;
const REFINE_TOL: f64 = 1e-6;

/// MAP estimate from a chain: the best kept sample, then coordinate ascent
/// that probes `x ± h` per free coordinate and halves `h` whenever neither
/// side improves. Never lowers the log posterior.
pub fn map_estimate(
    chain: &Chain,
    target: &QubitPosterior,
    proposal_scales: &[f64; 3],
) -> Result<([f64; 3], f64)> {
    let (mut x, mut best) = chain.argmax()?;
    if best == f64::NEG_INFINITY {
        return Ok((x, best));
    }
    let mut step = *proposal_scales;
    for _ in 0..REFINE_SWEEPS {
        if step.iter().all(|h| *h < REFINE_TOL) {
            break;
        }
        for k in 0..3 {
            let h = step[k];
            if h < REFINE_TOL {
                continue;
            }
            let (lo, hi) = SUPPORT[k];
            let mut improved = false;
            for cand in [x[k] - h, x[k] + h] {
                let mut y = x;
                y[k] = cand.clamp(lo, hi);
                let v = target.log_density(&y);
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
            if !improved {
                step[k] = h * 0.5;
            }
        }
    }
    Ok((x, best))
}

/// Per-qubit MAP parameters with chain diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEstimate {
    pub params: Vec<ErrorParams>,
    pub acceptance: Vec<f64>,
    pub log_post: Vec<f64>,
}

impl MapEstimate {
    pub fn n(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone)]
pub struct RegisterInference {
    pub estimate: MapEstimate,
    pub chains: Vec<Chain>,
}

/// Chain start: the prior mean, pulled inside the sampler support.
pub fn prior_mean_init(prior: &[BetaSpec; 3]) -> ErrorParams {
    let mut e = [0.0; 3];
    for k in 0..3 {
        let (lo, hi) = SUPPORT[k];
        e[k] = prior[k].mean().clamp(lo, hi);
    }
    ErrorParams::from_array(e).expect("support lies inside the admissible box")
}

/// Runs one chain per qubit, seeding qubit `q` with `derive_seed(seed, [q])`.
pub fn infer_register(
    counts: &ShotCounts,
    prior: &PriorSpec,
    config: &ChainConfig,
    seed: u64,
) -> Result<RegisterInference> {
    let seeds: Vec<u64> = (0..counts.n())
        .map(|q| derive_seed(seed, &[q as u64]))
        .collect();
    infer_register_with_seeds(counts, prior, config, &seeds)
}

/// As [`infer_register`] with an explicit seed per qubit.
pub fn infer_register_with_seeds(
    counts: &ShotCounts,
    prior: &PriorSpec,
    config: &ChainConfig,
    seeds: &[u64],
) -> Result<RegisterInference> {
    config.validate()?;
    let n = counts.n();
    if prior.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: prior.n(),
        });
    }
    if seeds.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: seeds.len(),
        });
    }
    let per_qubit: Vec<Result<(Chain, [f64; 3], f64)>> = (0..n)
        .into_par_iter()
        .map(|q| {
            let target =
                QubitPosterior::new(zero_count(counts, q)?, counts.total(), *prior.qubit(q))?;
            let init = prior_mean_init(prior.qubit(q));
            let mut rng = rng_from_seed(seeds[q]);
            let chain = metropolis_hastings(&target, config, &init, &mut rng)?;
            let (x, lp) = map_estimate(&chain, &target, &config.proposal_scales)?;
            Ok((chain, x, lp))
        })
        .collect();

    let mut estimate = MapEstimate {
        params: Vec::with_capacity(n),
        acceptance: Vec::with_capacity(n),
        log_post: Vec::with_capacity(n),
    };
    let mut chains = Vec::with_capacity(n);
    for r in per_qubit {
        let (chain, x, lp) = r?;
        estimate.params.push(ErrorParams::from_array(x)?);
        estimate.acceptance.push(chain.acceptance_rate());
        estimate.log_post.push(lp);
        chains.push(chain);
    }
    Ok(RegisterInference { estimate, chains })
}

/// Next-run prior: each parameter's kept samples moment-matched to a beta.
/// Parameters whose samples cannot be fitted fall back to uniform.
pub fn sequential_prior_update(chains: &[Chain]) -> Result<PriorSpec> {
    if chains.is_empty() {
        return Err(Error::EmptyChain);
    }
    let qubits = chains
        .iter()
        .map(|c| {
            if c.kept().is_empty() {
                return Err(Error::EmptyChain);
            }
            let mut specs = [BetaSpec::uniform(); 3];
            for (k, spec) in specs.iter_mut().enumerate() {
                if let Ok(fit) = fit_beta_moments(&c.marginal(k)) {
                    *spec = fit;
                }
            }
            Ok(specs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriorSpec::sequential(qubits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::beta_from_mean_std;
    use crate::simulator::execute;
    use std::f64::consts::FRAC_PI_4;

    fn ep(e0: f64, e1: f64, e2: f64) -> ErrorParams {
        ErrorParams::new(e0, e1, e2).unwrap()
    }

    const UNIFORM: [BetaSpec; 3] = [BetaSpec::uniform(); 3];

    #[test]
    fn zero_counts() {
        let c = ShotCounts::from_strings(4, [("0000", 100)]).unwrap();
        assert_eq!(zero_count(&c, 2).unwrap(), 100);
        let c = ShotCounts::from_strings(2, [("10", 3), ("01", 5)]).unwrap();
        assert_eq!(zero_count(&c, 0).unwrap(), 5);
        assert_eq!(zero_count(&c, 1).unwrap(), 3);
        assert!(matches!(zero_count(&c, 2), Err(Error::QubitIndex { .. })));
    }

    #[test]
    fn prior_values() {
        assert_eq!(log_prior(&ep(0.3, 0.7, 0.1), &UNIFORM), 0.0);
        let b22 = [BetaSpec::new(2.0, 2.0).unwrap(); 3];
        assert!((log_prior(&ep(0.5, 0.5, 0.5), &b22) - 3.0 * 1.5f64.ln()).abs() < 1e-12);
        assert!((log_prior(&ep(0.5, 0.5, 0.5), &b22) - 1.216395).abs() < 1e-6);
        assert_eq!(log_prior(&ep(0.0, 0.5, 0.5), &b22), f64::NEG_INFINITY);
    }

    #[test]
    fn likelihood_values() {
        assert!((log_likelihood(1, 1, &ErrorParams::noiseless()) - 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(log_likelihood(50, 50, &ep(0.0, 0.0, FRAC_PI_4)), 0.0);
        assert_eq!(
            log_likelihood(0, 50, &ep(0.0, 0.0, FRAC_PI_4)),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn posterior_values() {
        let e = ep(0.2, 0.1, 0.3);
        assert_eq!(
            log_posterior(40, 90, &e, &UNIFORM),
            log_likelihood(40, 90, &e)
        );
        let v = log_posterior(1, 2, &ErrorParams::noiseless(), &UNIFORM);
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        let b22 = [BetaSpec::new(2.0, 2.0).unwrap(); 3];
        assert_eq!(
            log_posterior(3, 3, &ep(0.0, 0.5, 0.5), &b22),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn joint_posterior_factorizes() {
        // direct evaluation of the product over qubits and shots
        let mut rng = rng_from_seed(12);
        for _ in 0..20 {
            let n = 3;
            let params: Vec<ErrorParams> = (0..n)
                .map(|_| ep(rng.random(), rng.random(), rng.random::<f64>() * FRAC_PI_4))
                .collect();
            let prior: Vec<[BetaSpec; 3]> = (0..n)
                .map(|_| {
                    [(); 3].map(|_| {
                        BetaSpec::new(
                            0.5 + 3.0 * rng.random::<f64>(),
                            0.5 + 3.0 * rng.random::<f64>(),
                        )
                        .unwrap()
                    })
                })
                .collect();
            let truth = vec![ep(0.1, 0.2, 0.05); n];
            let counts = execute(&truth, &vec![0.0; n], 300, &mut rng).unwrap();

            let mut joint = 0.0;
            for (idx, &c) in counts.dense().iter().enumerate() {
                for (j, e) in params.iter().enumerate() {
                    let p = p_zero_direct(e);
                    let bit = idx >> j & 1;
                    joint += c as f64 * if bit == 0 { p.ln() } else { (1.0 - p).ln() };
                }
            }
            for (j, e) in params.iter().enumerate() {
                for (x, spec) in e.to_array().into_iter().zip(&prior[j]) {
                    let (a, b) = (spec.alpha(), spec.beta());
                    joint += (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()
                        - crate::noise::ln_beta(a, b);
                }
            }
            let summed: f64 = (0..n)
                .map(|j| {
                    let z = zero_count(&counts, j).unwrap();
                    log_posterior(z, counts.total(), &params[j], &prior[j])
                })
                .sum();
            assert!(
                (joint - summed).abs() < 1e-8 * joint.abs().max(1.0),
                "{joint} vs {summed}"
            );
        }
    }

    fn p_zero_direct(e: &ErrorParams) -> f64 {
        (1.0 + e.e1() - e.e0()) / 2.0 - (2.0 * e.e2()).sin() * (e.e0() + e.e1() - 1.0) / 2.0
    }

    #[test]
    fn reflect_stays_inside() {
        assert_eq!(reflect(1.2, 0.0, 1.0), 0.8);
        assert!((reflect(-0.3, 0.0, 1.0) - 0.3).abs() < 1e-15);
        assert!((reflect(2.3, 0.0, 1.0) - 0.3).abs() < 1e-12);
        assert_eq!(reflect(0.4, 0.0, 1.0), 0.4);
    }

    #[test]
    fn flat_target_accepts_everything() {
        let target = QubitPosterior::new(0, 0, UNIFORM).unwrap();
        let init = prior_mean_init(&UNIFORM);
        let chain = metropolis_hastings(
            &target,
            &ChainConfig::default(),
            &init,
            &mut rng_from_seed(1),
        )
        .unwrap();
        assert_eq!(chain.acceptance_rate(), 1.0);
        assert_eq!(chain.len(), 10_001);
        assert_eq!(chain.burn_in(), 2000);

        let (x0, lp0) = chain.argmax().unwrap();
        let (x, lp) = map_estimate(&chain, &target, &[0.02, 0.02, 0.01]).unwrap();
        assert_eq!(lp, lp0);
        assert_eq!(x, x0);
    }

    #[test]
    fn chains_are_deterministic() {
        let target = QubitPosterior::new(3000, 8192, UNIFORM).unwrap();
        let cfg = ChainConfig {
            steps: 2000,
            ..ChainConfig::default()
        };
        let init = prior_mean_init(&UNIFORM);
        let a = metropolis_hastings(&target, &cfg, &init, &mut rng_from_seed(9)).unwrap();
        let b = metropolis_hastings(&target, &cfg, &init, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_invariants_and_errors() {
        let target = QubitPosterior::new(30, 100, UNIFORM).unwrap();
        let cfg = ChainConfig {
            steps: 500,
            ..ChainConfig::default()
        };
        let chain =
            metropolis_hastings(&target, &cfg, &ep(0.5, 0.5, 0.5), &mut rng_from_seed(2)).unwrap();
        assert_eq!(chain.samples().len(), chain.log_post().len());
        assert!(chain.accepted() < chain.len());
        for s in chain.samples() {
            assert!(in_support(s));
        }

        let short = ChainConfig {
            steps: 99,
            ..ChainConfig::default()
        };
        assert!(matches!(
            metropolis_hastings(&target, &short, &ep(0.5, 0.5, 0.5), &mut rng_from_seed(2)),
            Err(Error::ChainConfig(_))
        ));
        assert!(matches!(
            metropolis_hastings(&target, &cfg, &ep(0.5, 0.5, -0.1), &mut rng_from_seed(2)),
            Err(Error::InitOutsideSupport(_))
        ));
    }

    #[test]
    fn argmax_picks_best_kept_sample() {
        let chain = Chain::from_parts(
            vec![[0.9; 3], [0.1; 3], [0.2; 3], [0.3; 3]],
            vec![0.0, -5.0, -2.0, -9.0],
            3,
            1,
        )
        .unwrap();
        assert_eq!(chain.argmax().unwrap(), ([0.2; 3], -2.0));
        assert!(Chain::from_parts(vec![[0.1; 3]], vec![0.0], 0, 1).is_err());
        assert!(Chain::from_parts(vec![[0.1; 3]], vec![0.0, 1.0], 0, 0).is_err());
    }

    #[test]
    fn refinement_is_monotone() {
        let mut rng = rng_from_seed(21);
        for _ in 0..20 {
            let z = rng.random_range(0..=1000u64);
            let prior = [
                BetaSpec::new(2.0, 5.0).unwrap(),
                BetaSpec::uniform(),
                BetaSpec::new(1.5, 8.0).unwrap(),
            ];
            let target = QubitPosterior::new(z, 1000, prior).unwrap();
            let cfg = ChainConfig {
                steps: 300,
                ..ChainConfig::default()
            };
            let chain =
                metropolis_hastings(&target, &cfg, &prior_mean_init(&prior), &mut rng).unwrap();
            let (_, before) = chain.argmax().unwrap();
            let (x, after) = map_estimate(&chain, &target, &cfg.proposal_scales).unwrap();
            assert!(after >= before);
            assert_eq!(target.log_density(&x), after);
        }
    }

    #[test]
    fn empty_register_data_returns_chain_argmax() {
        let counts = ShotCounts::from_dense(2, vec![0; 4]).unwrap();
        let cfg = ChainConfig {
            steps: 200,
            ..ChainConfig::default()
        };
        let r = infer_register(&counts, &PriorSpec::uniform(2), &cfg, 4).unwrap();
        for (q, c) in r.chains.iter().enumerate() {
            let (x, _) = c.argmax().unwrap();
            assert_eq!(r.estimate.params[q].to_array(), x);
            assert_eq!(r.estimate.acceptance[q], 1.0);
        }
    }

    #[test]
    fn sequential_update_fallbacks() {
        let constant =
            Chain::from_parts(vec![[0.3, 0.4, 0.1]; 200], vec![0.0; 200], 0, 40).unwrap();
        let prior = sequential_prior_update(&[constant]).unwrap();
        assert_eq!(prior.mode(), PriorMode::Sequential);
        assert!(prior.is_uniform());
        assert!(sequential_prior_update(&[]).is_err());
    }

    #[test]
    fn sequential_update_recovers_flat_target() {
        let target = QubitPosterior::new(0, 0, UNIFORM).unwrap();
        let cfg = ChainConfig {
            steps: 200_000,
            burn_in_fraction: 0.2,
            proposal_scales: [0.5, 0.5, 0.5],
        };
        let chain = metropolis_hastings(
            &target,
            &cfg,
            &prior_mean_init(&UNIFORM),
            &mut rng_from_seed(6),
        )
        .unwrap();
        let prior = sequential_prior_update(&[chain]).unwrap();
        for k in 0..2 {
            let b = prior.qubit(0)[k];
            assert!(
                (b.alpha() - 1.0).abs() < 0.1 && (b.beta() - 1.0).abs() < 0.1,
                "{b:?}"
            );
        }
    }

    #[test]
    fn informative_prior_keeps_map_near_truth() {
        let truth = ep(0.2, 0.15, 0.06);
        let prior = truth
            .to_array()
            .map(|m| beta_from_mean_std(m, m / 10.0).unwrap());
        let counts = execute(&[truth], &[0.0], 8192, &mut rng_from_seed(30)).unwrap();
        let r = infer_register(
            &counts,
            &PriorSpec::configured(vec![prior]),
            &ChainConfig::default(),
            31,
        )
        .unwrap();
        let est = r.estimate.params[0].to_array();
        for k in 0..3 {
            assert!(
                (est[k] - truth.to_array()[k]).abs() <= 3.0 * prior[k].std(),
                "{k}: {est:?}"
            );
        }
    }

    #[test]
    fn relabeling_qubits_permutes_the_estimate() {
        let truth = [
            ep(0.1, 0.2, 0.05),
            ep(0.3, 0.05, 0.02),
            ep(0.15, 0.15, 0.07),
        ];
        let counts = execute(&truth, &[0.0; 3], 4096, &mut rng_from_seed(40)).unwrap();
        let perm = [2usize, 0, 1];
        // permuted register: new qubit i is old qubit perm[i]
        let mut dense = vec![0u64; 8];
        for (idx, c) in counts.dense().iter().enumerate() {
            let mut new_idx = 0;
            for (i, &old) in perm.iter().enumerate() {
                new_idx |= (idx >> old & 1) << i;
            }
            dense[new_idx] += c;
        }
        let permuted = ShotCounts::from_dense(3, dense).unwrap();
        let cfg = ChainConfig {
            steps: 2000,
            ..ChainConfig::default()
        };
        let seeds = [11u64, 22, 33];
        let a = infer_register_with_seeds(&counts, &PriorSpec::uniform(3), &cfg, &seeds).unwrap();
        let pseeds: Vec<u64> = perm.iter().map(|&o| seeds[o]).collect();
        let b =
            infer_register_with_seeds(&permuted, &PriorSpec::uniform(3), &cfg, &pseeds).unwrap();
        for (i, &old) in perm.iter().enumerate() {
            assert_eq!(b.estimate.params[i], a.estimate.params[old]);
        }
    }

    fn variance(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
    }

    /// Feeding one run's posterior forward as the next run's prior, with the
    /// noise unchanged, should not widen the posterior of any parameter
    /// (averaged over 20 seeds).
    #[test]
    fn second_run_posterior_is_no_wider() {
        let truth = crate::harness::DriftConfig::default()
            .model(4)
            .unwrap()
            .means();
        let config = ChainConfig::default();
        let mut first_var = [[0.0; 3]; 4];
        let mut second_var = [[0.0; 3]; 4];
        for seed in 0..20u64 {
            let counts = execute(&truth, &[0.0; 4], 8192, &mut rng_from_seed(10 * seed)).unwrap();
            let first =
                infer_register(&counts, &PriorSpec::uniform(4), &config, 10 * seed + 1).unwrap();
            let prior = sequential_prior_update(&first.chains).unwrap();
            let counts =
                execute(&truth, &[0.0; 4], 8192, &mut rng_from_seed(10 * seed + 2)).unwrap();
            let second = infer_register(&counts, &prior, &config, 10 * seed + 3).unwrap();
            for q in 0..4 {
                for k in 0..3 {
                    first_var[q][k] += variance(&first.chains[q].marginal(k));
                    second_var[q][k] += variance(&second.chains[q].marginal(k));
                }
            }
        }
        for q in 0..4 {
            for k in 0..3 {
                assert!(second_var[q][k] <= first_var[q][k], "qubit {q} param {k}");
            }
        }
    }
}
