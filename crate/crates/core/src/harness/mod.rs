//! Three-arm drift experiment: unmitigated, static and adaptive execution of
//! the uniform-superposition circuit, scored by Hellinger distance to the
//! ideal output.
//!
//! Seeds are derived from `(root, phase, arm, run)` so every run is
//! reproducible on its own. The drift draw omits the arm, so run `r` of each
//! arm faces the same noise realization and arms can be compared run by run.

mod config;
mod output;

pub use config::{Arm, DriftConfig, ExperimentConfig, RotationUnit};
pub use output::{render_svg, summary_json, to_csv_string};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
pub use crate::inference::PriorMode;
use crate::inference::{infer_register, sequential_prior_update, MapEstimate, PriorSpec};
use crate::metrics::{hellinger, stability_report, StabilityReport};
use crate::mitigation::{invert_readout, offsets_from_params};
use crate::noise::{sample_drift, ErrorParams};
use crate::seed::{derive_seed, rng_from_seed};
use crate::simulator::{counts_to_distribution, execute, ideal_distribution, OutcomeDistribution};

const PHASE_DRIFT: u64 = 1;
const PHASE_PROBE: u64 = 2;
const PHASE_CHAIN: u64 = 3;
const PHASE_FINAL: u64 = 4;

/// Acceptance rates outside this band are reported as warnings.
pub const ACCEPTANCE_BAND: (f64, f64) = (0.1, 0.7);

fn phase_seed(config: &ExperimentConfig, phase: u64, arm: Arm, run: usize) -> u64 {
    derive_seed(config.seed, &[phase, arm.id(), run as u64])
}

/// Noise realization of run `run`, shared by every arm.
pub fn drift_for_run(config: &ExperimentConfig, run: usize) -> Result<Vec<ErrorParams>> {
    let model = config.drift_model()?;
    let mut rng = rng_from_seed(derive_seed(config.seed, &[PHASE_DRIFT, run as u64]));
    Ok(sample_drift(&model, &mut rng))
}

fn final_distribution(
    config: &ExperimentConfig,
    arm: Arm,
    run: usize,
    truth: &[ErrorParams],
    offsets: &[f64],
) -> Result<OutcomeDistribution> {
    let mut rng = rng_from_seed(phase_seed(config, PHASE_FINAL, arm, run));
    let counts = execute(truth, offsets, config.shots, &mut rng)?;
    counts_to_distribution(&counts)
}

fn distance_to_ideal(dist: &OutcomeDistribution) -> Result<f64> {
    hellinger(dist, &ideal_distribution(dist.n())?)
}

/// Plain execution with no compensation or post-processing.
pub fn run_unmitigated(config: &ExperimentConfig, run: usize) -> Result<f64> {
    let truth = drift_for_run(config, run)?;
    let zeros = vec![0.0; truth.len()];
    let dist = final_distribution(config, Arm::Unmitigated, run, &truth, &zeros)?;
    distance_to_ideal(&dist)
}

/// Compensation and readout inversion from the configured drift means.
pub fn run_static(config: &ExperimentConfig, run: usize) -> Result<f64> {
    let truth = drift_for_run(config, run)?;
    let means = config.drift_model()?.means();
    let dist = final_distribution(
        config,
        Arm::Static,
        run,
        &truth,
        &offsets_from_params(&means),
    )?;
    let mitigated = invert_readout(&dist, &means).map_err(|e| in_run(Arm::Static, run, e))?;
    distance_to_ideal(&mitigated)
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub distance: f64,
    pub estimate: MapEstimate,
    /// Prior for the next run in sequential mode.
    pub next_prior: Option<PriorSpec>,
}

/// Probe, infer, then re-execute with the inferred rotation offsets and
/// invert readout with the inferred flip rates. The same drifted noise is
/// used for the probe and the compensated execution.
pub fn run_adaptive(
    config: &ExperimentConfig,
    run: usize,
    prior: &PriorSpec,
) -> Result<AdaptiveOutcome> {
    let (estimate, next_prior, distance) = adaptive_parts(config, run, prior)?;
    Ok(AdaptiveOutcome {
        distance: distance?,
        estimate,
        next_prior,
    })
}

type AdaptiveParts = (MapEstimate, Option<PriorSpec>, Result<f64>);

fn adaptive_parts(
    config: &ExperimentConfig,
    run: usize,
    prior: &PriorSpec,
) -> Result<AdaptiveParts> {
    let truth = drift_for_run(config, run)?;
    let n = truth.len();
    let mut probe_rng = rng_from_seed(phase_seed(config, PHASE_PROBE, Arm::Adaptive, run));
    let probe = execute(&truth, &vec![0.0; n], config.shots, &mut probe_rng)?;
    let chain_seed = phase_seed(config, PHASE_CHAIN, Arm::Adaptive, run);
    let inference = infer_register(&probe, prior, &config.chain, chain_seed)?;
    let next_prior = match config.prior {
        PriorMode::Sequential => Some(sequential_prior_update(&inference.chains)?),
        _ => None,
    };
    let estimate = inference.estimate;
    let distance = compensated_distance(config, run, &truth, &estimate.params);
    Ok((estimate, next_prior, distance))
}

fn compensated_distance(
    config: &ExperimentConfig,
    run: usize,
    truth: &[ErrorParams],
    estimate: &[ErrorParams],
) -> Result<f64> {
    let offsets = offsets_from_params(estimate);
    let dist = final_distribution(config, Arm::Adaptive, run, truth, &offsets)?;
    let mitigated = invert_readout(&dist, estimate).map_err(|e| in_run(Arm::Adaptive, run, e))?;
    distance_to_ideal(&mitigated)
}

/// Adaptive arm with the inference step replaced by the true drifted
/// parameters. Isolates the compensation and inversion stages.
pub fn run_adaptive_with_oracle(config: &ExperimentConfig, run: usize) -> Result<f64> {
    let truth = drift_for_run(config, run)?;
    compensated_distance(config, run, &truth, &truth)
}

fn in_run(arm: Arm, run: usize, e: Error) -> Error {
    Error::InRun {
        context: format!("{arm} run {run}"),
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub arm: Arm,
    pub run: usize,
    pub hellinger: Option<f64>,
    pub truth: Vec<ErrorParams>,
    pub estimate: Option<MapEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: Arm,
    pub completed: usize,
    pub failed: usize,
    pub report: Option<StabilityReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub qubits: usize,
    pub shots: u64,
    pub runs: usize,
    pub seed: u64,
    pub prior: PriorMode,
    pub rows: Vec<RunRow>,
    pub summaries: Vec<ArmSummary>,
    pub warnings: Vec<String>,
}

impl ExperimentResult {
    pub fn rows_for(&self, arm: Arm) -> impl Iterator<Item = &RunRow> {
        self.rows.iter().filter(move |r| r.arm == arm)
    }

    pub fn summary(&self, arm: Arm) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.arm == arm)
    }

    /// Mean distance of an arm over its completed runs.
    pub fn mean(&self, arm: Arm) -> Option<f64> {
        self.summary(arm)?.report.as_ref().map(|r| r.mean)
    }

    /// Writes `results.csv`, `summary.json` and `comparison.svg` into `dir`.
    pub fn write_outputs(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), to_csv_string(self)?)?;
        std::fs::write(dir.join("summary.json"), summary_json(self))?;
        std::fs::write(dir.join("comparison.svg"), render_svg(self))?;
        Ok(())
    }
}

fn row_for(
    config: &ExperimentConfig,
    arm: Arm,
    run: usize,
    prior: &PriorSpec,
) -> Result<(RunRow, Option<PriorSpec>)> {
    let truth = drift_for_run(config, run)?;
    let mut row = RunRow {
        arm,
        run,
        hellinger: None,
        truth,
        estimate: None,
        error: None,
    };
    let mut next_prior = None;
    let distance = match arm {
        Arm::Unmitigated => run_unmitigated(config, run),
        Arm::Static => run_static(config, run),
        Arm::Adaptive => match adaptive_parts(config, run, prior) {
            Ok((estimate, next, distance)) => {
                row.estimate = Some(estimate);
                next_prior = next;
                distance
            }
            Err(e) => Err(e),
        },
    };
    match distance {
        Ok(d) => row.hellinger = Some(d),
        Err(e) => row.error = Some(e.to_string()),
    }
    Ok((row, next_prior))
}

/// Runs every selected arm for every run index.
///
/// Failures inside a run are recorded on its row and the experiment moves
/// on. Rows are ordered by arm, then run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let initial_prior = config.initial_prior()?;
    let mut rows = Vec::with_capacity(config.arms.len() * config.runs);

    for &arm in &config.arms {
        if arm == Arm::Adaptive && config.prior == PriorMode::Sequential {
            let mut prior = initial_prior.clone();
            for run in 0..config.runs {
                let (row, next) = row_for(config, arm, run, &prior)?;
                if let Some(p) = next {
                    prior = p;
                }
                rows.push(row);
            }
        } else {
            let arm_rows = (0..config.runs)
                .into_par_iter()
                .map(|run| row_for(config, arm, run, &initial_prior).map(|(r, _)| r))
                .collect::<Result<Vec<_>>>()?;
            rows.extend(arm_rows);
        }
    }

    let mut warnings = Vec::new();
    for row in &rows {
        if let Some(est) = &row.estimate {
            for (q, a) in est.acceptance.iter().enumerate() {
                if *a < ACCEPTANCE_BAND.0 || *a > ACCEPTANCE_BAND.1 {
                    warnings.push(format!(
                        "adaptive run {}: qubit {} acceptance rate {a:.3} outside [{}, {}]",
                        row.run,
                        q + 1,
                        ACCEPTANCE_BAND.0,
                        ACCEPTANCE_BAND.1
                    ));
                }
            }
        }
        if let Some(e) = &row.error {
            warnings.push(format!("{} run {} failed: {e}", row.arm, row.run));
        }
    }

    let summaries = config
        .arms
        .iter()
        .map(|&arm| {
            let distances: Vec<f64> = rows
                .iter()
                .filter(|r| r.arm == arm)
                .filter_map(|r| r.hellinger)
                .collect();
            let failed = rows
                .iter()
                .filter(|r| r.arm == arm && r.error.is_some())
                .count();
            ArmSummary {
                arm,
                completed: distances.len(),
                failed,
                report: stability_report(&distances, None).ok(),
            }
        })
        .collect();

    Ok(ExperimentResult {
        qubits: config.qubits,
        shots: config.shots,
        runs: config.runs,
        seed: config.seed,
        prior: config.prior,
        rows,
        summaries,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::ChainConfig;

    fn small(arms: Vec<Arm>, runs: usize) -> ExperimentConfig {
        ExperimentConfig {
            runs,
            arms,
            chain: ChainConfig {
                steps: 1000,
                ..ChainConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn deterministic_runs() {
        let cfg = small(Arm::ALL.to_vec(), 2);
        assert_eq!(
            run_unmitigated(&cfg, 1).unwrap(),
            run_unmitigated(&cfg, 1).unwrap()
        );
        assert_eq!(run_static(&cfg, 0).unwrap(), run_static(&cfg, 0).unwrap());
        let prior = PriorSpec::uniform(4);
        let a = run_adaptive(&cfg, 0, &prior).unwrap();
        let b = run_adaptive(&cfg, 0, &prior).unwrap();
        assert_eq!(a.distance, b.distance);
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn point_mass_distance() {
        let cfg = ExperimentConfig {
            drift: DriftConfig::fixed(4, 0.0, 0.0, std::f64::consts::FRAC_PI_4),
            ..small(vec![Arm::Unmitigated], 1)
        };
        let d = run_unmitigated(&cfg, 0).unwrap();
        assert!((d - 0.75f64.sqrt()).abs() < 1e-12, "{d}");
    }

    /// Expected RMS Hellinger distance after exact compensation and
    /// inversion with the true flip rates: each parity mode over a qubit set
    /// A carries multinomial noise amplified by Π_{j∈A} 1/(1 − e0 − e1)².
    fn inversion_floor(params: &[ErrorParams], shots: u64) -> f64 {
        let gain: f64 = params
            .iter()
            .map(|e| 1.0 + (1.0 - e.e0() - e.e1()).powi(-2))
            .product();
        ((gain - 1.0) / (8.0 * shots as f64)).sqrt()
    }

    #[test]
    fn near_delta_static() {
        let mut cfg = small(vec![Arm::Static], 5);
        for v in [
            &mut cfg.drift.e0_std,
            &mut cfg.drift.e1_std,
            &mut cfg.drift.e2_std,
        ] {
            for s in v.iter_mut() {
                *s /= 1000.0;
            }
        }
        let floor = inversion_floor(&cfg.drift_model().unwrap().means(), cfg.shots);
        assert!((floor - 0.0603).abs() < 1e-3, "{floor}");
        for run in 0..5 {
            let d = run_static(&cfg, run).unwrap();
            assert!(d <= 2.0 * floor, "run {run}: {d}");
        }
    }

    #[test]
    fn oracle_adaptive_hits_sampling_floor() {
        let cfg = small(vec![Arm::Adaptive], 5);
        for run in 0..5 {
            let floor = inversion_floor(&drift_for_run(&cfg, run).unwrap(), cfg.shots);
            let d = run_adaptive_with_oracle(&cfg, run).unwrap();
            assert!(d <= 2.0 * floor, "run {run}: {d}");
        }
        let quiet = ExperimentConfig {
            drift: DriftConfig::noiseless(4),
            ..cfg
        };
        for run in 0..5 {
            assert!(run_adaptive_with_oracle(&quiet, run).unwrap() <= 0.03);
        }
    }

    #[test]
    fn row_counts() {
        let r = run_experiment(&small(Arm::ALL.to_vec(), 2)).unwrap();
        assert_eq!(r.rows.len(), 6);
        let r = run_experiment(&small(vec![Arm::Static], 1)).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r
            .rows
            .iter()
            .all(|row| row.hellinger.is_none_or(|d| (0.0..=1.0).contains(&d))));
    }

    #[test]
    fn singular_static_run_is_recorded() {
        let cfg = ExperimentConfig {
            drift: DriftConfig::fixed(4, 0.5, 0.5, 0.0),
            ..small(vec![Arm::Static, Arm::Unmitigated], 2)
        };
        let r = run_experiment(&cfg).unwrap();
        let stat: Vec<_> = r.rows_for(Arm::Static).collect();
        assert_eq!(stat.len(), 2);
        assert!(stat
            .iter()
            .all(|row| row.error.is_some() && row.hellinger.is_none()));
        assert_eq!(r.summary(Arm::Static).unwrap().failed, 2);
        assert!(r.summary(Arm::Static).unwrap().report.is_none());
        assert_eq!(r.summary(Arm::Unmitigated).unwrap().completed, 2);
    }

    #[test]
    fn sequential_mode_chains_priors() {
        let cfg = ExperimentConfig {
            prior: PriorMode::Sequential,
            ..small(vec![Arm::Adaptive], 2)
        };
        let first = run_adaptive(&cfg, 0, &cfg.initial_prior().unwrap()).unwrap();
        let next = first.next_prior.unwrap();
        assert_eq!(next.mode(), PriorMode::Sequential);
        assert!(!next.is_uniform());
        let r = run_experiment(&cfg).unwrap();
        let second = run_adaptive(&cfg, 1, &next).unwrap();
        assert_eq!(r.rows[1].estimate.as_ref().unwrap(), &second.estimate);
    }
}
