//! Simulation, Bayesian inference and adaptive compensation of drifting
//! readout and gate-rotation errors on a small qubit register.
//!
//! The register runs the uniform-superposition circuit (one Hadamard per
//! qubit). Each qubit carries an [`ErrorParams`] triple: two readout flip
//! probabilities and a rotation offset. Those parameters are redrawn per
//! execution from a [`DriftModel`], inferred back from raw bitstrings with a
//! Metropolis-Hastings sampler, and used to compensate the next execution.

pub mod error;
pub mod harness;
pub mod inference;
pub mod metrics;
pub mod mitigation;
pub mod noise;
pub mod seed;
pub mod simulator;

pub use error::{Error, Result};
pub use harness::{
    run_adaptive, run_experiment, run_static, run_unmitigated, AdaptiveOutcome, Arm,
    ExperimentConfig, ExperimentResult, PriorMode, RunRow,
};
pub use inference::{
    infer_register, metropolis_hastings, sequential_prior_update, Chain, ChainConfig, MapEstimate,
    PriorSpec, QubitPosterior,
};
pub use metrics::{bhattacharyya, hellinger, stability_report, StabilityReport};
pub use mitigation::{compensation_offsets, confusion_matrix, invert_readout, ConfusionMatrix};
pub use noise::{
    beta_from_mean_std, fit_beta_moments, sample_drift, BetaSpec, DriftModel, ErrorParams,
    ParamDrift,
};
pub use simulator::{
    counts_to_distribution, execute, ideal_distribution, p_zero, OutcomeDistribution, ShotCounts,
};
