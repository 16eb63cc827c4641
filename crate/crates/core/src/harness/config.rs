//! Experiment configuration and its TOML file format.
//!
//! Every key is optional; omitted keys take the defaults of the four-qubit
//! drift experiment. A complete file looks like:
//!
//! ```toml
//! qubits = 4
//! shots = 8192
//! runs = 10
//! seed = 20220811
//! arms = ["unmitigated", "static", "adaptive"]
//!
//! [drift]
//! rotation_unit = "degrees"   # or "radians"
//! std_fraction = 0.1          # std = mean * fraction where no *_std is given
//! e0_mean = [0.9, 0.8, 0.85, 0.75]
//! e1_mean = [0.85, 0.75, 0.80, 0.70]
//! e2_mean = [3.1, 4.1, 4.9, 2.9]
//! # e0_std = [0.09, 0.08, 0.085, 0.075]
//!
//! [chain]
//! steps = 10000
//! burn_in_fraction = 0.2
//! proposal_scales = [0.02, 0.02, 0.01]
//!
//! [prior]
//! mode = "uniform"            # uniform | configured | sequential
//!
//! [output]
//! dir = "results"
//! ```
//!
//! Per-qubit lists either have one entry per qubit or a single entry that
//! applies to all of them. Omitted mean lists repeat the four defaults
//! across the register. A zero std pins the parameter at its mean, so
//! `e0_mean = [0.0]` with `e0_std = [0.0]` describes a noiseless readout.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{ChainConfig, PriorMode, PriorSpec};
use crate::noise::{BetaSpec, DriftModel, ParamDrift};
use crate::simulator::MAX_QUBITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Unmitigated,
    Static,
    Adaptive,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::Unmitigated, Arm::Static, Arm::Adaptive];

    pub fn id(self) -> u64 {
        self as u64
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Unmitigated => "unmitigated",
            Arm::Static => "static",
            Arm::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unmitigated" => Ok(Arm::Unmitigated),
            "static" => Ok(Arm::Static),
            "adaptive" => Ok(Arm::Adaptive),
            other => Err(Error::Config(format!("unknown arm {other:?}"))),
        }
    }
}

impl FromStr for PriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(PriorMode::Uniform),
            "configured" => Ok(PriorMode::Configured),
            "sequential" => Ok(PriorMode::Sequential),
            other => Err(Error::Config(format!("unknown prior mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationUnit {
    Degrees,
    Radians,
}

/// Per-qubit drift means and standard deviations. Rotation values are held
/// in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub e0_mean: Vec<f64>,
    pub e0_std: Vec<f64>,
    pub e1_mean: Vec<f64>,
    pub e1_std: Vec<f64>,
    pub e2_mean: Vec<f64>,
    pub e2_std: Vec<f64>,
}

fn tenth(v: &[f64]) -> Vec<f64> {
    v.iter().map(|m| m * 0.1).collect()
}

impl Default for DriftConfig {
    fn default() -> Self {
        let e0 = vec![0.9, 0.8, 0.85, 0.75];
        let e1 = vec![0.85, 0.75, 0.80, 0.70];
        let e2: Vec<f64> = [3.1f64, 4.1, 4.9, 2.9]
            .iter()
            .map(|d| d.to_radians())
            .collect();
        Self {
            e0_std: tenth(&e0),
            e1_std: tenth(&e1),
            e2_std: tenth(&e2),
            e0_mean: e0,
            e1_mean: e1,
            e2_mean: e2,
        }
    }
}

impl DriftConfig {
    /// Every parameter pinned at zero on `n` qubits.
    pub fn noiseless(n: usize) -> Self {
        Self::fixed(n, 0.0, 0.0, 0.0)
    }

    /// Every qubit pinned at the same triple.
    pub fn fixed(n: usize, e0: f64, e1: f64, e2: f64) -> Self {
        Self {
            e0_mean: vec![e0; n],
            e0_std: vec![0.0; n],
            e1_mean: vec![e1; n],
            e1_std: vec![0.0; n],
            e2_mean: vec![e2; n],
            e2_std: vec![0.0; n],
        }
    }

    pub fn model(&self, n: usize) -> Result<DriftModel> {
        let cols = [
            ("e0_mean", &self.e0_mean),
            ("e0_std", &self.e0_std),
            ("e1_mean", &self.e1_mean),
            ("e1_std", &self.e1_std),
            ("e2_mean", &self.e2_mean),
            ("e2_std", &self.e2_std),
        ];
        for (name, v) in cols {
            if v.len() != n {
                return Err(Error::Config(format!(
                    "drift.{name} has {} entries for {n} qubits",
                    v.len()
                )));
            }
        }
        let qubits = (0..n)
            .map(|q| {
                Ok([
                    ParamDrift::from_mean_std(self.e0_mean[q], self.e0_std[q])?,
                    ParamDrift::from_mean_std(self.e1_mean[q], self.e1_std[q])?,
                    ParamDrift::from_mean_std(self.e2_mean[q], self.e2_std[q])?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        DriftModel::new(qubits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub qubits: usize,
    pub shots: u64,
    pub runs: usize,
    pub seed: u64,
    pub arms: Vec<Arm>,
    pub drift: DriftConfig,
    pub chain: ChainConfig,
    pub prior: PriorMode,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            qubits: 4,
            shots: 8192,
            runs: 10,
            seed: 20220811,
            arms: Arm::ALL.to_vec(),
            drift: DriftConfig::default(),
            chain: ChainConfig::default(),
            prior: PriorMode::Uniform,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 || self.qubits > MAX_QUBITS {
            return Err(Error::RegisterSize(self.qubits));
        }
        if self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::Config("no arms selected".into()));
        }
        self.chain.validate()?;
        self.drift.model(self.qubits)?;
        Ok(())
    }

    pub fn drift_model(&self) -> Result<DriftModel> {
        self.drift.model(self.qubits)
    }

    /// Prior for the first adaptive run.
    pub fn initial_prior(&self) -> Result<PriorSpec> {
        Ok(match self.prior {
            PriorMode::Uniform | PriorMode::Sequential => PriorSpec::uniform(self.qubits),
            PriorMode::Configured => {
                let specs = self
                    .drift_model()?
                    .qubits()
                    .iter()
                    .map(|q| {
                        q.map(|d| match d {
                            ParamDrift::Beta(b) => b,
                            ParamDrift::Fixed(_) => BetaSpec::uniform(),
                        })
                    })
                    .collect();
                PriorSpec::configured(specs)
            }
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let cfg = file.resolve()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    qubits: Option<usize>,
    shots: Option<u64>,
    runs: Option<usize>,
    seed: Option<u64>,
    arms: Option<Vec<Arm>>,
    drift: DriftSection,
    chain: ChainSection,
    prior: PriorSection,
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DriftSection {
    rotation_unit: Option<RotationUnit>,
    std_fraction: Option<f64>,
    e0_mean: Option<Vec<f64>>,
    e0_std: Option<Vec<f64>>,
    e1_mean: Option<Vec<f64>>,
    e1_std: Option<Vec<f64>>,
    e2_mean: Option<Vec<f64>>,
    e2_std: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ChainSection {
    steps: Option<usize>,
    burn_in_fraction: Option<f64>,
    proposal_scales: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PriorSection {
    mode: Option<PriorMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
}

impl ConfigFile {
    fn resolve(self) -> Result<ExperimentConfig> {
        let defaults = ExperimentConfig::default();
        let d = self.drift;
        let fraction = d.std_fraction.unwrap_or(0.1);
        if fraction.is_nan() || fraction < 0.0 {
            return Err(Error::Config(format!(
                "std_fraction {fraction} is negative"
            )));
        }
        let unit = d.rotation_unit.unwrap_or(RotationUnit::Degrees);
        let to_rad = |v: Vec<f64>| match unit {
            RotationUnit::Degrees => v.into_iter().map(f64::to_radians).collect(),
            RotationUnit::Radians => v,
        };
        let base = DriftConfig::default();
        let explicit = [&d.e0_mean, &d.e1_mean, &d.e2_mean];
        let qubits = self.qubits.unwrap_or_else(|| {
            explicit
                .iter()
                .filter_map(|v| v.as_ref().map(Vec::len))
                .find(|&len| len > 1)
                .unwrap_or(base.e0_mean.len())
        });
        // Omitted lists repeat the defaults across the register and a single
        // entry applies to every qubit. Other lengths must match `qubits`.
        let fit = |v: Option<Vec<f64>>, fallback: &[f64]| -> Vec<f64> {
            match v {
                Some(v) if v.len() != 1 => v,
                Some(v) => vec![v[0]; qubits],
                None => fallback.iter().copied().cycle().take(qubits).collect(),
            }
        };
        // the default rotation means are stored in radians already
        let e0_mean = fit(d.e0_mean, &base.e0_mean);
        let e1_mean = fit(d.e1_mean, &base.e1_mean);
        let e2_mean = fit(d.e2_mean.map(to_rad), &base.e2_mean);
        let scaled = |m: &[f64]| m.iter().map(|x| x * fraction).collect::<Vec<_>>();
        let drift = DriftConfig {
            e0_std: d
                .e0_std
                .map(|v| fit(Some(v), &[]))
                .unwrap_or_else(|| scaled(&e0_mean)),
            e1_std: d
                .e1_std
                .map(|v| fit(Some(v), &[]))
                .unwrap_or_else(|| scaled(&e1_mean)),
            e2_std: d
                .e2_std
                .map(|v| fit(Some(to_rad(v)), &[]))
                .unwrap_or_else(|| scaled(&e2_mean)),
            e0_mean,
            e1_mean,
            e2_mean,
        };
        let chain = ChainConfig {
            steps: self.chain.steps.unwrap_or(defaults.chain.steps),
            burn_in_fraction: self
                .chain
                .burn_in_fraction
                .unwrap_or(defaults.chain.burn_in_fraction),
            proposal_scales: self
                .chain
                .proposal_scales
                .unwrap_or(defaults.chain.proposal_scales),
        };
        let mut arms = self.arms.unwrap_or(defaults.arms);
        arms.sort();
        arms.dedup();
        Ok(ExperimentConfig {
            qubits,
            shots: self.shots.unwrap_or(defaults.shots),
            runs: self.runs.unwrap_or(defaults.runs),
            seed: self.seed.unwrap_or(defaults.seed),
            arms,
            drift,
            chain,
            prior: self.prior.mode.unwrap_or(defaults.prior),
            output_dir: self.output.dir.unwrap_or(defaults.output_dir),
        })
    }
}
