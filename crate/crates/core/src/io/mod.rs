//! Config files, result tables, frame dumps and run manifests.

pub mod manifest;
pub mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::engine::{ConfigError, SimConfig};
use crate::experiments::SweepSpec;

pub use manifest::{OutputEntry, RunManifest};
pub use output::{read_summary_json, write_frames, write_summary};

/// Version stamped into every output format.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("no seed given; set `seed` in the file or pass --seed")]
    MissingSeed,
    #[error("no replicate count given; set `replicates` in the file or pass --replicates")]
    MissingReplicates,
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("run did not record trajectories; enable `record.trajectory`")]
    RecordingDisabled,
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("checksum mismatch for {0}")]
    Checksum(PathBuf),
}

impl IoError {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::File {
            path: path.into(),
            source,
        }
    }
}

impl From<ConfigError> for IoError {
    fn from(e: ConfigError) -> Self {
        Self::OutOfRange {
            key: e.key.to_string(),
            reason: e.reason,
        }
    }
}

const RUN_KEYS: [&str; 16] = [
    "side_length",
    "n",
    "t",
    "v",
    "c_f",
    "r_t",
    "r_s",
    "r1_frac",
    "r2_frac",
    "rho",
    "sigma",
    "seed",
    "max_ticks",
    "targets_enabled",
    "coverage_mode",
    "record",
];
const RECORD_KEYS: [&str; 4] = ["components", "census", "trajectory", "coverage"];
const SWEEP_KEYS: [&str; 5] = ["base", "axes", "replicates", "seed", "cover_fractions"];

/// A single-run config whose seed may still come from the command line.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFile {
    pub config: SimConfig,
    pub seed: Option<u64>,
}

impl RunFile {
    /// Final config; `seed` overrides the file's seed.
    pub fn resolve(&self, seed: Option<u64>) -> Result<SimConfig, IoError> {
        let seed = seed.or(self.seed).ok_or(IoError::MissingSeed)?;
        Ok(SimConfig {
            seed,
            ..self.config.clone()
        })
    }
}

/// A sweep file before command-line overrides are applied.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default)]
    pub base: SimConfig,
    #[serde(default)]
    pub axes: BTreeMap<String, Vec<f64>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub cover_fractions: Vec<f64>,
}

impl SweepFile {
    pub fn resolve(&self, seed: Option<u64>, replicates: Option<usize>) -> Result<SweepSpec, IoError> {
        let spec = SweepSpec {
            base: self.base.clone(),
            axes: self.axes.clone(),
            replicates: replicates
                .or(self.replicates)
                .ok_or(IoError::MissingReplicates)?,
            seed: seed.or(self.seed).ok_or(IoError::MissingSeed)?,
            cover_fractions: self.cover_fractions.clone(),
        };
        spec.validate().map_err(|e| match e {
            crate::experiments::ExperimentError::BadAxis { axis, reason } => IoError::OutOfRange {
                key: format!("axes.{axis}"),
                reason,
            },
            crate::experiments::ExperimentError::Engine(crate::engine::EngineError::Config(c)) => {
                IoError::OutOfRange {
                    key: format!("base.{}", c.key),
                    reason: c.reason,
                }
            }
            other => IoError::OutOfRange {
                key: "replicates".into(),
                reason: other.to_string(),
            },
        })?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigDoc {
    Run(RunFile),
    Sweep(SweepFile),
}

fn check_keys(table: &toml::Table, allowed: &[&str], prefix: &str) -> Result<(), IoError> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(IoError::UnknownKey(format!("{prefix}{key}")));
        }
    }
    Ok(())
}

fn check_run_table(table: &toml::Table, prefix: &str) -> Result<(), IoError> {
    check_keys(table, &RUN_KEYS, prefix)?;
    if let Some(toml::Value::Table(rec)) = table.get("record") {
        check_keys(rec, &RECORD_KEYS, &format!("{prefix}record."))?;
    }
    Ok(())
}

/// Parses a TOML config. A file with `axes`, `base` or `replicates` is a
/// sweep; anything else (including an empty file) is a single run with the
/// defaults filled in.
pub fn parse_config(text: &str) -> Result<ConfigDoc, IoError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| IoError::Syntax(e.to_string()))?;
    let is_sweep = ["axes", "base", "replicates"].iter().any(|k| table.contains_key(*k));
    if is_sweep {
        check_keys(&table, &SWEEP_KEYS, "")?;
        if let Some(toml::Value::Table(base)) = table.get("base") {
            check_run_table(base, "base.")?;
        }
        let file: SweepFile = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| IoError::Syntax(e.to_string()))?;
        file.base.validate().map_err(|e| IoError::OutOfRange {
            key: format!("base.{}", e.key),
            reason: e.reason,
        })?;
        return Ok(ConfigDoc::Sweep(file));
    }
    check_run_table(&table, "")?;
    let seed = match table.get("seed") {
        None => None,
        Some(toml::Value::Integer(s)) if *s >= 0 => Some(*s as u64),
        Some(other) => {
            return Err(IoError::OutOfRange {
                key: "seed".into(),
                reason: format!("expected a non-negative integer, got {other}"),
            })
        }
    };
    let config: SimConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| IoError::Syntax(e.to_string()))?;
    config.validate()?;
    Ok(ConfigDoc::Run(RunFile { config, seed }))
}

/// Parses a single-run config, rejecting sweep files.
pub fn parse_run_config(text: &str) -> Result<RunFile, IoError> {
    match parse_config(text)? {
        ConfigDoc::Run(r) => Ok(r),
        ConfigDoc::Sweep(_) => Err(IoError::Syntax("expected a single-run config, found a sweep".into())),
    }
}

/// TOML text that [`parse_config`] reads back to an equal config.
pub fn config_to_toml(config: &SimConfig) -> String {
    toml::to_string(config).expect("config serializes")
}
