//! Parameters of one model instance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::ZoneRadii;
use crate::geometry::TorusSpec;
use crate::metrics::coverage::CoverageMode;

/// Search-mode tick cap per unit of `c_f` (ticks = this · c_f).
pub const SEARCH_TICKS_PER_HZ: f64 = 5_000_000.0;
/// Metrics-mode tick budget per unit of `c_f`.
pub const METRICS_TICKS_PER_HZ: f64 = 500_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid value for `{key}`: {reason}")]
pub struct ConfigError {
    pub key: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub(crate) fn new(key: &'static str, reason: impl Into<String>) -> Self {
        Self {
            key,
            reason: reason.into(),
        }
    }
}

/// What a run keeps in its event log beyond arrival times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Recording {
    /// Component count of the proximity graph at every tick.
    pub components: bool,
    /// Per-state agent counts at every tick.
    pub census: bool,
    /// Every agent's position, heading and state at every tick.
    pub trajectory: bool,
    /// Covered-cell counts at every tick (metrics mode only).
    pub coverage: bool,
}

impl Default for Recording {
    fn default() -> Self {
        Self {
            components: true,
            census: true,
            trajectory: false,
            coverage: true,
        }
    }
}

impl Recording {
    /// Only what the batch statistics need.
    pub fn lean() -> Self {
        Self {
            components: true,
            census: false,
            trajectory: false,
            coverage: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Side of the square world in meters.
    pub side_length: f64,
    #[serde(rename = "n")]
    pub agents: usize,
    #[serde(rename = "t")]
    pub targets: usize,
    /// Speed in m/s.
    #[serde(rename = "v")]
    pub speed: f64,
    /// Heading update rate in Hz; one tick lasts `1/c_f` seconds.
    pub c_f: f64,
    pub r_t: f64,
    pub r_s: f64,
    pub r1_frac: f64,
    pub r2_frac: f64,
    pub rho: f64,
    /// Turning-noise standard deviation in degrees.
    pub sigma: f64,
    pub seed: u64,
    /// Tick cap (search mode) or exact budget (metrics mode).
    pub max_ticks: Option<u64>,
    /// `false` selects metrics mode: no targets, fixed budget.
    pub targets_enabled: bool,
    pub coverage_mode: CoverageMode,
    pub record: Recording,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            side_length: 20_000.0,
            agents: 50,
            targets: 1,
            speed: 10.0,
            c_f: 1.0,
            r_t: 10.0,
            r_s: 150.0,
            r1_frac: 0.3,
            r2_frac: 0.7,
            rho: 0.0,
            sigma: 3.0,
            seed: 0,
            max_ticks: None,
            targets_enabled: true,
            coverage_mode: CoverageMode::Footprint,
            record: Recording::default(),
        }
    }
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be positive and finite, got {v}")))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("side_length", self.side_length)?;
        if self.agents == 0 {
            return Err(ConfigError::new("n", "at least one agent is required"));
        }
        if self.targets_enabled && self.targets == 0 {
            return Err(ConfigError::new("t", "search mode needs at least one target"));
        }
        positive("v", self.speed)?;
        positive("c_f", self.c_f)?;
        positive("r_t", self.r_t)?;
        positive("r_s", self.r_s)?;
        if !(0.0..=1.0).contains(&self.r1_frac) {
            return Err(ConfigError::new("r1_frac", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.r2_frac) {
            return Err(ConfigError::new("r2_frac", "must lie in [0, 1]"));
        }
        if self.r1_frac > self.r2_frac {
            return Err(ConfigError::new("r1_frac", "must not exceed r2_frac"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(ConfigError::new("rho", "must lie in [0, 1)"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ConfigError::new("sigma", "must be non-negative and finite"));
        }
        if self.max_ticks == Some(0) {
            return Err(ConfigError::new("max_ticks", "must be at least 1"));
        }
        if self.r_s.max(self.r_t) * 2.0 > self.side_length {
            return Err(ConfigError::new("r_s", "sensing radii must fit in half the world"));
        }
        Ok(())
    }

    pub fn world(&self) -> TorusSpec {
        TorusSpec::new(self.side_length).expect("validated side length")
    }

    pub fn zones(&self) -> ZoneRadii {
        ZoneRadii::from_fractions(self.r_s, self.r_t, self.r1_frac, self.r2_frac)
            .expect("validated radii")
    }

    /// Step magnitude `x = v / c_f` in meters per tick.
    pub fn step_length(&self) -> f64 {
        self.speed / self.c_f
    }

    pub fn is_metrics_mode(&self) -> bool {
        !self.targets_enabled
    }

    /// Tick cap in search mode, exact length in metrics mode.
    pub fn tick_budget(&self) -> u64 {
        self.max_ticks.unwrap_or_else(|| {
            let per_hz = if self.targets_enabled {
                SEARCH_TICKS_PER_HZ
            } else {
                METRICS_TICKS_PER_HZ
            };
            (per_hz * self.c_f).round().max(1.0) as u64
        })
    }

    /// Copy in metrics mode (targets removed).
    pub fn metrics_mode(&self) -> Self {
        Self {
            targets_enabled: false,
            ..self.clone()
        }
    }

    pub fn ticks_to_seconds(&self, ticks: f64) -> f64 {
        ticks / self.c_f
    }
}
