//! Cartesian parameter sweeps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{normalized_curve, run_outcomes, BatchStats, CurvePoint, Execution, ExperimentError};
use crate::engine::{EngineError, SimConfig};

/// Parameters a sweep can vary.
pub const AXES: [&str; 9] = ["rho", "sigma", "n", "t", "c_f", "r_s", "r_t", "r1_frac", "r2_frac"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: SimConfig,
    /// Axis name to the list of values it takes.
    #[serde(default)]
    pub axes: BTreeMap<String, Vec<f64>>,
    pub replicates: usize,
    pub seed: u64,
    /// Coverage fractions evaluated in metrics mode.
    #[serde(default)]
    pub cover_fractions: Vec<f64>,
}

fn bad(axis: &str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::BadAxis {
        axis: axis.to_string(),
        reason: reason.into(),
    }
}

fn count(axis: &str, v: f64) -> Result<usize, ExperimentError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(bad(axis, format!("{v} is not a whole number")))
    }
}

/// Sets one named parameter on `cfg`.
pub fn set_param(cfg: &mut SimConfig, axis: &str, v: f64) -> Result<(), ExperimentError> {
    match axis {
        "rho" => cfg.rho = v,
        "sigma" => cfg.sigma = v,
        "n" => cfg.agents = count(axis, v)?,
        "t" => cfg.targets = count(axis, v)?,
        "c_f" => cfg.c_f = v,
        "r_s" => cfg.r_s = v,
        "r_t" => cfg.r_t = v,
        "r1_frac" => cfg.r1_frac = v,
        "r2_frac" => cfg.r2_frac = v,
        _ => return Err(bad(axis, format!("unknown axis; expected one of {AXES:?}"))),
    }
    Ok(())
}

/// One point of the sweep grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub params: BTreeMap<String, f64>,
    pub config: SimConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replicates == 0 {
            return Err(ExperimentError::NoReplicates);
        }
        for (axis, values) in &self.axes {
            if values.is_empty() {
                return Err(bad(axis, "no values"));
            }
            for &v in values {
                let mut probe = self.base.clone();
                // zone ordering is checked per combination, not per value
                match axis.as_str() {
                    "r1_frac" => probe.r2_frac = 1.0,
                    "r2_frac" => probe.r1_frac = 0.0,
                    _ => {}
                }
                set_param(&mut probe, axis, v)?;
                probe.validate().map_err(|e| bad(axis, e.to_string()))?;
            }
        }
        self.base.validate().map_err(EngineError::from)?;
        Ok(())
    }

    /// Cartesian product of the axes in lexicographic axis order.
    /// Combinations with `r1_frac > r2_frac` are skipped; every other
    /// combination must be a valid configuration.
    pub fn instances(&self) -> Result<Vec<Instance>, ExperimentError> {
        self.validate()?;
        let axes: Vec<(&String, &Vec<f64>)> = self.axes.iter().collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; axes.len()];
        loop {
            let mut cfg = self.base.clone();
            let mut params = BTreeMap::new();
            for (k, (name, values)) in axes.iter().enumerate() {
                set_param(&mut cfg, name, values[idx[k]])?;
                params.insert(name.to_string(), values[idx[k]]);
            }
            if cfg.r1_frac <= cfg.r2_frac {
                cfg.validate().map_err(EngineError::from)?;
                out.push(Instance {
                    params,
                    config: cfg,
                });
            }
            // odometer increment, last axis fastest
            let mut k = axes.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < axes[k].1.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub params: BTreeMap<String, f64>,
    pub config: SimConfig,
    /// `None` when the batch failed.
    pub stats: Option<BatchStats>,
    pub error: Option<String>,
    /// Mean `S_avg` over the group's best ρ = 0 mean.
    pub normalized: Option<f64>,
}

impl InstanceResult {
    pub fn mean_s_avg(&self) -> Option<f64> {
        self.stats.as_ref().and_then(BatchStats::mean_s_avg)
    }
}

/// Best-σ curve over ρ for instances sharing every other parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub fixed: BTreeMap<String, f64>,
    pub baseline: f64,
    pub points: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub replicates: usize,
    pub seed: u64,
    pub instances: Vec<InstanceResult>,
    pub curves: Vec<Curve>,
}

fn group_key(params: &BTreeMap<String, f64>) -> Vec<(String, u64)> {
    params
        .iter()
        .filter(|(k, _)| k.as_str() != "rho" && k.as_str() != "sigma")
        .map(|(k, v)| (k.clone(), v.to_bits()))
        .collect()
}

/// Runs every instance, then normalizes within groups that share all
/// parameters except ρ and σ.
pub fn run_sweep(spec: &SweepSpec, execution: Execution) -> Result<SweepResult, ExperimentError> {
    let mut instances = Vec::new();
    for inst in spec.instances()? {
        let (stats, error) = match run_outcomes(
            &inst.config,
            spec.replicates,
            spec.seed,
            execution,
            &spec.cover_fractions,
        ) {
            Ok(o) => (Some(BatchStats::from_outcomes(spec.seed, &o)), None),
            Err(e @ ExperimentError::Censored { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        instances.push(InstanceResult {
            params: inst.params,
            config: inst.config,
            stats,
            error,
            normalized: None,
        });
    }
    let curves = normalize(&mut instances);
    Ok(SweepResult {
        replicates: spec.replicates,
        seed: spec.seed,
        instances,
        curves,
    })
}

/// Fills `normalized` in place and returns the per-group best-σ curves.
pub fn normalize(instances: &mut [InstanceResult]) -> Vec<Curve> {
    let mut groups: BTreeMap<Vec<(String, u64)>, Vec<usize>> = BTreeMap::new();
    for (i, r) in instances.iter().enumerate() {
        groups.entry(group_key(&r.params)).or_default().push(i);
    }
    let mut curves = Vec::new();
    for members in groups.values() {
        let baseline = members
            .iter()
            .filter(|&&i| instances[i].config.rho == 0.0)
            .filter_map(|&i| instances[i].mean_s_avg())
            .min_by(f64::total_cmp);
        let Some(baseline) = baseline else { continue };
        let mut points = Vec::new();
        for &i in members {
            if let Some(m) = instances[i].mean_s_avg() {
                instances[i].normalized = Some(m / baseline);
                points.push((instances[i].config.rho, instances[i].config.sigma, m));
            }
        }
        let fixed = instances[members[0]]
            .params
            .iter()
            .filter(|(k, _)| k.as_str() != "rho" && k.as_str() != "sigma")
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        curves.push(Curve {
            fixed,
            baseline,
            points: normalized_curve(&points, baseline),
        });
    }
    curves
}
