//! Observables computed from an [`EventLog`].

pub mod components;
pub mod coverage;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EventLog;

/// Coverage fractions reported by default.
pub const DEFAULT_COVER_FRACTIONS: [f64; 3] = [0.1, 0.25, 0.5];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("run is censored: agents {0:?} never reached a target")]
    Censored(Vec<usize>),
    #[error("no direct finds recorded; convergence proportion is undefined")]
    NoDirectFinds,
    #[error("coverage fraction {requested} not reached (final coverage {achieved})")]
    CoverageNotReached { requested: f64, achieved: f64 },
    #[error("run did not record {0}")]
    NotRecorded(&'static str),
}

/// Mean searching time in seconds over all `n` agents.
pub fn mean_search_time(log: &EventLog) -> Result<f64, MetricsError> {
    let censored = log.censored_agents();
    if !censored.is_empty() {
        return Err(MetricsError::Censored(censored));
    }
    let n = log.arrival_ticks.len() as f64;
    let total: f64 = log.arrival_ticks.iter().flatten().map(|&t| t as f64).sum();
    Ok(total / n / log.config.c_f)
}

/// Mean of a per-tick component series.
pub fn avg_components(series: &[u32]) -> Option<f64> {
    if series.is_empty() {
        return None;
    }
    Some(series.iter().map(|&c| c as f64).sum::<f64>() / series.len() as f64)
}

/// Average group size `n / C*`.
pub fn group_size(n: usize, c_star: f64) -> f64 {
    n as f64 / c_star
}

/// Number of arrivals not preceded, within `r_s·c_f/v` ticks, by another
/// arrival. Simultaneous arrivals do not suppress each other.
pub fn direct_find_count(arrival_ticks: &[Option<u64>], r_s: f64, c_f: f64, v: f64) -> usize {
    let window = r_s * c_f / v;
    let mut times: Vec<u64> = arrival_ticks.iter().flatten().copied().collect();
    times.sort_unstable();
    let mut count = 0;
    let mut prev_distinct: Option<u64> = None;
    let mut i = 0;
    while i < times.len() {
        let t = times[i];
        let run = times[i..].iter().take_while(|&&x| x == t).count();
        // the closest strictly earlier arrival decides for the whole run of ties
        let followed = prev_distinct.is_some_and(|p| (t - p) as f64 <= window);
        if !followed {
            count += run;
        }
        prev_distinct = Some(t);
        i += run;
    }
    count
}

/// `C* / F_#`, unclamped.
pub fn convergence_proportion(c_star: f64, direct_finds: usize) -> Result<f64, MetricsError> {
    if direct_finds == 0 {
        return Err(MetricsError::NoDirectFinds);
    }
    Ok(c_star / direct_finds as f64)
}

/// Time for the whole group to cover `fraction` of the area, in seconds.
pub fn cover_time(log: &EventLog, fraction: f64) -> Result<f64, MetricsError> {
    let cov = log
        .coverage
        .as_ref()
        .ok_or(MetricsError::NotRecorded("coverage"))?;
    coverage::first_reaching(&cov.history, cov.total_cells, fraction, log.config.c_f).ok_or_else(
        || MetricsError::CoverageNotReached {
            requested: fraction,
            achieved: cov.history.last().copied().unwrap_or(0) as f64 / cov.total_cells as f64,
        },
    )
}

/// Cover time scaled to an average subgroup: `(n / G_size) · full_time`.
pub fn subgroup_cover_time(full_time: f64, n: usize, g_size: f64) -> f64 {
    n as f64 / g_size * full_time
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean searching time in seconds (search mode, uncensored runs).
    pub s_avg: Option<f64>,
    /// Earliest arrival in seconds.
    pub first_find: Option<f64>,
    pub c_comp_star: Option<f64>,
    pub f_count: Option<usize>,
    pub c_prop: Option<f64>,
    pub g_size: Option<f64>,
    /// Whole-group cover time per requested fraction (metrics mode).
    pub cover_times: BTreeMap<String, f64>,
    /// Cover times scaled to the average subgroup.
    pub subgroup_cover_times: BTreeMap<String, f64>,
    pub censored: Vec<usize>,
}

impl MetricsReport {
    /// Every metric the log supports.
    pub fn from_log(log: &EventLog, cover_fractions: &[f64]) -> Self {
        let cfg = &log.config;
        let n = log.arrival_ticks.len();
        let s_avg = mean_search_time(log).ok();
        let first_find = log.first_arrival().map(|t| t as f64 / cfg.c_f);
        let c_comp_star = avg_components(&log.components);
        let f_count = cfg
            .targets_enabled
            .then(|| direct_find_count(&log.arrival_ticks, cfg.r_s, cfg.c_f, cfg.speed));
        let c_prop = match (c_comp_star, f_count) {
            (Some(c), Some(f)) => convergence_proportion(c, f).ok(),
            _ => None,
        };
        let g_size = c_comp_star.map(|c| group_size(n, c));
        let mut cover_times = BTreeMap::new();
        let mut subgroup_cover_times = BTreeMap::new();
        for &x in cover_fractions {
            if let Ok(t) = cover_time(log, x) {
                let key = fraction_key(x);
                if let Some(g) = g_size {
                    subgroup_cover_times.insert(key.clone(), subgroup_cover_time(t, n, g));
                }
                cover_times.insert(key, t);
            }
        }
        Self {
            s_avg,
            first_find,
            c_comp_star,
            f_count,
            c_prop,
            g_size,
            cover_times,
            subgroup_cover_times,
            censored: log.censored_agents(),
        }
    }

    /// True when `C_prop > 1`, which only happens if `F_# < C*`.
    pub fn c_prop_exceeds_one(&self) -> bool {
        self.c_prop.is_some_and(|c| c > 1.0)
    }
}

/// Map key for a coverage fraction, e.g. `0.5`.
pub fn fraction_key(x: f64) -> String {
    format!("{x}")
}
