//! Replicate batches, σ selection, normalized curves and sweeps.

pub mod stats;
pub mod sweep;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_simulation, EngineError, SimConfig};
use crate::metrics::MetricsReport;
use crate::rng::replicate_seed;

pub use stats::{pearson_r, welch_t, StatsError, TestResult};
pub use sweep::{SweepResult, SweepSpec};

/// Largest tolerated fraction of censored replicates in a batch.
pub const CENSORING_LIMIT: f64 = 0.001;

/// Replicates are scheduled in blocks of one per worker thread so that a
/// batch which is going to fail stops early. Block size only affects how
/// far a failing batch gets, never a successful result.
fn block_size(execution: Execution) -> usize {
    match execution {
        Execution::Serial => 1,
        Execution::Parallel => rayon::current_num_threads().max(1),
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{censored} of {run} replicates censored (limit {limit} of {replicates})")]
    Censored {
        censored: usize,
        run: usize,
        replicates: usize,
        limit: usize,
    },
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error("sigma grid is empty")]
    EmptyGrid,
    #[error("every sigma in the grid failed: {0}")]
    AllFailed(String),
    #[error("no baseline instance with rho = 0")]
    NoBaseline,
    #[error("bad sweep axis `{axis}`: {reason}")]
    BadAxis { axis: String, reason: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// How replicates are executed. Both give identical results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// What one replicate contributes to the batch statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub seed: u64,
    /// Per-agent searching times in seconds; empty in metrics mode.
    pub search_times: Vec<f64>,
    pub censored: bool,
    /// Agent-ticks spent in Lock.
    pub lock_agent_ticks: u64,
    pub report: MetricsReport,
}

/// Mean and standard deviation over replicates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        Some(Self {
            mean: stats::mean(xs),
            std: stats::sample_variance(xs).sqrt(),
            count: xs.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub replicates: usize,
    pub base_seed: u64,
    pub censored: usize,
    pub censoring_rate: f64,
    /// Per-replicate `S_avg` in replicate order (uncensored runs only).
    pub s_avg_samples: Vec<f64>,
    pub s_avg: Option<Summary>,
    /// Variance of all agents' searching times pooled over replicates.
    pub pooled_time_var: Option<f64>,
    pub first_find: Option<Summary>,
    pub c_comp_star: Option<Summary>,
    pub c_prop: Option<Summary>,
    pub g_size: Option<Summary>,
    pub f_count: Option<Summary>,
    pub cover_times: BTreeMap<String, Summary>,
    pub subgroup_cover_times: BTreeMap<String, Summary>,
    /// Replicates in which some agent entered Lock.
    pub lock_runs: usize,
}

impl BatchStats {
    pub fn mean_s_avg(&self) -> Option<f64> {
        self.s_avg.map(|s| s.mean)
    }

    /// Deterministic fold over outcomes in replicate order.
    pub fn from_outcomes(base_seed: u64, outcomes: &[ReplicateOutcome]) -> Self {
        let pick = |f: &dyn Fn(&ReplicateOutcome) -> Option<f64>| -> Option<Summary> {
            Summary::of(&outcomes.iter().filter_map(f).collect::<Vec<_>>())
        };
        let censored = outcomes.iter().filter(|o| o.censored).count();
        let s_avg_samples: Vec<f64> = outcomes.iter().filter_map(|o| o.report.s_avg).collect();
        let pooled: Vec<f64> = outcomes
            .iter()
            .filter(|o| !o.censored)
            .flat_map(|o| o.search_times.iter().copied())
            .collect();
        let keys: Vec<String> = outcomes
            .iter()
            .flat_map(|o| o.report.cover_times.keys().cloned())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut cover_times = BTreeMap::new();
        let mut subgroup_cover_times = BTreeMap::new();
        for k in keys {
            if let Some(s) = pick(&|o| o.report.cover_times.get(&k).copied()) {
                cover_times.insert(k.clone(), s);
            }
            if let Some(s) = pick(&|o| o.report.subgroup_cover_times.get(&k).copied()) {
                subgroup_cover_times.insert(k, s);
            }
        }
        Self {
            replicates: outcomes.len(),
            base_seed,
            censored,
            censoring_rate: censored as f64 / outcomes.len().max(1) as f64,
            s_avg: Summary::of(&s_avg_samples),
            s_avg_samples,
            pooled_time_var: (pooled.len() >= 2).then(|| stats::sample_variance(&pooled)),
            first_find: pick(&|o| o.report.first_find),
            c_comp_star: pick(&|o| o.report.c_comp_star),
            c_prop: pick(&|o| o.report.c_prop),
            g_size: pick(&|o| o.report.g_size),
            f_count: pick(&|o| o.report.f_count.map(|f| f as f64)),
            cover_times,
            subgroup_cover_times,
            lock_runs: outcomes.iter().filter(|o| o.lock_agent_ticks > 0).count(),
        }
    }
}

/// Runs replicate `index` of a batch.
pub fn run_replicate(
    config: &SimConfig,
    base_seed: u64,
    index: usize,
    cover_fractions: &[f64],
) -> Result<ReplicateOutcome, ExperimentError> {
    let seed = replicate_seed(base_seed, index as u64);
    let cfg = SimConfig {
        seed,
        ..config.clone()
    };
    let log = run_simulation(&cfg)?;
    let report = MetricsReport::from_log(&log, cover_fractions);
    let search_times = if cfg.targets_enabled {
        log.arrival_ticks
            .iter()
            .flatten()
            .map(|&t| t as f64 / cfg.c_f)
            .collect()
    } else {
        Vec::new()
    };
    Ok(ReplicateOutcome {
        index,
        seed,
        search_times,
        censored: cfg.targets_enabled && log.is_censored(),
        lock_agent_ticks: log.lock_agent_ticks,
        report,
    })
}

/// Number of censored replicates a batch of this size tolerates.
pub fn censoring_allowance(replicates: usize) -> usize {
    (CENSORING_LIMIT * replicates as f64).floor() as usize
}

/// Runs `replicates` seeded replicates and folds them in index order.
///
/// Fails as soon as more replicates are censored than the batch tolerates.
pub fn run_batch(
    config: &SimConfig,
    replicates: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<BatchStats, ExperimentError> {
    Ok(BatchStats::from_outcomes(
        base_seed,
        &run_outcomes(config, replicates, base_seed, execution, &[])?,
    ))
}

/// Like [`run_batch`] but also returns each replicate and evaluates
/// cover times at `cover_fractions`.
pub fn run_outcomes(
    config: &SimConfig,
    replicates: usize,
    base_seed: u64,
    execution: Execution,
    cover_fractions: &[f64],
) -> Result<Vec<ReplicateOutcome>, ExperimentError> {
    if replicates == 0 {
        return Err(ExperimentError::NoReplicates);
    }
    config.validate().map_err(EngineError::from)?;
    let limit = censoring_allowance(replicates);
    let mut outcomes = Vec::with_capacity(replicates);
    let mut censored = 0;
    let bs = block_size(execution);
    for start in (0..replicates).step_by(bs) {
        let block = start..(start + bs).min(replicates);
        let run = |i| run_replicate(config, base_seed, i, cover_fractions);
        let done: Vec<_> = match execution {
            Execution::Serial => block.map(run).collect::<Result<_, _>>()?,
            Execution::Parallel => block
                .into_par_iter()
                .map(run)
                .collect::<Result<Vec<_>, _>>()?,
        };
        censored += done.iter().filter(|o| o.censored).count();
        outcomes.extend(done);
        if censored > limit {
            return Err(ExperimentError::Censored {
                censored,
                run: outcomes.len(),
                replicates,
                limit,
            });
        }
    }
    Ok(outcomes)
}

/// Grid value with the smallest score; ties go to the smaller σ. Values
/// whose evaluation fails are skipped.
pub fn best_sigma_by<E: std::fmt::Display>(
    grid: &[f64],
    mut score: impl FnMut(f64) -> Result<f64, E>,
) -> Result<(f64, f64), ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    let mut errors = Vec::new();
    for sigma in sorted {
        match score(sigma) {
            Ok(v) if best.is_none_or(|(_, b)| v < b) => best = Some((sigma, v)),
            Ok(_) => {}
            Err(e) => errors.push(format!("sigma {sigma}: {e}")),
        }
    }
    best.ok_or_else(|| ExperimentError::AllFailed(errors.join("; ")))
}

/// One σ of a [`best_sigma`] scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub sigma: f64,
    /// `None` when the batch failed (censored).
    pub stats: Option<BatchStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaScan {
    pub sigma: f64,
    pub mean_s_avg: f64,
    pub points: Vec<SigmaPoint>,
}

impl SigmaScan {
    pub fn best_stats(&self) -> &BatchStats {
        self.points
            .iter()
            .find(|p| p.sigma == self.sigma)
            .and_then(|p| p.stats.as_ref())
            .expect("best sigma has statistics")
    }
}

/// σ from `grid` minimizing mean `S_avg` for `template`. Censored σ values
/// are disqualified.
pub fn best_sigma(
    template: &SimConfig,
    grid: &[f64],
    replicates: usize,
    base_seed: u64,
) -> Result<SigmaScan, ExperimentError> {
    let mut points = Vec::new();
    let (sigma, mean_s_avg) = best_sigma_by(grid, |sigma| {
        let cfg = SimConfig {
            sigma,
            ..template.clone()
        };
        let res = run_batch(&cfg, replicates, base_seed, Execution::Parallel);
        let out = match &res {
            Ok(s) => s.mean_s_avg().ok_or_else(|| "no searching times".to_string()),
            Err(e) => Err(e.to_string()),
        };
        points.push(SigmaPoint {
            sigma,
            stats: res.ok(),
        });
        out
    })?;
    Ok(SigmaScan {
        sigma,
        mean_s_avg,
        points,
    })
}

/// One point of a normalized curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rho: f64,
    pub sigma: f64,
    pub mean_s_avg: f64,
    pub normalized: f64,
}

/// For each ρ keeps the σ with the smallest mean and divides by the
/// baseline mean. `results` holds `(rho, sigma, mean S_avg)`.
pub fn normalized_curve(results: &[(f64, f64, f64)], baseline: f64) -> Vec<CurvePoint> {
    let mut best: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
    let mut sorted = results.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for (rho, sigma, mean) in sorted {
        let e = best.entry(rho.to_bits()).or_insert((rho, sigma, mean));
        if mean < e.2 {
            *e = (rho, sigma, mean);
        }
    }
    let mut out: Vec<CurvePoint> = best
        .into_values()
        .map(|(rho, sigma, mean_s_avg)| CurvePoint {
            rho,
            sigma,
            mean_s_avg,
            normalized: mean_s_avg / baseline,
        })
        .collect();
    out.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    out
}

/// Baseline mean over `S_avg` divided by the instance mean.
pub fn improvement_factor(baseline_mean: f64, instance_mean: f64) -> f64 {
    baseline_mean / instance_mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Recording;

    fn small() -> SimConfig {
        SimConfig {
            side_length: 600.0,
            agents: 6,
            r_s: 60.0,
            r_t: 10.0,
            sigma: 10.0,
            rho: 0.3,
            record: Recording::lean(),
            ..SimConfig::default()
        }
    }

    #[test]
    fn single_replicate_equals_single_run() {
        let cfg = small();
        let stats = run_batch(&cfg, 1, 42, Execution::Serial).unwrap();
        let log = run_simulation(&SimConfig {
            seed: replicate_seed(42, 0),
            ..cfg
        })
        .unwrap();
        let report = MetricsReport::from_log(&log, &[]);
        assert_eq!(stats.s_avg.unwrap().mean, report.s_avg.unwrap());
        assert_eq!(stats.s_avg.unwrap().std, 0.0);
        assert_eq!(stats.c_comp_star.unwrap().mean, report.c_comp_star.unwrap());
        assert_eq!(stats.replicates, 1);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let cfg = small();
        let a = run_batch(&cfg, 40, 7, Execution::Serial).unwrap();
        let b = run_batch(&cfg, 40, 7, Execution::Parallel).unwrap();
        let c = run_batch(&cfg, 40, 7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        let d = run_batch(&cfg, 40, 8, Execution::Parallel).unwrap();
        assert_ne!(a.s_avg_samples, d.s_avg_samples);
    }

    #[test]
    fn censoring_fails_the_batch() {
        let cfg = SimConfig {
            max_ticks: Some(3),
            ..small()
        };
        let err = run_batch(&cfg, 10, 1, Execution::Serial).unwrap_err();
        assert!(matches!(err, ExperimentError::Censored { limit: 0, .. }), "{err}");
        assert_eq!(censoring_allowance(300), 0);
        assert_eq!(censoring_allowance(1000), 1);
        assert!(matches!(
            run_batch(&cfg, 0, 1, Execution::Serial),
            Err(ExperimentError::NoReplicates)
        ));
    }

    #[test]
    fn best_sigma_single_and_planted() {
        let r = best_sigma_by(&[4.0], |_| Ok::<_, String>(9.0)).unwrap();
        assert_eq!(r, (4.0, 9.0));
        let grid = [1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 20.0];
        for (k, &planted) in grid.iter().enumerate() {
            let r = best_sigma_by(&grid, |s| {
                Ok::<_, String>(if s == planted { 1.0 } else { 2.0 + (s - planted).abs() })
            })
            .unwrap();
            assert_eq!(r.0, planted, "planted at {k}");
        }
        assert!(matches!(
            best_sigma_by(&[], |_| Ok::<_, String>(0.0)),
            Err(ExperimentError::EmptyGrid)
        ));
    }

    #[test]
    fn best_sigma_ties_and_failures() {
        let r = best_sigma_by(&[5.0, 2.0, 3.0], |s| {
            if s == 2.0 {
                Err("censored")
            } else {
                Ok(1.0)
            }
        })
        .unwrap();
        assert_eq!(r, (3.0, 1.0));
        assert!(matches!(
            best_sigma_by(&[1.0], |_| Err::<f64, _>("x")),
            Err(ExperimentError::AllFailed(_))
        ));
    }

    #[test]
    fn best_sigma_on_simulation() {
        let scan = best_sigma(&small(), &[10.0, 30.0], 4, 3).unwrap();
        assert!(scan.sigma == 10.0 || scan.sigma == 30.0);
        assert_eq!(scan.best_stats().mean_s_avg(), Some(scan.mean_s_avg));
        assert_eq!(scan.points.len(), 2);
    }

    #[test]
    fn normalized_curve_picks_best_sigma() {
        let results = [
            (0.0, 1.0, 120.0),
            (0.0, 2.0, 100.0),
            (0.6, 1.0, 80.0),
            (0.6, 3.0, 62.5),
            (0.3, 2.0, 90.0),
        ];
        let curve = normalized_curve(&results, 100.0);
        assert_eq!(curve.len(), 3);
        assert_eq!(curve[0].normalized, 1.0);
        assert_eq!(curve[0].sigma, 2.0);
        assert_eq!((curve[1].rho, curve[1].normalized), (0.3, 0.9));
        assert_eq!((curve[2].sigma, curve[2].normalized), (3.0, 0.625));
        assert_eq!(improvement_factor(100.0, 62.5), 1.6);
    }

    #[test]
    fn summary_of_samples() {
        let s = Summary::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (2.0, 1.0, 3));
        assert!(Summary::of(&[]).is_none());
    }
}
