//! Summary tables and frame dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::engine::{EventLog, FrameRecord};
use crate::experiments::{BatchStats, Summary, SweepResult};

use super::{IoError, FORMAT_VERSION};

/// Column order of the summary table.
pub const SUMMARY_COLUMNS: [&str; 24] = [
    "n",
    "t",
    "v",
    "c_f",
    "r_s",
    "r_t",
    "r1_frac",
    "r2_frac",
    "rho",
    "sigma",
    "replicates",
    "censored",
    "censoring_rate",
    "s_avg_mean",
    "s_avg_std",
    "pooled_time_std",
    "first_find_mean",
    "normalized",
    "c_prop_mean",
    "g_size_mean",
    "c_comp_star_mean",
    "f_count_mean",
    "cover_times",
    "error",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn mean_of(s: Option<Summary>) -> String {
    opt(s.map(|s| s.mean))
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| IoError::file(path, e))
}

/// Path of the structured twin written next to a summary table.
pub fn json_twin(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes one CSV row per instance plus a JSON twin holding the full
/// result. Returns both paths.
pub fn write_summary(result: &SweepResult, csv_path: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut w = csv::Writer::from_writer(create(csv_path)?);
    w.write_record(SUMMARY_COLUMNS)?;
    for inst in &result.instances {
        let c = &inst.config;
        let s: Option<&BatchStats> = inst.stats.as_ref();
        let cover = s
            .map(|s| {
                s.cover_times
                    .iter()
                    .map(|(k, v)| format!("{k}={}", v.mean))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        let row = [
            c.agents.to_string(),
            c.targets.to_string(),
            c.speed.to_string(),
            c.c_f.to_string(),
            c.r_s.to_string(),
            c.r_t.to_string(),
            c.r1_frac.to_string(),
            c.r2_frac.to_string(),
            c.rho.to_string(),
            c.sigma.to_string(),
            result.replicates.to_string(),
            s.map(|s| s.censored.to_string()).unwrap_or_default(),
            opt(s.map(|s| s.censoring_rate)),
            mean_of(s.and_then(|s| s.s_avg)),
            opt(s.and_then(|s| s.s_avg).map(|x| x.std)),
            opt(s.and_then(|s| s.pooled_time_var).map(f64::sqrt)),
            mean_of(s.and_then(|s| s.first_find)),
            opt(inst.normalized),
            mean_of(s.and_then(|s| s.c_prop)),
            mean_of(s.and_then(|s| s.g_size)),
            mean_of(s.and_then(|s| s.c_comp_star)),
            mean_of(s.and_then(|s| s.f_count)),
            cover,
            inst.error.clone().unwrap_or_default(),
        ];
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| IoError::file(csv_path, e))?;

    let twin = json_twin(csv_path);
    let mut j = create(&twin)?;
    serde_json::to_writer_pretty(&mut j, result)?;
    j.write_all(b"\n").map_err(|e| IoError::file(&twin, e))?;
    j.flush().map_err(|e| IoError::file(&twin, e))?;
    Ok(vec![csv_path.to_path_buf(), twin])
}

pub fn read_summary_json(path: &Path) -> Result<SweepResult, IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

/// Frame dump: `#` header lines with the format version, the config and
/// the targets, then one `tick,agent,x,y,heading,state` row per agent and
/// tick.
pub fn write_frames(log: &EventLog, path: &Path) -> Result<(), IoError> {
    let frames = log.trajectory.as_ref().ok_or(IoError::RecordingDisabled)?;
    let mut w = create(path)?;
    let io = |e| IoError::file(path, e);
    writeln!(w, "# groupsearch frames v{FORMAT_VERSION}").map_err(io)?;
    writeln!(w, "# config {}", serde_json::to_string(&log.config)?).map_err(io)?;
    for (i, t) in log.targets.iter().enumerate() {
        writeln!(w, "# target {i} {} {}", t.x, t.y).map_err(io)?;
    }
    writeln!(w, "tick,agent,x,y,heading,state").map_err(io)?;
    for f in frames {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            f.tick,
            f.agent,
            f.x,
            f.y,
            f.heading,
            f.state.as_str()
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Frame rows of a file written by [`write_frames`].
pub fn read_frames(path: &Path) -> Result<Vec<FrameRecord>, IoError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
