//! Fixtures shared by the golden-file tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use groupsearch::engine::Recording;
use groupsearch::experiments::SweepSpec;
use groupsearch::SimConfig;

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Small fixed-seed sweep behind `summary.csv` / `summary.json`.
pub fn smoke_spec() -> SweepSpec {
    let mut axes = BTreeMap::new();
    axes.insert("rho".to_string(), vec![0.0, 0.3]);
    axes.insert("sigma".to_string(), vec![2.0, 10.0]);
    SweepSpec {
        base: SimConfig {
            side_length: 1000.0,
            agents: 6,
            r_s: 60.0,
            record: Recording::lean(),
            ..SimConfig::default()
        },
        axes,
        replicates: 3,
        seed: 2024,
        cover_fractions: vec![],
    }
}

/// Run behind `frames.csv`.
pub fn frames_config() -> SimConfig {
    SimConfig {
        side_length: 1000.0,
        agents: 4,
        r_s: 60.0,
        rho: 0.5,
        seed: 7,
        max_ticks: Some(25),
        record: Recording {
            trajectory: true,
            ..Recording::default()
        },
        ..SimConfig::default()
    }
}
