//! Deterministic simulator of collective food search on a torus.
//!
//! Agents move with constant speed under a three-zone social rule blended
//! with a correlated random walk, switch between Search, Lock and Find
//! states around targets, and are measured through searching times,
//! proximity-graph components and area coverage. The [`experiments`]
//! module runs seeded replicate batches and parameter sweeps on top.

pub mod behavior;
pub mod engine;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod spatial;

pub use engine::{run_simulation, EventLog, SimConfig, Simulation};
pub use geometry::{TorusSpec, Vec2};
pub use metrics::MetricsReport;
