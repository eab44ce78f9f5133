//! Lab runner: experiment configs, the test suites, run manifests and field snapshots.
//!
//! [`suites::run`] executes the suites named by an [`config::ExperimentConfig`] and returns a
//! [`record::RunManifest`] whose bytes depend only on the config.

pub mod config;
pub mod oracles;
pub mod record;
pub mod snapshot;
pub mod suites;

pub use config::ExperimentConfig;
pub use record::{RunManifest, TestRecord, Tolerance};
pub use snapshot::{Snapshot, SnapshotError};
