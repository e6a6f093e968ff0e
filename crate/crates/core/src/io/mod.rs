//! Configuration files, binary snapshots and report files.

pub mod config;
pub mod report;
pub mod snapshot;

pub use config::{Command, ConfigValue, Job, RunConfig};
pub use report::{emit_report, parse_report, read_report, write_report};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot, SnapshotHeader};
