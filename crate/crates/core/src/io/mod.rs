//! On-disk formats: run configuration, state snapshots and time-series CSV.

mod config;
mod initial;
mod snapshot;
mod timeseries;

use thiserror::Error;

pub use config::{
    emit_config, parse_config, parse_number, DiagnosticsSection, FitWindow, GradPhiSpec,
    GridConfig, InitialConfig, InitialPreset, ModelConfig, OutputConfig, PicardSection, RunConfig,
};
pub use initial::{build_grid, build_initial, periodic_gaussian};
pub use snapshot::{
    decode_snapshot, encode_snapshot, header_len, read_snapshot, write_snapshot, Snapshot, MAGIC,
    VERSION,
};
pub use timeseries::{emit_timeseries, parse_timeseries, TimeSeries};

#[derive(Debug, Error)]
pub enum IoError {
    /// `line` is 0 when the error is not tied to one line.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("bad magic: not a snapshot file")]
    BadMagic,
    #[error("snapshot version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("truncated snapshot: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error("CSV error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
