//! HTTP service for reviewing line assignments: a disagreement-ordered trial
//! queue, per-trial payloads with every loaded source, and an append-only log
//! of human overrides.

mod api;
mod data;
mod overrides;

use std::path::PathBuf;

use thiserror::Error;

pub use api::{router, serve, AppState};
pub use data::{ReviewData, TrialEntry};
pub use overrides::{OverrideLine, OverrideLog, OverrideRecord};

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error(transparent)]
    Data(#[from] driftlab_core::io::IoError),
    #[error("{path}: unknown source name {name:?}")]
    UnknownSource { path: PathBuf, name: String },
    #[error("{source_name}: {message}")]
    BadRun { source_name: String, message: String },
    #[error("{path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: corrupt override record: {message}")]
    CorruptLog { path: PathBuf, line: usize, message: String },
}
