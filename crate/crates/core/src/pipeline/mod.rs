//! Runs a detection stream through the reasoner, keeps the simulated sort
//! state, and writes a replayable decision log.

mod log;
mod run;
mod stream;

use thiserror::Error;

pub use crate::bins::{load_bins, read_bins, Bin, BinError, BinRegistry};
pub use log::{read_log, replay, write_log, LogLine};
pub use run::{run, DecisionRecord, PipelineConfig, RunOutput, SortState, SortedItem};
pub use stream::{parse_event_line, DetectionEvent, StreamIssue};

use crate::reasoner::{ConfigError, ReasonError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Reason(#[from] ReasonError),
    #[error(transparent)]
    Bins(#[from] BinError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("decision log line {line} is corrupt: {reason}")]
    CorruptLogLine { line: usize, reason: String },
    #[error("decision log line {line} names bin `{bin}`, which is not registered")]
    UnknownBin { line: usize, bin: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
