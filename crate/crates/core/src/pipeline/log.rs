use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::run::{DecisionRecord, SortState, SortedItem};
use super::PipelineError;
use crate::bins::BinRegistry;
use crate::reasoner::Reason;

/// One decision-log line. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogLine {
    pub frame: u64,
    pub label: String,
    pub concept: String,
    pub bin: Option<String>,
    pub reason: Reason,
    pub score: Option<f64>,
    pub path: Option<String>,
    pub timestamp: u64,
}

pub fn write_log<W: Write>(records: &[DecisionRecord], mut out: W) -> Result<(), PipelineError> {
    for r in records {
        let line = serde_json::to_string(&r.to_log_line()).map_err(std::io::Error::other)?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a decision log; blank lines are ignored, line numbers are 1-based.
pub fn read_log<R: BufRead>(reader: R) -> Result<Vec<(usize, LogLine)>, PipelineError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine =
            serde_json::from_str(&line).map_err(|e| PipelineError::CorruptLogLine {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        let consistent = match parsed.reason {
            Reason::Matched => parsed.bin.is_some() && parsed.path.is_some() && parsed.score.is_some(),
            Reason::Unmatched | Reason::UnknownObject => parsed.bin.is_none() && parsed.path.is_none(),
        };
        if !consistent {
            return Err(PipelineError::CorruptLogLine {
                line: idx + 1,
                reason: format!("fields disagree with reason `{}`", parsed.reason.as_str()),
            });
        }
        out.push((idx + 1, parsed));
    }
    Ok(out)
}

/// Rebuilds the sort state from a decision log alone.
pub fn replay<R: BufRead>(log: R, bins: &BinRegistry) -> Result<SortState, PipelineError> {
    let mut state = SortState::new(bins);
    let mut frames = BTreeSet::new();
    for (line, entry) in read_log(log)? {
        frames.insert(entry.frame);
        let item = SortedItem {
            frame: entry.frame,
            label: entry.label,
            concept: entry.concept,
        };
        match entry.bin {
            Some(bin) => {
                if !state.place(&bin, item) {
                    return Err(PipelineError::UnknownBin { line, bin });
                }
            }
            None => state.unmatched.push(item),
        }
    }
    state.frames_processed = frames.len() as u64;
    Ok(state)
}
