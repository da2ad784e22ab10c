use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::log::LogLine;
use super::stream::{parse_event_line, StreamIssue};
use super::PipelineError;
use crate::bins::BinRegistry;
use crate::kg::{ConceptId, KnowledgeGraph};
use crate::reasoner::{classify, ConfigError, ConfigFile, Decision, Reason, SearchConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub search: SearchConfig,
    /// Detections below this confidence are ignored.
    pub min_confidence: f64,
    /// Classify each distinct concept once per run.
    pub dedup: bool,
    /// Produce a text summary per frame.
    pub annotate: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            search: SearchConfig::default(),
            min_confidence: 0.5,
            dedup: true,
            annotate: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(file: &ConfigFile) -> Result<Self, ConfigError> {
        let mut known = SearchConfig::KEYS.to_vec();
        known.extend(["min_confidence", "dedup", "annotate"]);
        file.ensure_only(&known)?;

        let mut cfg = PipelineConfig {
            search: SearchConfig::from_file(file)?,
            ..Self::default()
        };
        if let Some(v) = file.get("min_confidence") {
            cfg.min_confidence = match v.parse::<f64>() {
                Ok(c) if (0.0..=1.0).contains(&c) => c,
                _ => {
                    return Err(ConfigError::InvalidValue {
                        key: "min_confidence".into(),
                        reason: "expected a number in [0, 1]".into(),
                    })
                }
            };
        }
        if let Some(v) = file.get("dedup") {
            cfg.dedup = parse_bool("dedup", v)?;
        }
        if let Some(v) = file.get("annotate") {
            cfg.annotate = parse_bool("annotate", v)?;
        }
        Ok(cfg)
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.into(),
            reason: "expected true or false".into(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortedItem {
    pub frame: u64,
    pub label: String,
    pub concept: String,
}

/// Contents of every bin plus the objects that matched none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortState {
    pub bins: Vec<(String, Vec<SortedItem>)>,
    pub unmatched: Vec<SortedItem>,
    /// Distinct frames that had at least one processed detection.
    pub frames_processed: u64,
}

impl SortState {
    pub fn new(bins: &BinRegistry) -> Self {
        SortState {
            bins: bins.ids().map(|id| (id.to_string(), Vec::new())).collect(),
            unmatched: Vec::new(),
            frames_processed: 0,
        }
    }

    /// Appends to `bin`; returns false if the bin is not known.
    pub(crate) fn place(&mut self, bin: &str, item: SortedItem) -> bool {
        match self.bins.iter_mut().find(|(id, _)| id == bin) {
            Some((_, items)) => {
                items.push(item);
                true
            }
            None => false,
        }
    }

    pub fn bin(&self, id: &str) -> Option<&[SortedItem]> {
        self.bins
            .iter()
            .find(|(b, _)| b == id)
            .map(|(_, items)| items.as_slice())
    }

    pub fn placed_count(&self) -> usize {
        self.bins.iter().map(|(_, items)| items.len()).sum()
    }

    pub fn total(&self) -> usize {
        self.placed_count() + self.unmatched.len()
    }
}

/// One processed detection and the decision made for it.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub frame: u64,
    pub label: String,
    pub concept: ConceptId,
    pub decision: Decision,
    pub explanation: Option<String>,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

impl DecisionRecord {
    pub fn to_log_line(&self) -> LogLine {
        LogLine {
            frame: self.frame,
            label: self.label.clone(),
            concept: self.concept.to_string(),
            bin: self.decision.chosen_bin.clone(),
            reason: self.decision.reason,
            score: self.decision.score,
            path: self.explanation.clone(),
            timestamp: self.timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub state: SortState,
    pub records: Vec<DecisionRecord>,
    pub issues: Vec<StreamIssue>,
    pub below_confidence: usize,
    pub frame_summaries: Vec<String>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Processes `stream` line by line in order. Bad lines are recorded in
/// [`RunOutput::issues`] and skipped.
pub fn run<R: BufRead>(
    stream: R,
    bins: &BinRegistry,
    g: &KnowledgeGraph,
    cfg: &PipelineConfig,
) -> Result<RunOutput, PipelineError> {
    if bins.is_empty() {
        return Err(crate::reasoner::ReasonError::EmptyBinRegistry.into());
    }
    let mut state = SortState::new(bins);
    let mut records = Vec::new();
    let mut issues = Vec::new();
    let mut below_confidence = 0;
    let mut frames = BTreeSet::new();
    let mut cache: HashMap<ConceptId, Decision> = HashMap::new();
    let mut summaries = Vec::new();
    let mut current: Option<(u64, String)> = None;

    for (idx, line) in stream.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let event = match parse_event_line(&line) {
            Ok(e) => e,
            Err((frame, message)) => {
                issues.push(StreamIssue {
                    line: line_no,
                    frame,
                    message,
                });
                continue;
            }
        };
        if event.confidence < cfg.min_confidence {
            below_confidence += 1;
            continue;
        }
        let concept = match ConceptId::new(&event.label) {
            Ok(c) => c,
            Err(e) => {
                issues.push(StreamIssue {
                    line: line_no,
                    frame: Some(event.frame),
                    message: e.to_string(),
                });
                continue;
            }
        };

        let decision = if cfg.dedup {
            match cache.get(&concept) {
                Some(d) => d.clone(),
                None => {
                    let d = classify(g, &concept, bins, &cfg.search)?;
                    cache.insert(concept.clone(), d.clone());
                    d
                }
            }
        } else {
            classify(g, &concept, bins, &cfg.search)?
        };

        let item = SortedItem {
            frame: event.frame,
            label: event.label.clone(),
            concept: concept.to_string(),
        };
        match (&decision.reason, &decision.chosen_bin) {
            (Reason::Matched, Some(bin)) => {
                let placed = state.place(bin, item);
                debug_assert!(placed, "classifier chose a bin outside the registry");
            }
            _ => state.unmatched.push(item),
        }
        frames.insert(event.frame);

        if cfg.annotate {
            let target = decision.chosen_bin.as_deref().unwrap_or("(unmatched)");
            match &mut current {
                Some((f, text)) if *f == event.frame => {
                    let _ = write!(text, "; {} -> {}", event.label, target);
                }
                _ => {
                    if let Some((_, text)) = current.take() {
                        summaries.push(text);
                    }
                    current = Some((
                        event.frame,
                        format!("frame {}: {} -> {}", event.frame, event.label, target),
                    ));
                }
            }
        }

        records.push(DecisionRecord {
            frame: event.frame,
            label: event.label,
            concept,
            explanation: decision.explanation(),
            decision,
            timestamp: now_ms(),
        });
    }
    if let Some((_, text)) = current {
        summaries.push(text);
    }
    state.frames_processed = frames.len() as u64;

    Ok(RunOutput {
        state,
        records,
        issues,
        below_confidence,
        frame_summaries: summaries,
    })
}
