use serde::{Deserialize, Serialize};

/// One detector output: `{"frame", "label", "confidence", "bbox": [x, y, w, h]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub frame: u64,
    pub label: String,
    pub confidence: f64,
    pub bbox: [f64; 4],
}

impl DetectionEvent {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        let [x, y, w, h] = self.bbox;
        if !self.bbox.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(format!("bbox {:?} has a negative or non-finite coordinate", self.bbox));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(format!("bbox at ({x}, {y}) has empty size {w}x{h}"));
        }
        Ok(())
    }
}

/// A stream line that was skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamIssue {
    pub line: usize,
    pub frame: Option<u64>,
    pub message: String,
}

/// Parses and validates one JSON-lines detection.
pub fn parse_event_line(line: &str) -> Result<DetectionEvent, (Option<u64>, String)> {
    let event: DetectionEvent = match serde_json::from_str(line) {
        Ok(e) => e,
        Err(e) => {
            let frame = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("frame").and_then(serde_json::Value::as_u64));
            return Err((frame, e.to_string()));
        }
    };
    event.validate().map_err(|m| (Some(event.frame), m))?;
    Ok(event)
}
