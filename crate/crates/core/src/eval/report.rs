//! Report files: one CSV table per protocol plus `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::protocols::{
    AccuracyReport, AdaptabilityReport, AuditFailureKind, AuditReport, ConsistencyReport,
    TrialOutcome,
};
use super::EvalError;

pub const CONSISTENCY_COLUMNS: [&str; 9] = [
    "object",
    "contexts",
    "focus",
    "repetitions",
    "predominant",
    "modal_count",
    "consistency",
    "histogram",
    "error",
];
pub const ACCURACY_COLUMNS: [&str; 4] = ["object", "expected", "predominant", "correct"];
pub const ADAPTABILITY_COLUMNS: [&str; 8] = [
    "object",
    "preferred",
    "emphasized",
    "focus",
    "answer",
    "shifted",
    "modal_count",
    "repetitions",
];
pub const AUDIT_COLUMNS: [&str; 4] = ["line", "label", "kind", "detail"];

fn histogram_cell(t: &TrialOutcome) -> String {
    t.histogram
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn trial_row(t: &TrialOutcome) -> Vec<String> {
    vec![
        t.object.clone(),
        t.contexts.join(";"),
        t.focus.as_ref().map(|f| f.join(";")).unwrap_or_default(),
        t.repetitions.to_string(),
        t.predominant.clone().unwrap_or_default(),
        t.modal_count.to_string(),
        t.consistency.to_string(),
        histogram_cell(t),
        t.error.clone().unwrap_or_default(),
    ]
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(dir: &Path, value: serde_json::Value) -> Result<PathBuf, EvalError> {
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&value)? + "\n")?;
    Ok(path)
}

/// Writes `consistency.csv` and `summary.json` into `dir`.
pub fn write_consistency(dir: &Path, r: &ConsistencyReport) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    let rows: Vec<_> = r.trials.iter().map(trial_row).collect();
    write_table(&dir.join("consistency.csv"), &CONSISTENCY_COLUMNS, &rows)?;
    write_summary(
        dir,
        json!({
            "protocol": "consistency",
            "classifier": r.classifier,
            "trials": r.trials.len(),
            "failed": r.failed(),
            "fully_consistent": r.fully_consistent(),
            "mean_consistency": r.mean_consistency(),
        }),
    )?;
    Ok(())
}

/// Writes `accuracy.csv`, `consistency.csv` for the same trials, and
/// `summary.json`.
pub fn write_accuracy(dir: &Path, r: &AccuracyReport) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    let rows: Vec<_> = r
        .rows
        .iter()
        .map(|a| {
            vec![
                a.object.clone(),
                a.expected.clone(),
                a.predominant.clone().unwrap_or_default(),
                a.correct.to_string(),
            ]
        })
        .collect();
    write_table(&dir.join("accuracy.csv"), &ACCURACY_COLUMNS, &rows)?;
    let trials: Vec<_> = r.trials.iter().map(trial_row).collect();
    write_table(&dir.join("consistency.csv"), &CONSISTENCY_COLUMNS, &trials)?;
    write_summary(
        dir,
        json!({
            "protocol": "accuracy",
            "classifier": r.classifier,
            "correct": r.correct,
            "total": r.total,
            "accuracy": r.accuracy,
        }),
    )?;
    Ok(())
}

/// Writes `adaptability.csv` (one shift-table row per focused phase, across
/// all reports) and `summary.json`.
pub fn write_adaptability(dir: &Path, reports: &[AdaptabilityReport]) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    let mut rows = Vec::new();
    for r in reports {
        for s in &r.rows {
            rows.push(vec![
                r.object.clone(),
                r.preferred.clone().unwrap_or_default(),
                s.emphasized.clone(),
                s.focus.join(";"),
                s.answer.clone().unwrap_or_default(),
                s.shifted.to_string(),
                s.outcome.modal_count.to_string(),
                s.outcome.repetitions.to_string(),
            ]);
        }
    }
    write_table(&dir.join("adaptability.csv"), &ADAPTABILITY_COLUMNS, &rows)?;
    let objects: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "object": r.object,
                "preferred": r.preferred,
                "rows": r.rows.len(),
                "shifted_rows": r.rows.iter().filter(|s| s.shifted).count(),
                "verdict": r.verdict.as_str(),
            })
        })
        .collect();
    write_summary(
        dir,
        json!({
            "protocol": "adaptability",
            "classifier": reports.first().map(|r| r.classifier.as_str()),
            "objects": objects,
        }),
    )?;
    Ok(())
}

/// Writes `audit.csv` (one row per failure) and `summary.json`.
pub fn write_audit(dir: &Path, r: &AuditReport) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    let rows: Vec<_> = r
        .failures
        .iter()
        .map(|f| {
            vec![
                f.line.to_string(),
                f.label.clone(),
                serde_json::to_value(f.kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                f.detail.clone(),
            ]
        })
        .collect();
    write_table(&dir.join("audit.csv"), &AUDIT_COLUMNS, &rows)?;
    write_summary(
        dir,
        json!({
            "protocol": "audit",
            "records": r.records,
            "matched": r.matched,
            "passed": r.passed,
            "parse_failures": r.count(AuditFailureKind::Parse),
            "invalid_paths": r.count(AuditFailureKind::InvalidPath),
            "score_mismatches": r.count(AuditFailureKind::ScoreMismatch),
            "pass_rate": r.pass_rate(),
        }),
    )?;
    Ok(())
}
