mod common;

use std::collections::HashMap;

use common::*;
use csk_core::bins::{load_bins, read_bins, BinError, BinRegistry};
use csk_core::pipeline::{read_log, replay, run, write_log, PipelineConfig, PipelineError, RunOutput};
use csk_core::reasoner::{classify, parse_path, Reason, ReasonError, SearchConfig};

fn pear_run(stream: &str, cfg: &PipelineConfig) -> RunOutput {
    let g = load_fixture("pear_assertions.tsv");
    let bins = load_bins(&fixture("pear_bins.csv")).unwrap();
    run(stream.as_bytes(), &bins, &g, cfg).unwrap()
}

fn log_text(out: &RunOutput) -> String {
    let mut buf = Vec::new();
    write_log(&out.records, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn bins_file_in_order() {
    let bins = load_bins(&fixture("pear_bins.csv")).unwrap();
    let ids: Vec<&str> = bins.ids().collect();
    assert_eq!(ids, ["kitchen", "garden", "pantry", "dining_room"]);
    assert_eq!(bins.get("dining_room").unwrap().context.as_str(), "dining_room");
}

#[test]
fn duplicate_bin_ids_rejected() {
    let err = read_bins("bin_id,context\nk,kitchen\nk,pantry\n".as_bytes()).unwrap_err();
    assert!(matches!(err, BinError::DuplicateBinId(id) if id == "k"));
}

#[test]
fn header_only_bins_fail_at_classify_time() {
    let bins = read_bins("bin_id,context\n".as_bytes()).unwrap();
    assert!(bins.is_empty());
    let g = load_fixture("pear_assertions.tsv");
    assert!(matches!(
        run("".as_bytes(), &bins, &g, &PipelineConfig::default()),
        Err(PipelineError::Reason(ReasonError::EmptyBinRegistry))
    ));
}

#[test]
fn fixture_stream_matches_individual_classification() {
    let stream = std::fs::read_to_string(fixture("pear_stream.jsonl")).unwrap();
    let out = pear_run(&stream, &PipelineConfig::default());
    let g = load_fixture("pear_assertions.tsv");
    let bins = load_bins(&fixture("pear_bins.csv")).unwrap();
    for r in &out.records {
        let d = classify(&g, &r.concept, &bins, &SearchConfig::default()).unwrap();
        assert_eq!(r.decision, d);
    }
    let placed: Vec<(&str, Option<&str>)> = out
        .records
        .iter()
        .map(|r| (r.concept.as_str(), r.decision.chosen_bin.as_deref()))
        .collect();
    assert_eq!(
        placed,
        [("pear", Some("kitchen")), ("apple", Some("kitchen")), ("scissors", None)]
    );
    assert_eq!(out.state.bin("kitchen").unwrap().len(), 2);
    assert_eq!(out.state.unmatched.len(), 1);
    assert_eq!(out.state.frames_processed, 2);
}

#[test]
fn empty_stream_is_vacuous() {
    let out = pear_run("", &PipelineConfig::default());
    assert!(out.records.is_empty());
    assert_eq!(out.state.total(), 0);
    assert_eq!(out.state.frames_processed, 0);
}

#[test]
fn same_stream_twice_gives_same_log() {
    let stream = synthetic_stream(3, 20, 3, &PEAR_LABELS);
    let a = pear_run(&stream, &PipelineConfig::default());
    let b = pear_run(&stream, &PipelineConfig::default());
    assert_eq!(a.state, b.state);
    assert_eq!(without_timestamps(&log_text(&a)), without_timestamps(&log_text(&b)));
}

#[test]
fn replay_rebuilds_state() {
    let stream = synthetic_stream(11, 50, 3, &PEAR_LABELS);
    let out = pear_run(&stream, &PipelineConfig::default());
    assert_eq!(out.records.len(), 150);
    assert_eq!(out.state.total(), 150);
    let bins = load_bins(&fixture("pear_bins.csv")).unwrap();
    let state = replay(log_text(&out).as_bytes(), &bins).unwrap();
    assert_eq!(state, out.state);
}

#[test]
fn replay_reports_corrupt_line_and_unknown_bin() {
    let stream = std::fs::read_to_string(fixture("pear_stream.jsonl")).unwrap();
    let log = log_text(&pear_run(&stream, &PipelineConfig::default()));
    let bins = load_bins(&fixture("pear_bins.csv")).unwrap();

    let mut lines: Vec<&str> = log.lines().collect();
    lines[1] = "{\"frame\": 0, \"label\": ";
    let corrupt = lines.join("\n");
    assert!(matches!(
        replay(corrupt.as_bytes(), &bins),
        Err(PipelineError::CorruptLogLine { line: 2, .. })
    ));

    let no_kitchen = BinRegistry::from_contexts(["garden", "pantry"]).unwrap();
    assert!(matches!(
        replay(log.as_bytes(), &no_kitchen),
        Err(PipelineError::UnknownBin { line: 1, bin }) if bin == "kitchen"
    ));
}

#[test]
fn dedup_does_not_change_decisions() {
    let stream = synthetic_stream(5, 30, 4, &PEAR_LABELS);
    let on = pear_run(&stream, &PipelineConfig::default());
    let off = pear_run(
        &stream,
        &PipelineConfig {
            dedup: false,
            ..PipelineConfig::default()
        },
    );
    assert_eq!(on.state, off.state);
    let mut first: HashMap<String, &csk_core::reasoner::Decision> = HashMap::new();
    for r in &off.records {
        first.entry(r.concept.to_string()).or_insert(&r.decision);
    }
    for r in &on.records {
        assert_eq!(&r.decision, first[r.concept.as_str()]);
    }
}

#[test]
fn low_confidence_and_bad_lines_are_skipped() {
    let stream = "{\"frame\": 0, \"label\": \"pear\", \"confidence\": 0.3, \"bbox\": [0, 0, 5, 5]}\n\
                  {\"frame\": 0, \"label\": \"pear\", \"confidence\": 0.9, \"bbox\": [0, 0, 0, 5]}\n\
                  not json\n\
                  {\"frame\": 1, \"label\": \"pear\", \"confidence\": 0.9, \"bbox\": [0, 0, 5, 5]}\n";
    let out = pear_run(stream, &PipelineConfig::default());
    assert_eq!(out.below_confidence, 1);
    assert_eq!(out.issues.len(), 2);
    assert_eq!(out.issues[0].frame, Some(0));
    assert_eq!(out.issues[1].line, 3);
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.state.frames_processed, 1);

    let zero = pear_run(
        stream,
        &PipelineConfig {
            min_confidence: 0.0,
            ..PipelineConfig::default()
        },
    );
    assert_eq!(zero.records.len(), 2);
}

#[test]
fn explanations_parse_back_to_winning_paths() {
    let g = load_fixture("pear_assertions.tsv");
    let stream = synthetic_stream(9, 50, 3, &PEAR_LABELS);
    let out = pear_run(&stream, &PipelineConfig::default());
    let log = log_text(&out);
    for ((_, line), rec) in read_log(log.as_bytes()).unwrap().iter().zip(&out.records) {
        if line.reason != Reason::Matched {
            continue;
        }
        let path = parse_path(line.path.as_deref().unwrap()).unwrap().resolve(&g).unwrap();
        assert_eq!(Some(&path), rec.decision.winning_path.as_ref());
    }
}

#[test]
fn annotate_produces_one_summary_per_frame() {
    let stream = std::fs::read_to_string(fixture("pear_stream.jsonl")).unwrap();
    let out = pear_run(
        &stream,
        &PipelineConfig {
            annotate: true,
            ..PipelineConfig::default()
        },
    );
    assert_eq!(
        out.frame_summaries,
        [
            "frame 0: pear -> kitchen; Apple -> kitchen",
            "frame 1: scissors -> (unmatched)"
        ]
    );
}
