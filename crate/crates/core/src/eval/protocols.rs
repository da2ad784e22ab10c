use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Serialize;

use super::classifier::Classifier;
use super::trials::{GroundTruth, TrialSpec};
use super::EvalError;
use crate::kg::{ConceptId, KnowledgeGraph};
use crate::pipeline::read_log;
use crate::reasoner::{parse_path, Reason, ScoringStrategy};

/// Histogram key for an unplaced answer.
pub const UNMATCHED: &str = "<unmatched>";

/// Repeated answers for one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub object: String,
    pub contexts: Vec<String>,
    pub focus: Option<Vec<String>>,
    pub repetitions: u32,
    pub histogram: BTreeMap<String, u32>,
    /// Most frequent answer; ties go to the lexicographically smallest.
    pub predominant: Option<String>,
    pub modal_count: u32,
    /// `modal_count / repetitions`.
    pub consistency: f64,
    /// Set when the classifier failed; the histogram then holds the answers
    /// collected before the failure.
    pub error: Option<String>,
}

impl TrialOutcome {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// Predominant answer as a context, `None` if unmatched or failed.
    pub fn predominant_context(&self) -> Option<&str> {
        self.predominant.as_deref().filter(|p| *p != UNMATCHED)
    }
}

pub fn run_trial(spec: &TrialSpec, classifier: &dyn Classifier) -> TrialOutcome {
    let mut histogram = BTreeMap::new();
    let mut error = None;
    for _ in 0..spec.repetitions {
        let answer = match &spec.focus {
            None => classifier.classify(&spec.object, &spec.contexts),
            Some(focus) => classifier.classify_focused(&spec.object, &spec.contexts, focus),
        };
        match answer {
            Ok(a) => *histogram.entry(a.unwrap_or_else(|| UNMATCHED.to_string())).or_insert(0) += 1,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let modal = histogram
        .iter()
        .fold(None::<(&String, u32)>, |best, (k, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((k, v)),
        });
    let (predominant, modal_count) = match (modal, &error) {
        (Some((k, v)), None) => (Some(k.clone()), v),
        _ => (None, 0),
    };
    TrialOutcome {
        object: spec.object.clone(),
        contexts: spec.contexts.clone(),
        focus: spec.focus.clone(),
        repetitions: spec.repetitions,
        histogram,
        predominant,
        modal_count,
        consistency: modal_count as f64 / spec.repetitions as f64,
        error,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub classifier: String,
    pub trials: Vec<TrialOutcome>,
}

impl ConsistencyReport {
    pub fn failed(&self) -> usize {
        self.trials.iter().filter(|t| t.failed()).count()
    }

    pub fn fully_consistent(&self) -> usize {
        self.trials
            .iter()
            .filter(|t| !t.failed() && t.modal_count == t.repetitions)
            .count()
    }

    pub fn mean_consistency(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        self.trials.iter().map(|t| t.consistency).sum::<f64>() / self.trials.len() as f64
    }
}

/// Repeats each spec and records how often the modal answer came back.
pub fn run_consistency(
    specs: &[TrialSpec],
    classifier: &dyn Classifier,
) -> Result<ConsistencyReport, EvalError> {
    if let Some(s) = specs.iter().find(|s| s.repetitions < 2) {
        return Err(EvalError::TooFewRepetitions {
            object: s.object.clone(),
            repetitions: s.repetitions,
        });
    }
    Ok(ConsistencyReport {
        classifier: classifier.name().to_string(),
        trials: specs.iter().map(|s| run_trial(s, classifier)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub object: String,
    pub expected: String,
    pub predominant: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub classifier: String,
    pub trials: Vec<TrialOutcome>,
    pub rows: Vec<AccuracyRow>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Compares each trial's predominant answer with the ground truth.
pub fn run_accuracy(
    specs: &[TrialSpec],
    truth: &GroundTruth,
    classifier: &dyn Classifier,
) -> Result<AccuracyReport, EvalError> {
    for s in specs {
        let expected = truth
            .expected(&s.object)
            .ok_or_else(|| EvalError::MissingGroundTruth(s.object.clone()))?;
        if !s.contexts.iter().any(|c| c == expected) {
            return Err(EvalError::TruthOutsideCandidates {
                object: s.object.clone(),
                context: expected.to_string(),
            });
        }
    }
    let trials: Vec<TrialOutcome> = specs.iter().map(|s| run_trial(s, classifier)).collect();
    let rows: Vec<AccuracyRow> = trials
        .iter()
        .map(|t| {
            let expected = truth.expected(&t.object).unwrap_or_default().to_string();
            AccuracyRow {
                correct: t.predominant_context() == Some(expected.as_str()),
                object: t.object.clone(),
                predominant: t.predominant.clone(),
                expected,
            }
        })
        .collect();
    let correct = rows.iter().filter(|r| r.correct).count();
    let total = rows.len();
    Ok(AccuracyReport {
        classifier: classifier.name().to_string(),
        trials,
        rows,
        correct,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Adaptivity {
    Adaptive,
    NonAdaptive,
}

impl Adaptivity {
    pub fn as_str(self) -> &'static str {
        match self {
            Adaptivity::Adaptive => "ADAPTIVE",
            Adaptivity::NonAdaptive => "NON-ADAPTIVE",
        }
    }
}

/// One focused phase: the preferred context is excluded to emphasize
/// `emphasized` among the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftRow {
    pub emphasized: String,
    pub focus: Vec<String>,
    pub outcome: TrialOutcome,
    pub answer: Option<String>,
    /// The predominant answer differs from the unfocused preference.
    pub shifted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptabilityReport {
    pub classifier: String,
    pub object: String,
    pub contexts: Vec<String>,
    pub baseline: TrialOutcome,
    pub preferred: Option<String>,
    pub rows: Vec<ShiftRow>,
    pub verdict: Adaptivity,
}

/// Unfocused phase to find the preferred context, then one focused phase
/// per remaining context with the preferred context excluded.
pub fn run_adaptability(
    object: &str,
    contexts: &[String],
    repetitions: u32,
    classifier: &dyn Classifier,
) -> Result<AdaptabilityReport, EvalError> {
    let base_spec = TrialSpec::new(object, contexts, repetitions, None).map_err(|reason| {
        EvalError::MalformedInput { line: 0, reason }
    })?;
    if base_spec.contexts.len() < 2 {
        return Err(EvalError::TooFewContexts(base_spec.contexts.len()));
    }
    let baseline = run_trial(&base_spec, classifier);
    if let Some(e) = &baseline.error {
        return Err(EvalError::Classifier(e.clone()));
    }
    let preferred = baseline.predominant_context().map(str::to_string);

    let focus: Vec<String> = base_spec
        .contexts
        .iter()
        .filter(|c| Some(c.as_str()) != preferred.as_deref())
        .cloned()
        .collect();
    let mut rows = Vec::with_capacity(focus.len());
    for emphasized in &focus {
        let spec = TrialSpec {
            focus: Some(focus.clone()),
            ..base_spec.clone()
        };
        let outcome = run_trial(&spec, classifier);
        if let Some(e) = &outcome.error {
            return Err(EvalError::Classifier(e.clone()));
        }
        let answer = outcome.predominant_context().map(str::to_string);
        rows.push(ShiftRow {
            emphasized: emphasized.clone(),
            focus: focus.clone(),
            shifted: answer != preferred,
            answer,
            outcome,
        });
    }
    let verdict = if rows.iter().any(|r| r.shifted) {
        Adaptivity::Adaptive
    } else {
        Adaptivity::NonAdaptive
    };
    Ok(AdaptabilityReport {
        classifier: classifier.name().to_string(),
        object: base_spec.object,
        contexts: base_spec.contexts,
        baseline,
        preferred,
        rows,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditFailureKind {
    /// Explanation text does not parse.
    Parse,
    /// Parsed path is missing from the graph or does not end at the object.
    InvalidPath,
    /// Recomputed score differs from the logged score.
    ScoreMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditFailure {
    pub line: usize,
    pub label: String,
    pub kind: AuditFailureKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub records: usize,
    pub matched: usize,
    pub passed: usize,
    pub failures: Vec<AuditFailure>,
}

impl AuditReport {
    pub fn count(&self, kind: AuditFailureKind) -> usize {
        self.failures.iter().filter(|f| f.kind == kind).count()
    }

    pub fn pass_rate(&self) -> f64 {
        if self.matched == 0 {
            1.0
        } else {
            self.passed as f64 / self.matched as f64
        }
    }
}

/// Checks every matched log record: its explanation parses, the path exists
/// in `g` and ends at the record's concept, and its score under `strategy`
/// equals the logged score.
pub fn run_explainability_audit<R: BufRead>(
    log: R,
    g: &KnowledgeGraph,
    strategy: &dyn ScoringStrategy,
) -> Result<AuditReport, EvalError> {
    let lines = read_log(log)?;
    let mut report = AuditReport {
        records: lines.len(),
        matched: 0,
        passed: 0,
        failures: Vec::new(),
    };
    for (line, entry) in lines {
        if entry.reason != Reason::Matched {
            continue;
        }
        report.matched += 1;
        let fail = |kind, detail: String| AuditFailure {
            line,
            label: entry.label.clone(),
            kind,
            detail,
        };
        let text = entry.path.as_deref().unwrap_or_default();
        let shape = match parse_path(text) {
            Ok(s) => s,
            Err(e) => {
                report.failures.push(fail(AuditFailureKind::Parse, e.to_string()));
                continue;
            }
        };
        let path = match shape.resolve(g) {
            Ok(p) => p,
            Err(e) => {
                report.failures.push(fail(AuditFailureKind::InvalidPath, e.to_string()));
                continue;
            }
        };
        let ends_at_object = ConceptId::new(&entry.concept).is_ok_and(|c| &c == path.object());
        if !ends_at_object {
            report.failures.push(fail(
                AuditFailureKind::InvalidPath,
                format!("path ends at `{}`, record concept is `{}`", path.object(), entry.concept),
            ));
            continue;
        }
        let score = strategy.score(&path.weights());
        if entry.score != Some(score) {
            report.failures.push(fail(
                AuditFailureKind::ScoreMismatch,
                format!("logged {:?}, recomputed {score}", entry.score),
            ));
            continue;
        }
        report.passed += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::classifier::{ClassifierError, ConstantClassifier, RoundRobinClassifier};

    fn spec(object: &str, contexts: &[&str], reps: u32) -> TrialSpec {
        TrialSpec::new(object, contexts, reps, None).unwrap()
    }

    struct Failing;

    impl Classifier for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn classify(&self, _: &str, _: &[String]) -> Result<Option<String>, ClassifierError> {
            Err(ClassifierError("boom".into()))
        }
        fn classify_focused(
            &self,
            o: &str,
            c: &[String],
            _: &[String],
        ) -> Result<Option<String>, ClassifierError> {
            self.classify(o, c)
        }
    }

    #[test]
    fn alternating_answers_give_half() {
        let r = run_consistency(&[spec("apple", &["kitchen", "bedroom"], 10)], &RoundRobinClassifier::new())
            .unwrap();
        let t = &r.trials[0];
        assert_eq!(t.consistency, 0.5);
        assert_eq!(t.histogram.values().sum::<u32>(), 10);
        // tie breaks to the smallest key
        assert_eq!(t.predominant.as_deref(), Some("bedroom"));
    }

    #[test]
    fn two_identical_answers_are_fully_consistent() {
        let r = run_consistency(&[spec("apple", &["kitchen"], 2)], &ConstantClassifier::default()).unwrap();
        assert_eq!(r.trials[0].consistency, 1.0);
        assert_eq!(r.fully_consistent(), 1);
    }

    #[test]
    fn single_repetition_rejected() {
        let err = run_consistency(&[spec("apple", &["kitchen"], 1)], &ConstantClassifier::default());
        assert!(matches!(err, Err(EvalError::TooFewRepetitions { .. })));
    }

    #[test]
    fn failures_are_marked_not_fatal() {
        let specs = [spec("apple", &["kitchen"], 3), spec("pear", &["kitchen"], 3)];
        let r = run_consistency(&specs, &Failing).unwrap();
        assert_eq!(r.failed(), 2);
        assert_eq!(r.trials[0].consistency, 0.0);
    }

    #[test]
    fn three_of_four_correct() {
        let specs = [
            spec("a", &["x", "y"], 2),
            spec("b", &["x", "y"], 2),
            spec("c", &["x", "y"], 2),
            spec("d", &["x", "y"], 2),
        ];
        let truth = GroundTruth::new([("a", "x"), ("b", "x"), ("c", "x"), ("d", "y")]).unwrap();
        let r = run_accuracy(&specs, &truth, &ConstantClassifier::default()).unwrap();
        assert_eq!((r.correct, r.total), (3, 4));
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn missing_truth_is_an_error() {
        let truth = GroundTruth::new([("a", "x")]).unwrap();
        let err = run_accuracy(&[spec("b", &["x"], 2)], &truth, &ConstantClassifier::default());
        assert!(matches!(err, Err(EvalError::MissingGroundTruth(o)) if o == "b"));
    }

    #[test]
    fn constant_classifier_is_non_adaptive() {
        let c = ConstantClassifier {
            answer: Some("kitchen".into()),
        };
        let ctx: Vec<String> = ["kitchen", "living_room", "bedroom", "bathroom"]
            .map(String::from)
            .to_vec();
        let r = run_adaptability("apple", &ctx, 10, &c).unwrap();
        assert_eq!(r.preferred.as_deref(), Some("kitchen"));
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|s| !s.shifted));
        assert_eq!(r.verdict, Adaptivity::NonAdaptive);
    }

    #[test]
    fn two_contexts_give_one_row() {
        let ctx = vec!["kitchen".to_string(), "bedroom".to_string()];
        let r = run_adaptability("apple", &ctx, 3, &ConstantClassifier::default()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].answer.as_deref(), Some("bedroom"));
        assert_eq!(r.verdict, Adaptivity::Adaptive);
    }

    #[test]
    fn one_context_rejected() {
        let ctx = vec!["kitchen".to_string()];
        assert!(matches!(
            run_adaptability("apple", &ctx, 3, &ConstantClassifier::default()),
            Err(EvalError::TooFewContexts(1))
        ));
    }

    #[test]
    fn empty_log_passes_vacuously() {
        let g = KnowledgeGraph::from_edges(Vec::new());
        let r = run_explainability_audit("".as_bytes(), &g, &crate::reasoner::FirstEdgeWeight).unwrap();
        assert_eq!((r.records, r.matched, r.failures.len()), (0, 0, 0));
        assert_eq!(r.pass_rate(), 1.0);
    }
}
