//! The classifier interface the harness drives, the graph-backed
//! implementation, and stub classifiers used to validate the metrics.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::bins::BinRegistry;
use crate::kg::{ConceptId, KnowledgeGraph};
use crate::reasoner::{classify, classify_focused, SearchConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ClassifierError(pub String);

impl ClassifierError {
    pub fn new(e: impl fmt::Display) -> Self {
        ClassifierError(e.to_string())
    }
}

/// Anything that can place an object into one of a set of contexts.
/// `None` means the object was left unplaced.
pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;

    fn classify(&self, object: &str, contexts: &[String]) -> Result<Option<String>, ClassifierError>;

    /// Same, but only contexts in `focus` may be chosen.
    fn classify_focused(
        &self,
        object: &str,
        contexts: &[String],
        focus: &[String],
    ) -> Result<Option<String>, ClassifierError>;
}

pub type DynClassifier = Box<dyn Classifier>;

/// The commonsense reasoner behind the [`Classifier`] interface. Each
/// context becomes a bin whose id is its normalized label.
pub struct CskClassifier {
    graph: Arc<KnowledgeGraph>,
    cfg: SearchConfig,
}

impl CskClassifier {
    pub fn new(graph: Arc<KnowledgeGraph>, cfg: SearchConfig) -> Self {
        CskClassifier { graph, cfg }
    }
}

impl Classifier for CskClassifier {
    fn name(&self) -> &str {
        "csk"
    }

    fn classify(&self, object: &str, contexts: &[String]) -> Result<Option<String>, ClassifierError> {
        let object = ConceptId::new(object).map_err(ClassifierError::new)?;
        let bins = BinRegistry::from_contexts(contexts).map_err(ClassifierError::new)?;
        let d = classify(&self.graph, &object, &bins, &self.cfg).map_err(ClassifierError::new)?;
        Ok(d.chosen_bin)
    }

    fn classify_focused(
        &self,
        object: &str,
        contexts: &[String],
        focus: &[String],
    ) -> Result<Option<String>, ClassifierError> {
        let object = ConceptId::new(object).map_err(ClassifierError::new)?;
        let bins = BinRegistry::from_contexts(contexts).map_err(ClassifierError::new)?;
        let focus: Vec<String> = focus
            .iter()
            .map(|f| ConceptId::new(f).map(String::from))
            .collect::<Result<_, _>>()
            .map_err(ClassifierError::new)?;
        let d = classify_focused(&self.graph, &object, &bins, &focus, &self.cfg)
            .map_err(ClassifierError::new)?;
        Ok(d.chosen_bin)
    }
}

/// Always answers `answer`, or the first candidate when unset.
#[derive(Debug, Clone, Default)]
pub struct ConstantClassifier {
    pub answer: Option<String>,
}

impl Classifier for ConstantClassifier {
    fn name(&self) -> &str {
        "constant"
    }

    fn classify(&self, _object: &str, contexts: &[String]) -> Result<Option<String>, ClassifierError> {
        Ok(self.answer.clone().or_else(|| contexts.first().cloned()))
    }

    fn classify_focused(
        &self,
        _object: &str,
        _contexts: &[String],
        focus: &[String],
    ) -> Result<Option<String>, ClassifierError> {
        Ok(self.answer.clone().or_else(|| focus.first().cloned()))
    }
}

/// Cycles through the candidates on successive calls.
#[derive(Debug, Default)]
pub struct RoundRobinClassifier {
    calls: AtomicUsize,
}

impl RoundRobinClassifier {
    pub fn new() -> Self {
        Self::default()
    }

    fn pick(&self, options: &[String]) -> Option<String> {
        if options.is_empty() {
            return None;
        }
        let n = self.calls.fetch_add(1, Ordering::Relaxed);
        Some(options[n % options.len()].clone())
    }
}

impl Classifier for RoundRobinClassifier {
    fn name(&self) -> &str {
        "round_robin"
    }

    fn classify(&self, _object: &str, contexts: &[String]) -> Result<Option<String>, ClassifierError> {
        Ok(self.pick(contexts))
    }

    fn classify_focused(
        &self,
        _object: &str,
        _contexts: &[String],
        focus: &[String],
    ) -> Result<Option<String>, ClassifierError> {
        Ok(self.pick(focus))
    }
}

/// Wraps a classifier and ignores focus directives.
pub struct NonAdaptiveClassifier {
    inner: DynClassifier,
}

impl NonAdaptiveClassifier {
    pub fn new(inner: DynClassifier) -> Self {
        NonAdaptiveClassifier { inner }
    }
}

impl Classifier for NonAdaptiveClassifier {
    fn name(&self) -> &str {
        "non_adaptive"
    }

    fn classify(&self, object: &str, contexts: &[String]) -> Result<Option<String>, ClassifierError> {
        self.inner.classify(object, contexts)
    }

    fn classify_focused(
        &self,
        object: &str,
        contexts: &[String],
        _focus: &[String],
    ) -> Result<Option<String>, ClassifierError> {
        self.inner.classify(object, contexts)
    }
}

/// What a classifier constructor may draw on.
#[derive(Clone, Default)]
pub struct ClassifierEnv {
    pub graph: Option<Arc<KnowledgeGraph>>,
    pub search: SearchConfig,
}

type Factory = fn(&ClassifierEnv) -> Result<DynClassifier, ClassifierError>;

/// Classifiers selectable by name.
pub struct ClassifierRegistry {
    entries: Vec<(&'static str, Factory)>,
}

impl ClassifierRegistry {
    pub fn empty() -> Self {
        ClassifierRegistry { entries: Vec::new() }
    }

    /// `csk`, `constant`, `round_robin`, `non_adaptive`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("csk", |env| {
            let graph = env
                .graph
                .clone()
                .ok_or_else(|| ClassifierError("the csk classifier needs a graph".into()))?;
            Ok(Box::new(CskClassifier::new(graph, env.search.clone())))
        });
        r.register("constant", |_| Ok(Box::new(ConstantClassifier::default())));
        r.register("round_robin", |_| Ok(Box::new(RoundRobinClassifier::new())));
        r.register("non_adaptive", |env| {
            let inner: DynClassifier = match &env.graph {
                Some(g) => Box::new(CskClassifier::new(g.clone(), env.search.clone())),
                None => Box::new(ConstantClassifier::default()),
            };
            Ok(Box::new(NonAdaptiveClassifier::new(inner)))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn create(&self, name: &str, env: &ClassifierEnv) -> Result<DynClassifier, ClassifierError> {
        let (_, factory) = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ClassifierError(format!("unknown classifier `{name}`")))?;
        factory(env)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }
}
