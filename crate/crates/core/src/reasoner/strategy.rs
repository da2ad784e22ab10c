//! Path scoring strategies, selectable by name.

use std::fmt;
use std::sync::Arc;

/// Scores a path from its hop weights, listed from the context end.
/// Callers never pass an empty slice.
pub trait ScoringStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn score(&self, weights: &[f64]) -> f64;
}

pub type DynStrategy = Arc<dyn ScoringStrategy>;

/// Weight of the hop leaving the context concept.
#[derive(Debug, Default, Clone, Copy)]
pub struct FirstEdgeWeight;

impl ScoringStrategy for FirstEdgeWeight {
    fn name(&self) -> &'static str {
        "first_edge_weight"
    }

    fn score(&self, weights: &[f64]) -> f64 {
        weights[0]
    }
}

/// Arithmetic mean of all hop weights.
#[derive(Debug, Default, Clone, Copy)]
pub struct AverageWeight;

impl ScoringStrategy for AverageWeight {
    fn name(&self) -> &'static str {
        "average_weight"
    }

    fn score(&self, weights: &[f64]) -> f64 {
        weights.iter().sum::<f64>() / weights.len() as f64
    }
}

type Ctor = fn() -> DynStrategy;

pub struct StrategyRegistry {
    entries: Vec<(&'static str, Ctor)>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { entries: Vec::new() }
    }

    /// Registry holding `first_edge_weight` and `average_weight`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("first_edge_weight", || Arc::new(FirstEdgeWeight));
        r.register("average_weight", || Arc::new(AverageWeight));
        r
    }

    pub fn register(&mut self, name: &'static str, ctor: Ctor) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, ctor));
    }

    /// Accepts snake_case (`average_weight`) and CamelCase (`AverageWeight`).
    pub fn get(&self, name: &str) -> Option<DynStrategy> {
        let key = snake_case(name.trim());
        self.entries
            .iter()
            .find(|(n, _)| *n == key)
            .map(|(_, ctor)| ctor())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }
}

fn snake_case(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 4);
    for (i, ch) in s.chars().enumerate() {
        if ch.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(ch.to_ascii_lowercase());
        } else if ch == '-' {
            out.push('_');
        } else {
            out.push(ch);
        }
    }
    out
}

pub fn strategy_by_name(name: &str) -> Option<DynStrategy> {
    StrategyRegistry::builtin().get(name)
}
