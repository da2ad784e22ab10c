//! Explanation paths and their canonical text form.
//!
//! A path is written starting at the context concept. Each hop is joined by
//! ` -(Relation)-> ` when walked along the edge (start to end) and by
//! ` <-(Relation)- ` when walked against it:
//!
//! ```text
//! kitchen <-(AtLocation)- food <-(RelatedTo)- apple -(RelatedTo)-> pear
//! ```
//!
//! Concept labels never contain spaces, so the form parses back unambiguously.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{normalize_label, ConceptId, KnowledgeGraph, Relation, Traversal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path has no hops")]
    Empty,
    #[error("hop {index} starts at `{found}` but the previous hop ended at `{expected}`")]
    BrokenChain {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("concept `{0}` appears twice")]
    RepeatedConcept(String),
    #[error("cannot parse explanation at token {token}: {reason}")]
    Parse { token: usize, reason: String },
    #[error("no `{relation}` edge from `{start}` to `{end}` in the graph")]
    MissingEdge {
        start: String,
        relation: String,
        end: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub from: ConceptId,
    pub to: ConceptId,
    pub relation: Relation,
    pub weight: f64,
    pub direction: Traversal,
}

impl Hop {
    /// Endpoints of the underlying edge as (start, end).
    pub fn edge_endpoints(&self) -> (&ConceptId, &ConceptId) {
        match self.direction {
            Traversal::WithEdge => (&self.from, &self.to),
            Traversal::AgainstEdge => (&self.to, &self.from),
        }
    }
}

/// Chain of hops from a context concept to an object concept. Always
/// non-empty, chained, and simple (no concept repeats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Hop>", into = "Vec<Hop>")]
pub struct ReasoningPath {
    hops: Vec<Hop>,
}

impl ReasoningPath {
    pub fn new(hops: Vec<Hop>) -> Result<Self, PathError> {
        check_chain(hops.iter().map(|h| (&h.from, &h.to)))?;
        Ok(ReasoningPath { hops })
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    /// Number of edges on the path.
    pub fn degree_of_separation(&self) -> usize {
        self.hops.len()
    }

    pub fn context(&self) -> &ConceptId {
        &self.hops[0].from
    }

    pub fn object(&self) -> &ConceptId {
        &self.hops[self.hops.len() - 1].to
    }

    pub fn weights(&self) -> Vec<f64> {
        self.hops.iter().map(|h| h.weight).collect()
    }

    pub fn shape(&self) -> PathShape {
        PathShape {
            start: self.context().clone(),
            steps: self
                .hops
                .iter()
                .map(|h| Step {
                    relation: h.relation.clone(),
                    direction: h.direction,
                    to: h.to.clone(),
                })
                .collect(),
        }
    }

    pub fn render(&self) -> String {
        self.shape().to_string()
    }

    /// True when every hop matches an edge of `g` with the stated orientation
    /// and weight.
    pub fn is_valid_in(&self, g: &KnowledgeGraph) -> bool {
        self.hops.iter().all(|h| {
            let (s, t) = h.edge_endpoints();
            g.find_edge(s, &h.relation, t)
                .is_some_and(|e| e.weight == h.weight)
        })
    }
}

impl TryFrom<Vec<Hop>> for ReasoningPath {
    type Error = PathError;

    fn try_from(hops: Vec<Hop>) -> Result<Self, Self::Error> {
        ReasoningPath::new(hops)
    }
}

impl From<ReasoningPath> for Vec<Hop> {
    fn from(p: ReasoningPath) -> Self {
        p.hops
    }
}

impl fmt::Display for ReasoningPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.shape().fmt(f)
    }
}

pub fn render_path(p: &ReasoningPath) -> String {
    p.render()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub relation: Relation,
    pub direction: Traversal,
    pub to: ConceptId,
}

/// A path without weights: what the text form carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathShape {
    pub start: ConceptId,
    pub steps: Vec<Step>,
}

impl PathShape {
    /// Looks up every hop's edge in `g` to recover weights.
    pub fn resolve(&self, g: &KnowledgeGraph) -> Result<ReasoningPath, PathError> {
        let mut hops = Vec::with_capacity(self.steps.len());
        let mut from = &self.start;
        for step in &self.steps {
            let (s, t) = match step.direction {
                Traversal::WithEdge => (from, &step.to),
                Traversal::AgainstEdge => (&step.to, from),
            };
            let edge = g
                .find_edge(s, &step.relation, t)
                .ok_or_else(|| PathError::MissingEdge {
                    start: s.to_string(),
                    relation: step.relation.to_string(),
                    end: t.to_string(),
                })?;
            hops.push(Hop {
                from: from.clone(),
                to: step.to.clone(),
                relation: step.relation.clone(),
                weight: edge.weight,
                direction: step.direction,
            });
            from = &step.to;
        }
        ReasoningPath::new(hops)
    }
}

impl fmt::Display for PathShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.start.as_str())?;
        for step in &self.steps {
            match step.direction {
                Traversal::WithEdge => write!(f, " -({})-> ", step.relation)?,
                Traversal::AgainstEdge => write!(f, " <-({})- ", step.relation)?,
            }
            f.write_str(step.to.as_str())?;
        }
        Ok(())
    }
}

/// Parses the canonical text form back into a [`PathShape`].
pub fn parse_path(text: &str) -> Result<PathShape, PathError> {
    let tokens: Vec<&str> = text.split(' ').collect();
    if tokens.len() < 3 || tokens.len() % 2 == 0 {
        return Err(PathError::Parse {
            token: tokens.len(),
            reason: "expected `concept arrow concept [arrow concept ...]`".into(),
        });
    }
    let concept = |i: usize| -> Result<ConceptId, PathError> {
        let tok = tokens[i];
        match normalize_label(tok) {
            Ok(c) if c.as_str() == tok => Ok(c),
            _ => Err(PathError::Parse {
                token: i,
                reason: format!("`{tok}` is not a canonical concept label"),
            }),
        }
    };

    let start = concept(0)?;
    let mut steps = Vec::with_capacity(tokens.len() / 2);
    for i in (1..tokens.len()).step_by(2) {
        let (relation, direction) = parse_arrow(tokens[i]).ok_or_else(|| PathError::Parse {
            token: i,
            reason: format!("`{}` is not an arrow", tokens[i]),
        })?;
        steps.push(Step {
            relation,
            direction,
            to: concept(i + 1)?,
        });
    }
    let mut prev = &start;
    check_chain(steps.iter().map(|s| {
        let pair = (prev, &s.to);
        prev = &s.to;
        pair
    }))?;
    Ok(PathShape { start, steps })
}

fn parse_arrow(tok: &str) -> Option<(Relation, Traversal)> {
    let (name, dir) = if let Some(inner) = tok.strip_prefix("<-(").and_then(|t| t.strip_suffix(")-")) {
        (inner, Traversal::AgainstEdge)
    } else if let Some(inner) = tok.strip_prefix("-(").and_then(|t| t.strip_suffix(")->")) {
        (inner, Traversal::WithEdge)
    } else {
        return None;
    };
    if name.is_empty() {
        return None;
    }
    Some((Relation::from_name(name), dir))
}

fn check_chain<'a, I>(pairs: I) -> Result<(), PathError>
where
    I: Iterator<Item = (&'a ConceptId, &'a ConceptId)>,
{
    let mut seen: Vec<&ConceptId> = Vec::new();
    let mut last: Option<&ConceptId> = None;
    for (index, (from, to)) in pairs.enumerate() {
        match last {
            None => seen.push(from),
            Some(prev) if prev != from => {
                return Err(PathError::BrokenChain {
                    index,
                    expected: prev.to_string(),
                    found: from.to_string(),
                })
            }
            Some(_) => {}
        }
        if seen.contains(&to) {
            return Err(PathError::RepeatedConcept(to.to_string()));
        }
        seen.push(to);
        last = Some(to);
    }
    if last.is_none() {
        return Err(PathError::Empty);
    }
    Ok(())
}
