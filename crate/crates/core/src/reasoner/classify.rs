use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::config::SearchConfig;
use super::path::ReasoningPath;
use super::search::enumerate_scored;
use super::ReasonError;
use crate::bins::BinRegistry;
use crate::kg::{ConceptId, KnowledgeGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Matched,
    Unmatched,
    UnknownObject,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Matched => "matched",
            Reason::Unmatched => "unmatched",
            Reason::UnknownObject => "unknown_object",
        }
    }
}

/// Best path found for one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScore {
    pub bin_id: String,
    pub context: ConceptId,
    pub path: Option<ReasoningPath>,
    pub score: Option<f64>,
}

impl BinScore {
    /// Bins with a path first; then score descending, fewer hops, bin id.
    pub fn ranking_order(a: &BinScore, b: &BinScore) -> Ordering {
        match (&a.path, &b.path) {
            (Some(pa), Some(pb)) => {
                let (sa, sb) = (a.score.unwrap_or(0.0), b.score.unwrap_or(0.0));
                sb.total_cmp(&sa)
                    .then(pa.degree_of_separation().cmp(&pb.degree_of_separation()))
                    .then_with(|| a.bin_id.cmp(&b.bin_id))
            }
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => a.bin_id.cmp(&b.bin_id),
        }
    }
}

/// Outcome of classifying one object against a set of bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub object: ConceptId,
    pub chosen_bin: Option<String>,
    pub winning_path: Option<ReasoningPath>,
    pub score: Option<f64>,
    /// Every considered bin, in ranking order.
    pub per_bin_ranking: Vec<BinScore>,
    pub reason: Reason,
}

impl Decision {
    /// Takes the head of an already-ranked list as the choice.
    pub fn from_ranking(object: ConceptId, ranking: Vec<BinScore>, known: bool) -> Decision {
        let head = ranking.first().filter(|b| b.path.is_some()).cloned();
        let reason = match (&head, known) {
            (_, false) => Reason::UnknownObject,
            (Some(_), true) => Reason::Matched,
            (None, true) => Reason::Unmatched,
        };
        Decision {
            object,
            chosen_bin: head.as_ref().map(|b| b.bin_id.clone()),
            winning_path: head.as_ref().and_then(|b| b.path.clone()),
            score: head.and_then(|b| b.score),
            per_bin_ranking: ranking,
            reason,
        }
    }

    pub fn explanation(&self) -> Option<String> {
        self.winning_path.as_ref().map(ReasoningPath::render)
    }
}

/// Picks the bin whose context reaches `object` by the best-scoring path.
pub fn classify(
    g: &KnowledgeGraph,
    object: &ConceptId,
    bins: &BinRegistry,
    cfg: &SearchConfig,
) -> Result<Decision, ReasonError> {
    if bins.is_empty() {
        return Err(ReasonError::EmptyBinRegistry);
    }
    let known = g.contains(object);
    let mut ranking: Vec<BinScore> = bins
        .iter()
        .map(|bin| {
            let best = if known {
                enumerate_scored(g, &bin.context, object, cfg).into_iter().next()
            } else {
                None
            };
            BinScore {
                bin_id: bin.id.clone(),
                context: bin.context.clone(),
                score: best.as_ref().map(|b| b.score),
                path: best.map(|b| b.path),
            }
        })
        .collect();
    ranking.sort_by(BinScore::ranking_order);
    Ok(Decision::from_ranking(object.clone(), ranking, known))
}

/// [`classify`] restricted to the bins named in `focus`.
pub fn classify_focused<S: AsRef<str>>(
    g: &KnowledgeGraph,
    object: &ConceptId,
    bins: &BinRegistry,
    focus: &[S],
    cfg: &SearchConfig,
) -> Result<Decision, ReasonError> {
    if focus.is_empty() {
        return Err(ReasonError::EmptyFocus);
    }
    let restricted = bins.restrict(focus).map_err(ReasonError::FocusNotSubset)?;
    classify(g, object, &restricted, cfg)
}
