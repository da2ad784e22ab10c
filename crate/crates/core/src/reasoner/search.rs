use std::cmp::Ordering;

use super::config::SearchConfig;
use super::path::{Hop, ReasoningPath};
use crate::kg::{ConceptId, Direction, EdgeId, KnowledgeGraph, NodeId, RelationMask, Traversal};

/// A found path with its score, ready for ranking.
#[derive(Debug, Clone)]
pub struct ScoredPath {
    pub path: ReasoningPath,
    pub score: f64,
    pub rendered: String,
}

/// Ranking order: score descending, fewer hops, then rendered text.
pub fn rank_order(a: &ScoredPath, b: &ScoredPath) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.path.degree_of_separation().cmp(&b.path.degree_of_separation()))
        .then_with(|| a.rendered.cmp(&b.rendered))
}

/// All simple paths from `context` to `object` of at most `cfg.max_depth`
/// hops, best first.
pub fn enumerate_paths(
    g: &KnowledgeGraph,
    context: &ConceptId,
    object: &ConceptId,
    cfg: &SearchConfig,
) -> Vec<ReasoningPath> {
    enumerate_scored(g, context, object, cfg)
        .into_iter()
        .map(|s| s.path)
        .collect()
}

pub fn enumerate_scored(
    g: &KnowledgeGraph,
    context: &ConceptId,
    object: &ConceptId,
    cfg: &SearchConfig,
) -> Vec<ScoredPath> {
    let (Some(src), Some(dst)) = (g.node_id(context), g.node_id(object)) else {
        return Vec::new();
    };
    if src == dst || cfg.max_depth == 0 {
        return Vec::new();
    }
    let mut search = Search {
        g,
        dst,
        max_depth: cfg.max_depth,
        beam: cfg.beam_width.limit(),
        first_mask: g.relation_mask(&cfg.first_hop_relations),
        rest_mask: g.relation_mask(&cfg.relations),
        on_path: vec![src],
        steps: Vec::with_capacity(cfg.max_depth),
        found: Vec::new(),
    };
    search.expand(src);

    let mut scored: Vec<ScoredPath> = search
        .found
        .into_iter()
        .map(|steps| {
            let path = build_path(g, src, &steps);
            let score = cfg.strategy.score(&path.weights());
            let rendered = path.render();
            ScoredPath {
                path,
                score,
                rendered,
            }
        })
        .collect();
    scored.sort_by(rank_order);
    scored
}

struct Search<'g> {
    g: &'g KnowledgeGraph,
    dst: NodeId,
    max_depth: usize,
    beam: usize,
    first_mask: RelationMask,
    rest_mask: RelationMask,
    on_path: Vec<NodeId>,
    steps: Vec<(EdgeId, Traversal)>,
    found: Vec<Vec<(EdgeId, Traversal)>>,
}

impl Search<'_> {
    fn expand(&mut self, node: NodeId) {
        let depth = self.steps.len();
        let g = self.g;
        let mask = if depth == 0 {
            &self.first_mask
        } else {
            &self.rest_mask
        };
        let candidates: Vec<(EdgeId, Traversal, NodeId)> = g
            .adjacent(node, Direction::Both)
            .filter_map(|(eid, trav)| {
                let rec = g.record(eid);
                if !mask.admits(rec.rel) {
                    return None;
                }
                let other = NodeId(match trav {
                    Traversal::WithEdge => rec.end,
                    Traversal::AgainstEdge => rec.start,
                });
                (!self.on_path.contains(&other)).then_some((eid, trav, other))
            })
            .take(self.beam)
            .collect();

        for (eid, trav, other) in candidates {
            self.steps.push((eid, trav));
            if other == self.dst {
                self.found.push(self.steps.clone());
            } else if depth + 1 < self.max_depth {
                self.on_path.push(other);
                self.expand(other);
                self.on_path.pop();
            }
            self.steps.pop();
        }
    }
}

fn build_path(g: &KnowledgeGraph, src: NodeId, steps: &[(EdgeId, Traversal)]) -> ReasoningPath {
    let mut from = g.concept(src).clone();
    let mut hops = Vec::with_capacity(steps.len());
    for &(eid, trav) in steps {
        let e = g.edge(eid);
        let to = match trav {
            Traversal::WithEdge => e.end.clone(),
            Traversal::AgainstEdge => e.start.clone(),
        };
        hops.push(Hop {
            from: std::mem::replace(&mut from, to.clone()),
            to,
            relation: e.relation.clone(),
            weight: e.weight,
            direction: trav,
        });
    }
    ReasoningPath::new(hops).expect("search only yields simple chained paths")
}
