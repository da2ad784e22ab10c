//! Shared fixtures, a seeded random-graph generator, and a brute-force
//! path enumerator that works on the raw edge list rather than the graph's
//! adjacency structures.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use csk_core::kg::{load_dump, ConceptId, Edge, KnowledgeGraph, Relation, RelationFilter};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> KnowledgeGraph {
    load_dump(&fixture(name), &RelationFilter::All).expect("fixture loads")
}

pub fn cid(s: &str) -> ConceptId {
    ConceptId::new(s).unwrap()
}

pub fn strings(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub const RELATIONS: [Relation; 5] = [
    Relation::AtLocation,
    Relation::RelatedTo,
    Relation::UsedFor,
    Relation::IsA,
    Relation::PartOf,
];

/// Random graph over `n0..n{nodes-1}` with distinct (start, relation, end)
/// triples. Weights are drawn from a small grid so score ties are common.
pub fn random_edges(rng: &mut ChaCha8Rng, nodes: usize, edges: usize) -> Vec<Edge> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < edges && attempts < edges * 20 {
        attempts += 1;
        let s = rng.gen_range(0..nodes);
        let t = rng.gen_range(0..nodes);
        if s == t {
            continue;
        }
        let r = rng.gen_range(0..RELATIONS.len());
        if !seen.insert((s, r, t)) {
            continue;
        }
        let weight = rng.gen_range(1..=20) as f64 * 0.5;
        out.push(
            Edge::new(&format!("n{s}"), RELATIONS[r].clone(), &format!("n{t}"), weight).unwrap(),
        );
    }
    out
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).unwrap()
}

/// A path found by the brute-force enumerator.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub rendered: String,
    pub weights: Vec<f64>,
}

impl OraclePath {
    pub fn hops(&self) -> usize {
        self.weights.len()
    }
}

/// Every simple path from `context` to `object` with at most `max_depth`
/// hops; the first hop must use a relation in `first`, later hops any
/// relation in `rest`. Edges may be walked either way.
pub fn oracle_paths(
    edges: &[Edge],
    context: &str,
    object: &str,
    max_depth: usize,
    first: &[Relation],
    rest: Option<&[Relation]>,
) -> Vec<OraclePath> {
    let mut out = Vec::new();
    if context == object {
        return out;
    }
    let mut visited = vec![context.to_string()];
    let mut text = context.to_string();
    let mut weights = Vec::new();
    walk(
        edges, object, max_depth, first, rest, &mut visited, &mut text, &mut weights, &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    edges: &[Edge],
    object: &str,
    max_depth: usize,
    first: &[Relation],
    rest: Option<&[Relation]>,
    visited: &mut Vec<String>,
    text: &mut String,
    weights: &mut Vec<f64>,
    out: &mut Vec<OraclePath>,
) {
    if weights.len() == max_depth {
        return;
    }
    let here = visited.last().unwrap().clone();
    for e in edges {
        let allowed = if weights.is_empty() {
            first.contains(&e.relation)
        } else {
            rest.is_none_or(|r| r.contains(&e.relation))
        };
        if !allowed {
            continue;
        }
        let mut moves = Vec::new();
        if e.start.as_str() == here {
            moves.push((e.end.as_str(), format!(" -({})-> ", e.relation.name())));
        }
        if e.end.as_str() == here {
            moves.push((e.start.as_str(), format!(" <-({})- ", e.relation.name())));
        }
        for (next, arrow) in moves {
            if visited.iter().any(|v| v == next) {
                continue;
            }
            let len = text.len();
            text.push_str(&arrow);
            text.push_str(next);
            weights.push(e.weight);
            if next == object {
                out.push(OraclePath {
                    rendered: text.clone(),
                    weights: weights.clone(),
                });
            } else {
                visited.push(next.to_string());
                walk(edges, object, max_depth, first, rest, visited, text, weights, out);
                visited.pop();
            }
            weights.pop();
            text.truncate(len);
        }
    }
}

pub fn first_edge(w: &[f64]) -> f64 {
    w[0]
}

pub fn average(w: &[f64]) -> f64 {
    w.iter().sum::<f64>() / w.len() as f64
}

/// Best path by (score desc, hops asc, rendered asc).
pub fn oracle_best(paths: &[OraclePath], score: fn(&[f64]) -> f64) -> Option<(f64, &OraclePath)> {
    paths
        .iter()
        .map(|p| (score(&p.weights), p))
        .min_by(|(sa, a), (sb, b)| {
            sb.total_cmp(sa)
                .then(a.hops().cmp(&b.hops()))
                .then(a.rendered.cmp(&b.rendered))
        })
}

/// `frames` frames with `per_frame` detections each, labels drawn from
/// `labels`, every confidence at or above 0.5.
pub fn synthetic_stream(seed: u64, frames: u64, per_frame: usize, labels: &[&str]) -> String {
    let mut rng = seeded(seed);
    let mut out = String::new();
    for frame in 0..frames {
        for _ in 0..per_frame {
            let label = pick(&mut rng, labels);
            let conf = rng.gen_range(50..=99) as f64 / 100.0;
            let (x, y) = (rng.gen_range(0..600), rng.gen_range(0..400));
            let (w, h) = (rng.gen_range(1..100), rng.gen_range(1..100));
            out.push_str(&format!(
                "{{\"frame\": {frame}, \"label\": \"{label}\", \"confidence\": {conf}, \"bbox\": [{x}, {y}, {w}, {h}]}}\n"
            ));
        }
    }
    out
}

/// Log lines with the timestamp member removed.
pub fn without_timestamps(log: &str) -> Vec<String> {
    log.lines()
        .map(|l| {
            let cut = l.rfind(",\"timestamp\":").expect("timestamp is the last member");
            l[..cut].to_string()
        })
        .collect()
}

pub const PEAR_LABELS: [&str; 8] = [
    "pear", "Apple", "scissors", "food", "fruit", "Table", "tree", "spaceship",
];
