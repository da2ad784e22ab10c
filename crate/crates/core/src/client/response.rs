use serde::Deserialize;

use super::ClientError;
use crate::kg::{classify_assertion, Edge, RelationFilter, RowOutcome};

#[derive(Deserialize)]
struct Node {
    #[serde(rename = "@id")]
    id: String,
}

#[derive(Deserialize)]
struct RawEdge {
    rel: Node,
    start: Node,
    end: Node,
    weight: f64,
}

#[derive(Deserialize)]
struct View {
    #[serde(rename = "nextPage")]
    next_page: Option<String>,
}

#[derive(Deserialize)]
struct Body {
    edges: Vec<RawEdge>,
    view: Option<View>,
}

/// Edges from one API response page, after the loader's acceptance rules.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Page {
    pub edges: Vec<Edge>,
    pub non_english: u64,
    /// Edges dropped for a non-positive weight or an unusable relation.
    pub dropped: u64,
    pub next_page: Option<String>,
}

/// Parses an API JSON body (`edges` with `rel`, `start`, `end`, `weight`).
pub fn parse_page(body: &str) -> Result<Page, ClientError> {
    let body: Body = serde_json::from_str(body).map_err(|e| ClientError::Parse(e.to_string()))?;
    let mut page = Page {
        next_page: body.view.and_then(|v| v.next_page),
        ..Page::default()
    };
    for e in body.edges {
        match classify_assertion(&e.rel.id, &e.start.id, &e.end.id, &RelationFilter::All, || {
            Ok(e.weight)
        }) {
            RowOutcome::Accepted(edge) => page.edges.push(edge),
            RowOutcome::NonEnglish => page.non_english += 1,
            _ => page.dropped += 1,
        }
    }
    Ok(page)
}
