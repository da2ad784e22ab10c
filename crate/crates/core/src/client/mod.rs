//! Optional online fetcher for the ConceptNet HTTP API. Every response is
//! written to an on-disk cache keyed by a query fingerprint; once cached, a
//! query is never sent again unless refresh is requested.

mod cache;
mod crawl;
mod response;
mod transport;

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kg::{ConceptId, Direction, KgError, Relation};

pub use cache::{Cache, CacheEntry};
pub use crawl::{ClientConfig, ConceptNetClient, CrawlOptions, Neighborhood, Subgraph};
pub use response::{parse_page, Page};
pub use transport::{HttpResponse, OfflineTransport, Transport, UreqTransport};

/// Default per-concept edge cap.
pub const DEFAULT_EDGE_CAP: usize = 500;
/// Edges requested per page.
pub const PAGE_SIZE: usize = 100;
pub const DEFAULT_API_BASE: &str = "https://api.conceptnet.io";
pub const API_BASE_ENV: &str = "CSK_API_BASE";
pub const CACHE_DIR_ENV: &str = "CSK_CACHE_DIR";
/// Largest crawl radius accepted by [`ConceptNetClient::build_subgraph`].
pub const MAX_RADIUS: usize = 3;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("HTTP status {status} from {url}")]
    Http { status: u16, url: String },
    #[error("rate limited by the API{}", retry_after.map(|s| format!(", retry after {s}s")).unwrap_or_default())]
    RateLimited { retry_after: Option<u64> },
    #[error("malformed API response: {0}")]
    Parse(String),
    #[error("network access is disabled and `{0}` is not cached")]
    NetworkDisabled(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("cache entry {path} is unreadable: {reason}")]
    CorruptCache { path: String, reason: String },
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One neighborhood request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiQuery {
    pub concept: ConceptId,
    pub direction: Direction,
    pub relation: Option<Relation>,
    /// Maximum edges collected across all pages.
    pub limit: usize,
}

impl ApiQuery {
    /// Both directions, all relations, the default cap.
    pub fn new(concept: ConceptId) -> Self {
        ApiQuery {
            concept,
            direction: Direction::Both,
            relation: None,
            limit: DEFAULT_EDGE_CAP,
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_relation(mut self, relation: Relation) -> Self {
        self.relation = Some(relation);
        self
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    /// Checks `1 <= limit <= cap`.
    pub fn validate(&self, cap: usize) -> Result<(), ClientError> {
        if self.limit == 0 || self.limit > cap {
            return Err(ClientError::InvalidQuery(format!(
                "limit {} outside 1..={cap}",
                self.limit
            )));
        }
        Ok(())
    }

    fn canonical(&self) -> String {
        let dir = match self.direction {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
            Direction::Both => "both",
        };
        let rel = self.relation.as_ref().map(Relation::name).unwrap_or("*");
        format!("v1|{}|{dir}|{rel}|{}", self.concept, self.limit)
    }

    /// Hex SHA-256 of the normalized query fields.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

impl fmt::Display for ApiQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_depends_only_on_normalized_fields() {
        let a = ApiQuery::new(ConceptId::new("Dining Room").unwrap());
        let b = ApiQuery::new(ConceptId::new("/c/en/dining_room/n").unwrap());
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), a.clone().with_limit(10).fingerprint());
        assert_ne!(
            a.fingerprint(),
            a.clone().with_direction(Direction::Forward).fingerprint()
        );
        assert_ne!(
            a.fingerprint(),
            a.clone().with_relation(Relation::AtLocation).fingerprint()
        );
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn limit_is_capped() {
        let q = ApiQuery::new(ConceptId::new("pear").unwrap());
        assert!(q.validate(DEFAULT_EDGE_CAP).is_ok());
        assert!(q.clone().with_limit(501).validate(DEFAULT_EDGE_CAP).is_err());
        assert!(q.with_limit(0).validate(DEFAULT_EDGE_CAP).is_err());
    }
}
