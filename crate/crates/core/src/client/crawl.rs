use std::collections::BTreeSet;
use std::env;
use std::path::PathBuf;
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use sha2::{Digest, Sha256};

use super::cache::{Cache, CacheEntry};
use super::response::parse_page;
use super::transport::Transport;
use super::{
    ApiQuery, ClientError, API_BASE_ENV, CACHE_DIR_ENV, DEFAULT_API_BASE, DEFAULT_EDGE_CAP,
    MAX_RADIUS, PAGE_SIZE,
};
use crate::kg::{ConceptId, Direction, Edge, GraphBuilder, KnowledgeGraph, LoadStats};

/// Characters left unescaped in a query-string value.
const QUERY_VALUE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'/')
    .remove(b'_')
    .remove(b'-')
    .remove(b'.');

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientConfig {
    pub api_base: String,
    pub cache_dir: PathBuf,
    /// Uncached queries fail with `NetworkDisabled` when false.
    pub network: bool,
    /// Ignore cached entries and overwrite them.
    pub refresh: bool,
    pub edge_cap: usize,
    /// Concurrent fetches per crawl level.
    pub max_connections: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            api_base: DEFAULT_API_BASE.to_string(),
            cache_dir: PathBuf::from("csk-cache"),
            network: false,
            refresh: false,
            edge_cap: DEFAULT_EDGE_CAP,
            max_connections: 4,
        }
    }
}

impl ClientConfig {
    /// Defaults overridden by `CSK_API_BASE` and `CSK_CACHE_DIR`.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(base) = env::var(API_BASE_ENV).ok().filter(|s| !s.trim().is_empty()) {
            cfg.api_base = base.trim().to_string();
        }
        if let Some(dir) = env::var_os(CACHE_DIR_ENV).filter(|s| !s.is_empty()) {
            cfg.cache_dir = PathBuf::from(dir);
        }
        cfg
    }
}

/// Result of one neighborhood fetch.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub edges: Vec<Edge>,
    pub non_english: u64,
    pub fetched_at: u64,
    pub fingerprint: String,
    pub from_cache: bool,
}

impl From<CacheEntry> for Neighborhood {
    fn from(e: CacheEntry) -> Self {
        Neighborhood {
            edges: e.edges,
            non_english: e.non_english,
            fetched_at: e.fetched_at,
            fingerprint: e.fingerprint,
            from_cache: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrawlOptions {
    /// Record failed fetches and keep crawling instead of aborting.
    pub continue_on_error: bool,
}

impl Default for CrawlOptions {
    fn default() -> Self {
        CrawlOptions {
            continue_on_error: true,
        }
    }
}

#[derive(Debug)]
pub struct Subgraph {
    pub graph: KnowledgeGraph,
    /// Concepts whose neighborhood came back empty.
    pub misses: Vec<ConceptId>,
    /// Concepts whose fetch failed, with the error text.
    pub errors: Vec<(ConceptId, String)>,
    /// Concepts fetched, in crawl order.
    pub fetched: Vec<ConceptId>,
}

pub struct ConceptNetClient {
    cfg: ClientConfig,
    cache: Cache,
    transport: Box<dyn Transport>,
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl ConceptNetClient {
    pub fn new(cfg: ClientConfig, transport: Box<dyn Transport>) -> Self {
        ConceptNetClient {
            cache: Cache::new(cfg.cache_dir.clone()),
            cfg,
            transport,
        }
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    fn base(&self) -> &str {
        self.cfg.api_base.trim_end_matches('/')
    }

    /// URL of the first page for `q`.
    pub fn query_url(&self, q: &ApiQuery) -> String {
        let key = match q.direction {
            Direction::Forward => "start",
            Direction::Reverse => "end",
            Direction::Both => "node",
        };
        let enc = |s: &str| utf8_percent_encode(s, QUERY_VALUE).to_string();
        let mut url = format!(
            "{}/query?{key}={}",
            self.base(),
            enc(&format!("/c/en/{}", q.concept))
        );
        if let Some(rel) = &q.relation {
            url.push_str(&format!("&rel={}", enc(&format!("/r/{}", rel.name()))));
        }
        url.push_str(&format!("&limit={}", q.limit.min(PAGE_SIZE)));
        url
    }

    /// Serves `q` from the cache, or fetches every page up to `q.limit`
    /// edges and caches the result before returning it.
    pub fn fetch_neighborhood(&self, q: &ApiQuery) -> Result<Neighborhood, ClientError> {
        q.validate(self.cfg.edge_cap)?;
        let fingerprint = q.fingerprint();
        if !self.cfg.refresh {
            if let Some(entry) = self.cache.load(&fingerprint)? {
                return Ok(entry.into());
            }
        }
        if !self.cfg.network {
            return Err(ClientError::NetworkDisabled(q.to_string()));
        }

        let mut edges = Vec::new();
        let mut non_english = 0;
        let mut etag = None;
        let mut url = Some(self.query_url(q));
        while let Some(u) = url.take() {
            let resp = self.transport.get(&u)?;
            match resp.status {
                200..=299 => {}
                429 => {
                    return Err(ClientError::RateLimited {
                        retry_after: resp.retry_after,
                    })
                }
                status => return Err(ClientError::Http { status, url: u }),
            }
            let page = parse_page(&resp.body)?;
            etag = etag.or(resp.etag);
            non_english += page.non_english;
            edges.extend(page.edges);
            if edges.len() < q.limit {
                url = page.next_page.map(|next| {
                    if next.starts_with("http://") || next.starts_with("https://") {
                        next
                    } else {
                        format!("{}{}", self.base(), next)
                    }
                });
            }
        }
        edges.truncate(q.limit);

        let entry = CacheEntry {
            fingerprint,
            query: q.to_string(),
            edges,
            non_english,
            fetched_at: now_secs(),
            etag,
        };
        self.cache.store(&entry)?;
        let mut n = Neighborhood::from(entry);
        n.from_cache = false;
        Ok(n)
    }

    fn fetch_level(&self, frontier: &[ConceptId]) -> Vec<Result<Neighborhood, ClientError>> {
        let query = |c: &ConceptId| ApiQuery::new(c.clone()).with_limit(self.cfg.edge_cap);
        let width = self.cfg.max_connections.max(1);
        if width == 1 {
            return frontier.iter().map(|c| self.fetch_neighborhood(&query(c))).collect();
        }
        let mut out = Vec::with_capacity(frontier.len());
        for chunk in frontier.chunks(width) {
            thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|c| {
                        let q = query(c);
                        s.spawn(move || self.fetch_neighborhood(&q))
                    })
                    .collect();
                for h in handles {
                    out.push(h.join().unwrap_or_else(|_| {
                        Err(ClientError::Transport("fetch thread panicked".into()))
                    }));
                }
            });
        }
        out
    }

    /// Breadth-first crawl: fetches the neighborhood of every concept
    /// within `radius - 1` hops of a seed. Levels are processed in sorted
    /// concept order, so the result depends only on the cache contents.
    pub fn build_subgraph(
        &self,
        seeds: &[ConceptId],
        radius: usize,
        opts: CrawlOptions,
    ) -> Result<Subgraph, ClientError> {
        if seeds.is_empty() {
            return Err(ClientError::InvalidQuery("no seed concepts".into()));
        }
        if radius > MAX_RADIUS {
            return Err(ClientError::InvalidQuery(format!(
                "radius {radius} exceeds {MAX_RADIUS}"
            )));
        }
        let mut builder = GraphBuilder::new();
        let mut visited: BTreeSet<ConceptId> = seeds.iter().cloned().collect();
        for s in &visited {
            builder.add_node(s.clone());
        }
        let mut frontier: Vec<ConceptId> = visited.iter().cloned().collect();
        let mut stats = LoadStats::default();
        let mut fingerprints = Vec::new();
        let mut built_at = 0;
        let mut sub = Subgraph {
            graph: KnowledgeGraph::from_edges(Vec::new()),
            misses: Vec::new(),
            errors: Vec::new(),
            fetched: Vec::new(),
        };

        for _ in 0..radius {
            let mut next = BTreeSet::new();
            for (concept, result) in frontier.iter().zip(self.fetch_level(&frontier)) {
                let n = match result {
                    Ok(n) => n,
                    Err(e) if opts.continue_on_error => {
                        sub.errors.push((concept.clone(), e.to_string()));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                sub.fetched.push(concept.clone());
                fingerprints.push(n.fingerprint.clone());
                built_at = built_at.max(n.fetched_at);
                if n.edges.is_empty() {
                    sub.misses.push(concept.clone());
                }
                stats.rows += n.edges.len() as u64 + n.non_english;
                stats.non_english += n.non_english;
                for e in n.edges {
                    for end in [&e.start, &e.end] {
                        if !visited.contains(end) {
                            next.insert(end.clone());
                        }
                    }
                    stats.accepted += 1;
                    builder.add_edge(e);
                }
            }
            visited.extend(next.iter().cloned());
            frontier = next.into_iter().collect();
            if frontier.is_empty() {
                break;
            }
        }

        fingerprints.sort();
        let mut h = Sha256::new();
        for f in &fingerprints {
            h.update(f.as_bytes());
            h.update(b"\n");
        }
        sub.graph = builder.build(hex::encode(h.finalize()), built_at, stats, Vec::new());
        Ok(sub)
    }
}
