use std::io::Read;
use std::time::Duration;

use super::ClientError;

/// Raw HTTP result; non-2xx statuses are returned, not raised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
    /// `Retry-After` in seconds, when present and numeric.
    pub retry_after: Option<u64>,
    pub etag: Option<String>,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        HttpResponse {
            status: 200,
            body: body.into(),
            retry_after: None,
            etag: None,
        }
    }
}

/// Performs GET requests. Injectable so tests never touch the network.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, ClientError>;
}

/// Refuses every request.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineTransport;

impl Transport for OfflineTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, ClientError> {
        Err(ClientError::NetworkDisabled(url.to_string()))
    }
}

/// Blocking HTTP via `ureq`.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent(concat!("organize/", env!("CARGO_PKG_VERSION")))
            .build();
        UreqTransport {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, ClientError> {
        let mut resp = self
            .agent
            .get(url)
            .call()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let header = |name: &str| {
            resp.headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        };
        let retry_after = header("retry-after").and_then(|v| v.trim().parse().ok());
        let etag = header("etag");
        let status = resp.status().as_u16();
        let mut body = String::new();
        resp.body_mut()
            .as_reader()
            .read_to_string(&mut body)
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpResponse {
            status,
            body,
            retry_after,
            etag,
        })
    }
}
