//! Paginated client for archive endpoints in the Pushshift style.
//!
//! Requests are `GET <endpoint>?subreddit=..&after=..&before=..&size=..`
//! and responses are `{"data": [post, ...]}`. Pagination is keyed on
//! `created_utc`: each page asks for posts created after the newest
//! timestamp seen so far, minus one second so that posts sharing the
//! boundary second are not lost. Ids already emitted at the boundary
//! second are remembered and dropped from the next page.

use std::collections::{HashSet, VecDeque};
use std::io::Read;
use std::time::{Duration, Instant};

use serde_json::Value;
use thiserror::Error;

use super::{post_from_value, RawPost, SchemaMapping};

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("page size must be at least 1")]
    InvalidPageSize,
    #[error("endpoint unreachable after {attempts} attempts: {last_error}")]
    EndpointUnreachable { attempts: u32, last_error: String },
    #[error("endpoint rejected request with HTTP {status}")]
    Rejected { status: u16 },
    #[error("response is not a JSON object with a \"data\" array: {0}")]
    NonJsonResponse(String),
}

/// What a transport returns for one GET.
#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal blocking GET abstraction so pagination can be tested offline.
pub trait Transport {
    /// Performs one GET. `Err` means the request never produced a response.
    fn get(&self, url: &str, query: &[(&str, String)]) -> Result<HttpResponse, String>;
}

/// Default transport backed by `ureq`.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout_read(Duration::from_secs(60))
            .user_agent(concat!("tldr-corpus/", env!("CARGO_PKG_VERSION")))
            .build();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, query: &[(&str, String)]) -> Result<HttpResponse, String> {
        let mut req = self.agent.get(url);
        for (k, v) in query {
            req = req.query(k, v);
        }
        let resp = match req.call() {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(e) => return Err(e.to_string()),
        };
        let status = resp.status();
        let mut body = String::new();
        resp.into_reader().read_to_string(&mut body).map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Half-open `[start, end)` range of `created_utc` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start: i64,
    pub end: i64,
}

impl TimeWindow {
    pub fn new(start: i64, end: i64) -> Self {
        Self { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Debug, Clone)]
pub struct ArchiveConfig {
    pub endpoint: String,
    /// Minimum spacing between consecutive requests.
    pub min_delay: Duration,
    /// Retries per page after the first attempt.
    pub max_retries: u32,
    /// First retry waits this long; each later retry doubles it.
    pub backoff: Duration,
    pub schema: SchemaMapping,
}

impl ArchiveConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            min_delay: Duration::from_secs(1),
            max_retries: 5,
            backoff: Duration::from_millis(500),
            schema: SchemaMapping::default(),
        }
    }
}

pub struct ArchiveClient<T = UreqTransport> {
    config: ArchiveConfig,
    transport: T,
}

impl ArchiveClient<UreqTransport> {
    pub fn new(config: ArchiveConfig) -> Self {
        Self { config, transport: UreqTransport::default() }
    }
}

impl<T: Transport> ArchiveClient<T> {
    pub fn with_transport(config: ArchiveConfig, transport: T) -> Self {
        Self { config, transport }
    }

    /// Streams every post of `subreddit` created inside `window`.
    pub fn fetch(
        &self,
        subreddit: &str,
        window: TimeWindow,
        page_size: usize,
    ) -> Result<ArchiveStream<'_, T>, ArchiveError> {
        if page_size == 0 {
            return Err(ArchiveError::InvalidPageSize);
        }
        Ok(ArchiveStream {
            client: self,
            subreddit: subreddit.to_string(),
            window,
            page_size,
            after: window.start - 1,
            boundary_ids: HashSet::new(),
            buffered: VecDeque::new(),
            done: window.is_empty(),
            last_request: None,
            requests: 0,
            records_skipped: 0,
        })
    }
}

pub struct ArchiveStream<'a, T> {
    client: &'a ArchiveClient<T>,
    subreddit: String,
    window: TimeWindow,
    page_size: usize,
    after: i64,
    boundary_ids: HashSet<String>,
    buffered: VecDeque<RawPost>,
    done: bool,
    last_request: Option<Instant>,
    requests: u32,
    records_skipped: u64,
}

impl<T: Transport> ArchiveStream<'_, T> {
    /// HTTP requests issued so far, retries included.
    pub fn requests(&self) -> u32 {
        self.requests
    }

    /// Page entries that failed post validation.
    pub fn records_skipped(&self) -> u64 {
        self.records_skipped
    }

    fn pace(&mut self) {
        if let Some(prev) = self.last_request {
            let next = prev + self.client.config.min_delay;
            if let Some(wait) = next.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        self.last_request = Some(Instant::now());
    }

    fn request_page(&mut self) -> Result<Vec<Value>, ArchiveError> {
        let cfg = &self.client.config;
        let query = [
            ("subreddit", self.subreddit.clone()),
            ("after", self.after.to_string()),
            ("before", self.window.end.to_string()),
            ("size", self.page_size.to_string()),
        ];
        let attempts = cfg.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(cfg.backoff.saturating_mul(1 << (attempt - 1).min(16)));
            }
            self.pace();
            self.requests += 1;
            match self.client.transport.get(&cfg.endpoint, &query) {
                Err(e) => last_error = e,
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last_error = format!("HTTP {}", resp.status);
                }
                Ok(resp) if !(200..300).contains(&resp.status) => {
                    return Err(ArchiveError::Rejected { status: resp.status });
                }
                Ok(resp) => return parse_page(&resp.body),
            }
        }
        Err(ArchiveError::EndpointUnreachable { attempts, last_error })
    }

    fn fill(&mut self) -> Result<(), ArchiveError> {
        let items = self.request_page()?;
        let full_page = items.len() >= self.page_size;

        let mut newest: Option<i64> = None;
        let mut fresh = 0usize;
        let mut page_posts = Vec::with_capacity(items.len());
        for item in &items {
            match post_from_value(item, &self.client.config.schema) {
                Ok(post) => page_posts.push(post),
                Err(_) => self.records_skipped += 1,
            }
        }
        for post in &page_posts {
            newest = Some(newest.map_or(post.created_utc, |n| n.max(post.created_utc)));
        }
        for post in page_posts {
            if !self.window.contains(post.created_utc) {
                continue;
            }
            if post.created_utc == self.after + 1 && self.boundary_ids.contains(&post.id) {
                continue;
            }
            fresh += 1;
            self.buffered.push_back(post);
        }

        match newest {
            Some(newest) if full_page => {
                if fresh == 0 {
                    // A full page of already-seen boundary posts: step past the second.
                    self.after = self.after.max(newest);
                    self.boundary_ids.clear();
                } else {
                    let boundary = newest;
                    if boundary != self.after + 1 {
                        self.boundary_ids.clear();
                    }
                    self.boundary_ids.extend(
                        self.buffered
                            .iter()
                            .filter(|p| p.created_utc == boundary)
                            .map(|p| p.id.clone()),
                    );
                    self.after = boundary - 1;
                }
            }
            _ => self.done = true,
        }
        Ok(())
    }
}

fn parse_page(body: &str) -> Result<Vec<Value>, ArchiveError> {
    let value: Value = serde_json::from_str(body).map_err(|e| ArchiveError::NonJsonResponse(e.to_string()))?;
    match value {
        Value::Object(mut obj) => match obj.remove("data") {
            Some(Value::Array(items)) => Ok(items),
            _ => Err(ArchiveError::NonJsonResponse("missing \"data\" array".into())),
        },
        _ => Err(ArchiveError::NonJsonResponse("top level is not an object".into())),
    }
}

impl<T: Transport> Iterator for ArchiveStream<'_, T> {
    type Item = Result<RawPost, ArchiveError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(post) = self.buffered.pop_front() {
                return Some(Ok(post));
            }
            if self.done {
                return None;
            }
            if let Err(e) = self.fill() {
                self.done = true;
                return Some(Err(e));
            }
        }
    }
}
