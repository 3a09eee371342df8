//! HTTP transport speaking the portal wire protocol, with instrumentation.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use planprobe_core::address::Address;
use planprobe_engine::transport::{PageResponse, Transport, TransportError, WireAction};
use planprobe_sim::session::ActionRequest;
use planprobe_sim::{Envelope, QueryRequest};

use crate::limiter::HostLimiter;

/// Shared counters for one crawl run. The in-flight gauge counts open
/// sessions (a transport between its first submit and drop), which is the
/// quantity bounded by the worker pool.
#[derive(Debug, Default)]
pub struct CrawlMetrics {
    inflight_sessions: AtomicUsize,
    max_inflight_sessions: AtomicUsize,
    requests: AtomicU64,
    service_samples: Mutex<Vec<f64>>,
}

impl CrawlMetrics {
    pub fn max_inflight_sessions(&self) -> usize {
        self.max_inflight_sessions.load(Ordering::Relaxed)
    }

    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Server-reported service time of every request, in request order
    /// (unordered across tasks).
    pub fn take_service_samples(&self) -> Vec<f64> {
        std::mem::take(&mut self.service_samples.lock().expect("samples lock"))
    }

    fn session_opened(&self) {
        let now = self.inflight_sessions.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_inflight_sessions.fetch_max(now, Ordering::SeqCst);
    }

    fn session_closed(&self) {
        self.inflight_sessions.fetch_sub(1, Ordering::SeqCst);
    }

    fn record_request(&self, service_ms: u64) {
        self.requests.fetch_add(1, Ordering::Relaxed);
        self.service_samples
            .lock()
            .expect("samples lock")
            .push(service_ms as f64);
    }
}

/// One session's HTTP connection to a portal endpoint.
pub struct HttpTransport {
    client: reqwest::Client,
    base_url: String,
    egress_id: String,
    limiter: Arc<HostLimiter>,
    metrics: Arc<CrawlMetrics>,
    session: Option<String>,
    open: bool,
}

impl HttpTransport {
    pub fn new(
        client: reqwest::Client,
        base_url: impl Into<String>,
        egress_id: impl Into<String>,
        limiter: Arc<HostLimiter>,
        metrics: Arc<CrawlMetrics>,
    ) -> Self {
        Self {
            client,
            base_url: base_url.into(),
            egress_id: egress_id.into(),
            limiter,
            metrics,
            session: None,
            open: false,
        }
    }

    async fn post<B: serde::Serialize>(
        &mut self,
        route: &str,
        body: &B,
    ) -> Result<PageResponse, TransportError> {
        self.limiter.acquire().await;
        let response = self
            .client
            .post(format!("{}{}", self.base_url, route))
            .header("x-egress-id", &self.egress_id)
            .json(body)
            .send()
            .await
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        if !response.status().is_success() {
            let status = response.status();
            let detail = response.text().await.unwrap_or_default();
            return Err(TransportError::Protocol(format!("{status}: {detail}")));
        }
        let envelope: Envelope = response
            .json()
            .await
            .map_err(|e| TransportError::Protocol(e.to_string()))?;
        self.metrics.record_request(envelope.service_ms);
        self.session = Some(envelope.session);
        Ok(PageResponse {
            body: envelope.body,
            complete: envelope.complete,
            service_ms: envelope.service_ms,
        })
    }
}

#[async_trait]
impl Transport for HttpTransport {
    async fn submit(&mut self, address: &Address) -> Result<PageResponse, TransportError> {
        if !self.open {
            self.open = true;
            self.metrics.session_opened();
        }
        let request = QueryRequest {
            street: address.street.clone(),
            unit: address.unit.clone(),
            city: address.city.clone(),
            state: address.state.clone(),
            zip: address.zip.clone(),
        };
        self.post("/query", &request).await
    }

    async fn act(&mut self, action: &WireAction) -> Result<PageResponse, TransportError> {
        let session = self
            .session
            .clone()
            .ok_or_else(|| TransportError::Protocol("act before submit".into()))?;
        let request = ActionRequest {
            session,
            action: action.clone(),
        };
        self.post("/action", &request).await
    }
}

impl Drop for HttpTransport {
    fn drop(&mut self) {
        if self.open {
            self.metrics.session_closed();
        }
    }
}
