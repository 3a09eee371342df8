//! Pluggable transport between the engine and a portal backend.

use async_trait::async_trait;
use planprobe_core::address::Address;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// One fetched page. `complete` is the transport's document-ready signal;
/// `service_ms` is the backend-reported service time for this page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageResponse {
    pub body: String,
    pub complete: bool,
    pub service_ms: u64,
}

/// Actions that go over the wire (terminal actions never do).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WireAction {
    SelectSuggestion { index: usize },
    SelectUnit { index: usize },
    /// 1-based option index on an existing-customer page.
    ChooseOption { option: u32 },
}

/// A transport owns one session's connection state: `submit` opens the
/// session with an address, `act` advances it.
#[async_trait]
pub trait Transport: Send {
    async fn submit(&mut self, address: &Address) -> Result<PageResponse, TransportError>;
    async fn act(&mut self, action: &WireAction) -> Result<PageResponse, TransportError>;
}
