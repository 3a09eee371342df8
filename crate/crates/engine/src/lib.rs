//! Recoverable state machine for multi-step availability-portal queries.
//!
//! A query session submits a street address, waits for the page to become
//! ready, classifies the returned template, and applies a recovery action
//! (pick a suggested address, pick a unit, take the new-customer path) until
//! plans are extracted or the attempt fails. Page classification and plan
//! extraction are driven entirely by per-ISP adapter specs, and the transport
//! is pluggable so the same engine runs against the built-in simulator fleet
//! or any future backend.

pub mod adapter;
pub mod runner;
pub mod session;
pub mod template;
pub mod transport;

pub use adapter::{AdapterError, AdapterSpec};
pub use runner::{
    answered_rate, classify_template, hit_rate, next_action, run_session, wait_for_ready,
    EngineError, WaitReady,
};
pub use session::{Action, QueryOutcome, QueryStatus, SessionState, TranscriptEntry};
pub use template::TemplateKind;
pub use transport::{PageResponse, Transport, TransportError, WireAction};
