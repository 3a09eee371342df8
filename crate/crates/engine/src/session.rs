//! Session state, actions, and query outcomes.

use planprobe_core::address::Address;
use planprobe_core::plan::Plan;
use serde::{Deserialize, Serialize};

use crate::template::TemplateKind;

/// What the engine decided to do on a classified page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    ExtractPlans,
    SelectSuggestion {
        index: usize,
        text: String,
        zip: String,
    },
    SelectUnit {
        index: usize,
        label: String,
    },
    ChooseNewCustomerPath,
    TerminateUnserviceable,
    TerminateMiss {
        reason: String,
    },
}

impl Action {
    /// Terminal actions end the session without another transport request.
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            Action::ExtractPlans | Action::TerminateUnserviceable | Action::TerminateMiss { .. }
        )
    }
}

/// One step of a session: the classified template, the action taken, and the
/// wait time spent on that page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub template: TemplateKind,
    pub action: Action,
    pub elapsed_ms: u64,
}

/// The engine's position within one portal query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionState {
    pub input_address: Address,
    pub current_template: Option<TemplateKind>,
    pub step_count: usize,
    pub resolved_address: Option<Address>,
    pub transcript: Vec<TranscriptEntry>,
}

impl SessionState {
    pub fn new(input_address: Address) -> Self {
        Self {
            input_address,
            current_template: None,
            step_count: 0,
            resolved_address: None,
            transcript: Vec::new(),
        }
    }

    /// The address the session is currently acting as: the resolved address
    /// once a recovery succeeded, otherwise the input.
    pub fn effective_address(&self) -> &Address {
        self.resolved_address.as_ref().unwrap_or(&self.input_address)
    }

    pub fn record(&mut self, template: TemplateKind, action: Action, elapsed_ms: u64) {
        self.current_template = Some(template);
        self.transcript.push(TranscriptEntry {
            template,
            action,
            elapsed_ms,
        });
        self.step_count = self.transcript.len();
    }
}

/// Terminal status of a query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryStatus {
    Hit,
    Miss { reason: String },
    Unserviceable,
}

impl QueryStatus {
    pub fn is_hit(&self) -> bool {
        matches!(self, QueryStatus::Hit)
    }

    /// Whether the portal gave a definitive answer (plans or a no-service
    /// verdict).
    pub fn is_answered(&self) -> bool {
        matches!(self, QueryStatus::Hit | QueryStatus::Unserviceable)
    }
}

/// Result of one full query session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub status: QueryStatus,
    pub plans: Vec<Plan>,
    /// Wall-clock duration of the session as observed by the client.
    pub total_ms: u64,
    /// Sum of the server-reported per-page service times; independent of
    /// client-side scheduling, so it is stable across runs.
    pub serviced_ms: u64,
    pub resolved_address: Option<Address>,
    pub transcript: Vec<TranscriptEntry>,
}
