//! The query loop: submit, wait, classify, act.

use std::time::Duration;

use planprobe_core::address::{match_suggestion, AbbreviationTable, Address};
use planprobe_core::seed::derive_seed;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adapter::{AdapterSpec, TimingTable};
use crate::session::{Action, QueryOutcome, QueryStatus, SessionState};
use crate::template::TemplateKind;
use crate::transport::{PageResponse, Transport, TransportError, WireAction};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("step budget exceeded: max_steps = {max_steps}")]
    StepBudgetExceeded { max_steps: usize },
    #[error("no timing budget configured for template {0}")]
    MissingTiming(TemplateKind),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("outcome list is empty")]
    EmptyInput,
}

/// Classifies a page body against the adapter's patterns in fixed priority
/// order. Pure: same body and adapter always give the same kind.
pub fn classify_template(page_body: &str, adapter: &AdapterSpec) -> TemplateKind {
    adapter.classify(page_body)
}

/// A page that became ready (or ran out its budget).
#[derive(Debug, Clone)]
pub struct WaitReady {
    pub body: String,
    /// Backend-reported service time for this page.
    pub service_ms: u64,
    /// Wall time spent waiting on this page.
    pub elapsed_ms: u64,
    /// Set when the budget elapsed without a completeness signal; the session
    /// still continues to classification with the partial body.
    pub timed_out: bool,
}

/// Waits for the transport's page-complete signal, up to the budget for
/// `kind`. Early completion returns the actual elapsed time; budget
/// exhaustion returns the full budget with the timeout recorded.
pub async fn wait_for_ready<F>(
    kind: TemplateKind,
    timing_table: &TimingTable,
    page: F,
) -> Result<WaitReady, EngineError>
where
    F: std::future::Future<Output = Result<PageResponse, TransportError>>,
{
    let Some(&budget_ms) = timing_table.get(&kind) else {
        return Err(EngineError::MissingTiming(kind));
    };
    let budget = Duration::from_millis(budget_ms);
    let start = tokio::time::Instant::now();
    match tokio::time::timeout(budget, page).await {
        Ok(Ok(response)) if response.complete => Ok(WaitReady {
            elapsed_ms: start.elapsed().as_millis() as u64,
            service_ms: response.service_ms,
            body: response.body,
            timed_out: false,
        }),
        Ok(Ok(response)) => {
            // The document arrived but never signals completeness; hold for
            // the remainder of the budget, then classify what we have.
            tokio::time::sleep_until(start + budget).await;
            Ok(WaitReady {
                elapsed_ms: budget_ms,
                service_ms: response.service_ms,
                body: response.body,
                timed_out: true,
            })
        }
        Ok(Err(e)) => Err(EngineError::Transport(e)),
        Err(_) => Ok(WaitReady {
            elapsed_ms: budget_ms,
            service_ms: 0,
            body: String::new(),
            timed_out: true,
        }),
    }
}

/// Decides the action for a classified page.
///
/// Plans pages extract; incorrect-address pages pick the best same-zip
/// suggestion; multi-dwelling-unit pages pick a seeded-uniform unit;
/// existing-customer pages take the unauthenticated new-customer path;
/// unserviceable, blocked, and unknown pages terminate.
pub fn next_action(
    state: &SessionState,
    kind: TemplateKind,
    body: &str,
    adapter: &AdapterSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Action, EngineError> {
    if state.step_count >= adapter.max_steps {
        return Err(EngineError::StepBudgetExceeded {
            max_steps: adapter.max_steps,
        });
    }
    Ok(match kind {
        TemplateKind::PlansPage => Action::ExtractPlans,
        TemplateKind::IncorrectAddress => {
            let (texts, zips) = adapter.parse_suggestions(body);
            let table = AbbreviationTable::shipped();
            match match_suggestion(state.effective_address(), &texts, &zips, &table) {
                Some(index) => Action::SelectSuggestion {
                    index,
                    text: texts[index].clone(),
                    zip: zips[index].clone(),
                },
                None => Action::TerminateMiss {
                    reason: "no-suggestion".into(),
                },
            }
        }
        TemplateKind::MultiDwellingUnit => {
            let units = adapter.parse_units(body);
            if units.is_empty() {
                Action::TerminateMiss {
                    reason: "no-units".into(),
                }
            } else {
                let index = rng.random_range(0..units.len());
                Action::SelectUnit {
                    index,
                    label: units[index].clone(),
                }
            }
        }
        TemplateKind::ExistingCustomer => Action::ChooseNewCustomerPath,
        TemplateKind::Unserviceable => Action::TerminateUnserviceable,
        TemplateKind::Blocked => Action::TerminateMiss {
            reason: "blocked".into(),
        },
        TemplateKind::Unknown => Action::TerminateMiss {
            reason: "unknown".into(),
        },
    })
}

/// Drives one full query session to a terminal outcome.
///
/// Transport failures become `Miss("transport")` and an exhausted step budget
/// becomes `Miss("budget")`; the engine never panics on portal behavior.
/// Deterministic given (address, adapter, transport responses, seed).
pub async fn run_session<T: Transport + ?Sized>(
    address: &Address,
    adapter: &AdapterSpec,
    transport: &mut T,
    seed: u64,
) -> QueryOutcome {
    let start = tokio::time::Instant::now();
    let mut session = SessionState::new(address.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &["session", &adapter.isp_name, &address.address_id],
    ));
    // The upcoming template is unknown before the page arrives, so every wait
    // uses the adapter's maximum observed budget.
    let wait_kind = adapter.longest_wait_kind();
    let mut serviced_ms: u64 = 0;
    // (template we recovered from, address we will have if it worked)
    let mut pending_recovery: Option<(TemplateKind, Address)> = None;

    let finish = |session: SessionState, status: QueryStatus, plans, serviced_ms: u64, start: tokio::time::Instant| QueryOutcome {
        status,
        plans,
        total_ms: start.elapsed().as_millis() as u64,
        serviced_ms,
        resolved_address: session.resolved_address,
        transcript: session.transcript,
    };

    let mut ready = match wait_for_ready(wait_kind, &adapter.timing_table_ms, transport.submit(address)).await {
        Ok(w) => w,
        Err(_) => {
            return finish(
                session,
                QueryStatus::Miss {
                    reason: "transport".into(),
                },
                Vec::new(),
                serviced_ms,
                start,
            )
        }
    };

    loop {
        serviced_ms += ready.service_ms;
        let kind = classify_template(&ready.body, adapter);
        if let Some((recovered_from, resolved)) = pending_recovery.take() {
            // Leaving the recovery template means the selection was accepted.
            if kind != recovered_from {
                session.resolved_address = Some(resolved);
            }
        }
        let action = match next_action(&session, kind, &ready.body, adapter, &mut rng) {
            Ok(a) => a,
            Err(_) => {
                return finish(
                    session,
                    QueryStatus::Miss {
                        reason: "budget".into(),
                    },
                    Vec::new(),
                    serviced_ms,
                    start,
                )
            }
        };
        session.record(kind, action.clone(), ready.elapsed_ms);

        match action {
            Action::ExtractPlans => {
                let plans = adapter.parse_plans(&ready.body);
                let status = if plans.is_empty() {
                    QueryStatus::Miss {
                        reason: "no-plans".into(),
                    }
                } else {
                    QueryStatus::Hit
                };
                return finish(session, status, plans, serviced_ms, start);
            }
            Action::TerminateUnserviceable => {
                return finish(session, QueryStatus::Unserviceable, Vec::new(), serviced_ms, start)
            }
            Action::TerminateMiss { reason } => {
                let reason = if ready.timed_out && kind == TemplateKind::Unknown {
                    "timeout".to_string()
                } else {
                    reason
                };
                return finish(session, QueryStatus::Miss { reason }, Vec::new(), serviced_ms, start);
            }
            ref advance => {
                // A transport request is about to be issued; enforce the
                // request budget (one request per transcript entry so far).
                if session.step_count >= adapter.max_steps {
                    return finish(
                        session,
                        QueryStatus::Miss {
                            reason: "budget".into(),
                        },
                        Vec::new(),
                        serviced_ms,
                        start,
                    );
                }
                let wire = match advance {
                    Action::SelectSuggestion { index, text, zip } => {
                        let mut resolved = session.effective_address().clone();
                        resolved.street = text.clone();
                        resolved.zip = zip.clone();
                        pending_recovery = Some((TemplateKind::IncorrectAddress, resolved));
                        WireAction::SelectSuggestion { index: *index }
                    }
                    Action::SelectUnit { index, label } => {
                        let mut resolved = session.effective_address().clone();
                        resolved.unit = Some(label.clone());
                        pending_recovery = Some((TemplateKind::MultiDwellingUnit, resolved));
                        WireAction::SelectUnit { index: *index }
                    }
                    Action::ChooseNewCustomerPath => WireAction::ChooseOption { option: 2 },
                    _ => unreachable!("terminal actions handled above"),
                };
                ready = match wait_for_ready(wait_kind, &adapter.timing_table_ms, transport.act(&wire)).await {
                    Ok(w) => w,
                    Err(_) => {
                        return finish(
                            session,
                            QueryStatus::Miss {
                                reason: "transport".into(),
                            },
                            Vec::new(),
                            serviced_ms,
                            start,
                        )
                    }
                };
            }
        }
    }
}

/// Fraction of outcomes that extracted plans.
pub fn hit_rate(outcomes: &[QueryOutcome]) -> Result<f64, EngineError> {
    if outcomes.is_empty() {
        return Err(EngineError::EmptyInput);
    }
    let hits = outcomes.iter().filter(|o| o.status.is_hit()).count();
    Ok(hits as f64 / outcomes.len() as f64)
}

/// Fraction of outcomes where the portal gave a definitive answer (plans or
/// an unserviceable verdict). Reported alongside the hit rate.
pub fn answered_rate(outcomes: &[QueryOutcome]) -> Result<f64, EngineError> {
    if outcomes.is_empty() {
        return Err(EngineError::EmptyInput);
    }
    let answered = outcomes.iter().filter(|o| o.status.is_answered()).count();
    Ok(answered as f64 / outcomes.len() as f64)
}
