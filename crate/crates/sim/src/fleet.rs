//! One HTTP endpoint per scenario, served by axum.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::sync::{oneshot, Semaphore};

use crate::scenario::{SimError, SimScenario, TruthOutcome};
use crate::session::{open_session, ActionRequest, Envelope, QueryRequest, SimSession};

/// Fleet construction options.
#[derive(Debug, Clone, Default)]
pub struct FleetOptions {
    /// Expose `GET /truth` (test-only; off by default).
    pub expose_truth: bool,
    /// Fixed ports, one per scenario; missing entries bind ephemerally.
    pub ports: Vec<u16>,
}

/// A running portal.
#[derive(Debug, Clone)]
pub struct FleetEndpoint {
    pub isp_name: String,
    pub addr: SocketAddr,
    pub url: String,
}

struct Portal {
    scenario: SimScenario,
    seed: u64,
    expose_truth: bool,
    sessions: Mutex<HashMap<String, SimSession>>,
    capacity: Option<Arc<Semaphore>>,
}

/// A set of running portal servers; shut down explicitly or on drop.
pub struct Fleet {
    endpoints: Vec<FleetEndpoint>,
    portals: Vec<Arc<Portal>>,
    shutdown: Vec<oneshot::Sender<()>>,
    tasks: Vec<tokio::task::JoinHandle<()>>,
}

/// Starts one HTTP endpoint per scenario. Behavior is fully determined by
/// (scenario, seed).
pub async fn build_fleet(
    scenarios: Vec<SimScenario>,
    seed: u64,
    options: FleetOptions,
) -> Result<Fleet, SimError> {
    if scenarios.is_empty() {
        return Err(SimError::InvalidScenario("empty scenario list".into()));
    }
    {
        let mut names: Vec<&str> = scenarios.iter().map(|s| s.isp_name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != scenarios.len() {
            return Err(SimError::InvalidScenario("duplicate isp_name in fleet".into()));
        }
    }

    let mut fleet = Fleet {
        endpoints: Vec::new(),
        portals: Vec::new(),
        shutdown: Vec::new(),
        tasks: Vec::new(),
    };
    for (i, scenario) in scenarios.into_iter().enumerate() {
        let port = options.ports.get(i).copied().unwrap_or(0);
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(SimError::PortUnavailable)?;
        let addr = listener.local_addr().map_err(SimError::PortUnavailable)?;
        let portal = Arc::new(Portal {
            capacity: scenario.capacity.map(|c| Arc::new(Semaphore::new(c))),
            seed,
            expose_truth: options.expose_truth,
            sessions: Mutex::new(HashMap::new()),
            scenario,
        });
        let app = Router::new()
            .route("/query", post(handle_query))
            .route("/action", post(handle_action))
            .route("/truth", get(handle_truth))
            .route("/healthz", get(|| async { "ok" }))
            .with_state(portal.clone());
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        fleet.endpoints.push(FleetEndpoint {
            isp_name: portal.scenario.isp_name.clone(),
            addr,
            url: format!("http://{addr}"),
        });
        fleet.portals.push(portal);
        fleet.shutdown.push(tx);
        fleet.tasks.push(task);
    }
    Ok(fleet)
}

impl Fleet {
    pub fn endpoints(&self) -> &[FleetEndpoint] {
        &self.endpoints
    }

    pub fn url(&self, isp_name: &str) -> Option<&str> {
        self.endpoints
            .iter()
            .find(|e| e.isp_name == isp_name)
            .map(|e| e.url.as_str())
    }

    /// In-process ground-truth oracle for end-to-end assertions.
    pub fn ground_truth(
        &self,
        isp_name: &str,
        street: &str,
        zip: &str,
    ) -> Result<TruthOutcome, SimError> {
        let portal = self
            .portals
            .iter()
            .find(|p| p.scenario.isp_name == isp_name)
            .ok_or_else(|| SimError::UnknownIsp(isp_name.to_string()))?;
        portal
            .scenario
            .ground_truth(portal.seed, street, zip)
            .ok_or_else(|| SimError::UnknownAddress(format!("{street} ({zip})")))
    }

    /// The status a correct client will end a session with, for predicting
    /// crawl summaries.
    pub fn predicted_status(
        &self,
        isp_name: &str,
        street: &str,
        zip: &str,
    ) -> Result<crate::session::PredictedStatus, SimError> {
        let portal = self
            .portals
            .iter()
            .find(|p| p.scenario.isp_name == isp_name)
            .ok_or_else(|| SimError::UnknownIsp(isp_name.to_string()))?;
        Ok(crate::session::predicted_status(
            &portal.scenario,
            portal.seed,
            street,
            zip,
        ))
    }

    pub async fn shutdown(mut self) {
        for tx in self.shutdown.drain(..) {
            let _ = tx.send(());
        }
        for task in self.tasks.drain(..) {
            let _ = task.await;
        }
    }
}

/// Serves the session's current page: waits for a capacity slot (queue time
/// counts toward the reported service time, in whole milliseconds), then
/// holds the slot for the sampled service duration.
async fn serve_page(portal: &Portal, session: &mut SimSession) -> (String, u64) {
    let queued_at = tokio::time::Instant::now();
    let _permit = match &portal.capacity {
        Some(semaphore) => Some(semaphore.clone().acquire_owned().await.expect("semaphore open")),
        None => None,
    };
    let queue_ms = if portal.capacity.is_some() {
        queued_at.elapsed().as_millis() as u64
    } else {
        0
    };
    let (body, planned_ms) =
        session.render_current(&portal.scenario, portal.seed, &portal.scenario.isp_name);
    tokio::time::sleep(Duration::from_millis(planned_ms)).await;
    (body, planned_ms + queue_ms)
}

fn error_response(status: StatusCode, message: &str) -> Response {
    (status, Json(serde_json::json!({ "error": message }))).into_response()
}

async fn handle_query(
    State(portal): State<Arc<Portal>>,
    Json(request): Json<QueryRequest>,
) -> Response {
    if request.street.trim().is_empty() || request.zip.trim().is_empty() {
        return error_response(StatusCode::BAD_REQUEST, "street and zip are required");
    }
    let mut session = open_session(&portal.scenario, portal.seed, &request);
    let id = session.id.clone();
    let (body, service_ms) = serve_page(&portal, &mut session).await;
    let mut sessions = portal.sessions.lock().expect("sessions lock");
    if session.finished() {
        sessions.remove(&id);
    } else {
        sessions.insert(id.clone(), session);
    }
    Json(Envelope {
        session: id,
        body,
        complete: true,
        service_ms,
    })
    .into_response()
}

async fn handle_action(
    State(portal): State<Arc<Portal>>,
    Json(request): Json<ActionRequest>,
) -> Response {
    let Some(mut session) = portal
        .sessions
        .lock()
        .expect("sessions lock")
        .remove(&request.session)
    else {
        return error_response(StatusCode::NOT_FOUND, "unknown session");
    };
    session.apply(&request.action);
    let (body, service_ms) = serve_page(&portal, &mut session).await;
    if !session.finished() {
        portal
            .sessions
            .lock()
            .expect("sessions lock")
            .insert(request.session.clone(), session);
    }
    Json(Envelope {
        session: request.session,
        body,
        complete: true,
        service_ms,
    })
    .into_response()
}

#[derive(Debug, Deserialize)]
struct TruthQuery {
    street: String,
    zip: String,
}

async fn handle_truth(
    State(portal): State<Arc<Portal>>,
    Query(query): Query<TruthQuery>,
) -> Response {
    if !portal.expose_truth {
        return error_response(StatusCode::NOT_FOUND, "truth endpoint disabled");
    }
    match portal.scenario.ground_truth(portal.seed, &query.street, &query.zip) {
        Some(outcome) => Json(outcome).into_response(),
        None => error_response(StatusCode::NOT_FOUND, "unknown address"),
    }
}
