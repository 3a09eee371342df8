//! Deterministic HTTP fleet emulating ISP availability portals.
//!
//! Each scenario describes one portal: ground-truth plans per address (or a
//! profile rule that assigns them), interstitial noise probabilities, and
//! per-template service-time distributions. All behavior is derived from
//! (scenario, seed, canonical address), so a fleet replays byte-identical
//! page sequences for identical request sequences and produces the same
//! outcomes regardless of client concurrency.
//!
//! Wire protocol: `POST /query` submits an address form and opens a session,
//! `POST /action` advances it, and each response carries the rendered page
//! body, a completion marker, and the server-side service time. A test-only
//! `GET /truth` endpoint exposes ground truth when explicitly enabled.

pub mod fleet;
pub mod render;
pub mod scenario;
pub mod session;

pub use fleet::{build_fleet, Fleet, FleetEndpoint, FleetOptions};
pub use scenario::{
    LatencySpec, NoiseProfile, ProfileChoice, ProfileRule, SimError, SimScenario, TruthOutcome,
};
pub use session::{Envelope, QueryRequest};
