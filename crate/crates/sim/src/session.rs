//! Per-session portal state: route derivation and action handling.
//!
//! A session's interstitial path is drawn once when the address is submitted,
//! from a hash of (seed, ISP, canonical address), so retries and concurrent
//! runs see the same path. Correct recovery actions advance the session;
//! wrong ones re-emit the current template.

use std::collections::VecDeque;

use planprobe_core::plan::Plan;
use planprobe_core::seed::{derive_seed, unit_fraction};
use planprobe_engine::template::TemplateKind;
use planprobe_engine::transport::WireAction;
use serde::{Deserialize, Serialize};

use crate::render;
use crate::scenario::{raw_street, truth_key, SimScenario, TruthOutcome};

/// Address form posted to `/query`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRequest {
    pub street: String,
    #[serde(default)]
    pub unit: Option<String>,
    #[serde(default)]
    pub city: String,
    #[serde(default)]
    pub state: String,
    pub zip: String,
}

/// Action posted to `/action`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionRequest {
    pub session: String,
    pub action: WireAction,
}

/// Every `/query` and `/action` response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub session: String,
    pub body: String,
    /// Document-ready signal.
    pub complete: bool,
    /// Server-side service time for this page, in milliseconds.
    pub service_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    IncorrectAddress,
    MultiDwellingUnit,
    ExistingCustomer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Plans(Vec<Plan>),
    Unserviceable,
    Blocked,
    /// Unknown address: the suggestion list never contains a usable entry, so
    /// a correct client terminates before reaching any terminal page.
    Unreachable,
}

/// One live portal session.
#[derive(Debug, Clone)]
pub struct SimSession {
    pub id: String,
    phases: VecDeque<Phase>,
    terminal: Terminal,
    suggestions: Vec<(String, String)>,
    units: Vec<String>,
    canonical_key: String,
    steps_rendered: u32,
    finished: bool,
}

/// The interstitial (at most one) drawn for a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseRoute {
    IncorrectAddress,
    MultiDwellingUnit,
    ExistingCustomer,
    Blocked,
    Clean,
}

/// Per-session interstitial draw, keyed by the canonical address so it is
/// stable under retries and across runs.
pub fn noise_route(scenario: &SimScenario, seed: u64, key: &str) -> NoiseRoute {
    let noise = scenario.noise;
    let u = unit_fraction(derive_seed(seed, &[&scenario.isp_name, "noise", key]));
    let mut cut = noise.p_incorrect_address;
    if u < cut {
        return NoiseRoute::IncorrectAddress;
    }
    cut += noise.p_mdu;
    if u < cut {
        return NoiseRoute::MultiDwellingUnit;
    }
    cut += noise.p_existing_customer;
    if u < cut {
        return NoiseRoute::ExistingCustomer;
    }
    cut += noise.p_blocked;
    if u < cut {
        return NoiseRoute::Blocked;
    }
    NoiseRoute::Clean
}

/// The terminal status a correct client will reach for an address, without
/// running the session. Test oracle for crawl summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictedStatus {
    Hit,
    Unserviceable,
    Miss,
}

pub fn predicted_status(
    scenario: &SimScenario,
    seed: u64,
    street: &str,
    zip: &str,
) -> PredictedStatus {
    let key = truth_key(&scenario.canonical_street(street), zip);
    if noise_route(scenario, seed, &key) == NoiseRoute::Blocked {
        return PredictedStatus::Miss;
    }
    match scenario.ground_truth(seed, street, zip) {
        None => PredictedStatus::Miss,
        Some(TruthOutcome::Unserviceable) => PredictedStatus::Unserviceable,
        Some(TruthOutcome::Plans { .. }) => PredictedStatus::Hit,
    }
}

/// Builds the deterministic session for a submitted address.
pub fn open_session(scenario: &SimScenario, seed: u64, request: &QueryRequest) -> SimSession {
    let canonical = scenario.canonical_street(&request.street);
    let raw = raw_street(&request.street);
    let key = truth_key(&canonical, &request.zip);
    let truth = scenario.ground_truth(seed, &request.street, &request.zip);
    let route = noise_route(scenario, seed, &key);

    let mut phases = VecDeque::new();
    let terminal;
    if route == NoiseRoute::Blocked {
        terminal = Terminal::Blocked;
    } else {
        let mismatch = raw != canonical;
        match &truth {
            None => {
                // Unknown address: always routed to the suggestion page, with
                // no recoverable entry.
                phases.push_back(Phase::IncorrectAddress);
                terminal = Terminal::Unreachable;
            }
            Some(outcome) => {
                if route == NoiseRoute::IncorrectAddress || mismatch {
                    phases.push_back(Phase::IncorrectAddress);
                }
                if route == NoiseRoute::ExistingCustomer {
                    phases.push_back(Phase::ExistingCustomer);
                }
                if route == NoiseRoute::MultiDwellingUnit {
                    phases.push_back(Phase::MultiDwellingUnit);
                }
                terminal = match outcome {
                    TruthOutcome::Plans { plans } => Terminal::Plans(plans.clone()),
                    TruthOutcome::Unserviceable => Terminal::Unserviceable,
                };
            }
        }
    }

    let suggestions = build_suggestions(
        scenario,
        seed,
        &canonical,
        &request.zip,
        truth.is_some(),
    );
    let units = build_units(scenario, seed, &key);

    // Session ids derive from the submitted form so identical request
    // sequences produce identical ids.
    let id = format!(
        "s{:016x}",
        derive_seed(seed, &[&scenario.isp_name, "sid", &raw, &request.zip])
    );

    SimSession {
        id,
        phases,
        terminal,
        suggestions,
        units,
        canonical_key: key,
        steps_rendered: 0,
        finished: false,
    }
}

/// The suggestion list: the canonical form (same zip) when the address is
/// recoverable, plus two decoys with different zips. Order is seeded.
fn build_suggestions(
    scenario: &SimScenario,
    seed: u64,
    canonical: &str,
    zip: &str,
    recoverable: bool,
) -> Vec<(String, String)> {
    let decoy = |k: u64| {
        let mutated = mutate_leading_number(canonical, k + 1);
        (mutated, mutate_zip(zip, k + 1))
    };
    let mut list = vec![decoy(0), decoy(1)];
    if recoverable {
        let pos = (derive_seed(seed, &[&scenario.isp_name, "sugpos", canonical, zip]) % 3) as usize;
        list.insert(pos.min(list.len()), (canonical.to_string(), zip.to_string()));
    } else {
        list.push(decoy(2));
    }
    list
}

fn build_units(scenario: &SimScenario, seed: u64, key: &str) -> Vec<String> {
    let n = 2 + (derive_seed(seed, &[&scenario.isp_name, "units", key]) % 3) as usize;
    (1..=n).map(|i| format!("APT {i}")).collect()
}

/// Bumps the leading house number so decoys differ from the canonical form.
fn mutate_leading_number(street: &str, bump: u64) -> String {
    let mut tokens: Vec<String> = street.split_whitespace().map(str::to_string).collect();
    if let Some(first) = tokens.first_mut() {
        if let Ok(n) = first.parse::<u64>() {
            *first = (n + bump).to_string();
            return tokens.join(" ");
        }
    }
    format!("{bump} {street}")
}

/// Rotates the last zip digit by a nonzero amount, guaranteeing a different
/// zip.
fn mutate_zip(zip: &str, k: u64) -> String {
    let mut bytes: Vec<u8> = zip.bytes().collect();
    if let Some(last) = bytes.last_mut() {
        let d = (*last as char).to_digit(10).unwrap_or(0) as u64;
        let shifted = (d + (k % 9) + 1) % 10;
        *last = b'0' + shifted as u8;
    }
    String::from_utf8(bytes).unwrap_or_else(|_| zip.to_string())
}

impl SimSession {
    pub fn finished(&self) -> bool {
        self.finished
    }

    /// Template kind of the page the session will render next.
    pub fn current_kind(&self) -> TemplateKind {
        match self.phases.front() {
            Some(Phase::IncorrectAddress) => TemplateKind::IncorrectAddress,
            Some(Phase::MultiDwellingUnit) => TemplateKind::MultiDwellingUnit,
            Some(Phase::ExistingCustomer) => TemplateKind::ExistingCustomer,
            None => match self.terminal {
                Terminal::Plans(_) => TemplateKind::PlansPage,
                Terminal::Unserviceable => TemplateKind::Unserviceable,
                Terminal::Blocked => TemplateKind::Blocked,
                Terminal::Unreachable => TemplateKind::IncorrectAddress,
            },
        }
    }

    /// Renders the current page and samples its service time. Terminal pages
    /// close the session.
    pub fn render_current(&mut self, scenario: &SimScenario, seed: u64, isp: &str) -> (String, u64) {
        let kind = self.current_kind();
        let body = match self.phases.front() {
            Some(Phase::IncorrectAddress) => render::incorrect_address(&self.suggestions),
            Some(Phase::MultiDwellingUnit) => render::multi_dwelling_unit(&self.units),
            Some(Phase::ExistingCustomer) => render::existing_customer(),
            None => match &self.terminal {
                Terminal::Plans(plans) => {
                    self.finished = true;
                    render::plans_page(isp, plans)
                }
                Terminal::Unserviceable => {
                    self.finished = true;
                    render::unserviceable()
                }
                Terminal::Blocked => {
                    self.finished = true;
                    render::blocked()
                }
                Terminal::Unreachable => render::incorrect_address(&self.suggestions),
            },
        };
        let service_ms = scenario.service_ms(seed, &self.canonical_key, self.steps_rendered, kind);
        self.steps_rendered += 1;
        (body, service_ms)
    }

    /// Applies a client action. Correct actions advance to the next phase;
    /// anything else re-emits the current template.
    pub fn apply(&mut self, action: &WireAction) {
        let advanced = match (self.phases.front(), action) {
            (Some(Phase::IncorrectAddress), WireAction::SelectSuggestion { index }) => self
                .suggestions
                .get(*index)
                .is_some_and(|(text, zip)| truth_key(text, zip) == self.canonical_key),
            (Some(Phase::MultiDwellingUnit), WireAction::SelectUnit { index }) => {
                *index < self.units.len()
            }
            (Some(Phase::ExistingCustomer), WireAction::ChooseOption { option }) => *option == 2,
            _ => false,
        };
        if advanced {
            self.phases.pop_front();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SimScenario;

    const SCENARIO: &str = r#"
isp_name = "att"

[[truth]]
street = "123 Main Avenue"
zip = "70115"
plans = [{ down = 1000.0, up = 1000.0, price = 80.0, tech = "fiber" }]
"#;

    fn request(street: &str) -> QueryRequest {
        QueryRequest {
            street: street.into(),
            unit: None,
            city: "New Orleans".into(),
            state: "LA".into(),
            zip: "70115".into(),
        }
    }

    #[test]
    fn noiseless_exact_address_goes_straight_to_plans() {
        let scenario = SimScenario::parse(SCENARIO).unwrap();
        let mut session = open_session(&scenario, 1, &request("123 Main Avenue"));
        assert_eq!(session.current_kind(), TemplateKind::PlansPage);
        let (body, _) = session.render_current(&scenario, 1, "att");
        assert!(body.contains("plans-grid"));
        assert!(session.finished());
    }

    #[test]
    fn suffix_mismatch_routes_through_incorrect_address() {
        let scenario = SimScenario::parse(SCENARIO).unwrap();
        let mut session = open_session(&scenario, 1, &request("123 Main Ave"));
        assert_eq!(session.current_kind(), TemplateKind::IncorrectAddress);
        let (body, _) = session.render_current(&scenario, 1, "att");
        assert!(body.contains("123 MAIN AVENUE"), "canonical form offered:\n{body}");

        // The canonical suggestion is the only same-zip entry.
        let canonical_pos = session
            .suggestions
            .iter()
            .position(|(_, z)| z == "70115")
            .expect("canonical present");
        let same_zip = session.suggestions.iter().filter(|(_, z)| z == "70115").count();
        assert_eq!(same_zip, 1);
        assert_eq!(session.suggestions.len(), 3);

        // Wrong pick re-emits; right pick advances to plans.
        session.apply(&WireAction::SelectSuggestion { index: (canonical_pos + 1) % 3 });
        assert_eq!(session.current_kind(), TemplateKind::IncorrectAddress);
        session.apply(&WireAction::SelectSuggestion { index: canonical_pos });
        assert_eq!(session.current_kind(), TemplateKind::PlansPage);
    }

    #[test]
    fn unknown_address_has_no_recoverable_suggestion() {
        let scenario = SimScenario::parse(SCENARIO).unwrap();
        let session = open_session(&scenario, 1, &request("999 Nowhere Lane"));
        assert_eq!(session.current_kind(), TemplateKind::IncorrectAddress);
        assert!(session.suggestions.iter().all(|(_, z)| z != "70115"));
    }

    #[test]
    fn existing_customer_advances_only_on_option_two() {
        let doc = format!("{SCENARIO}\n[noise]\np_existing_customer = 1.0\n");
        let scenario = SimScenario::parse(&doc).unwrap();
        let mut session = open_session(&scenario, 1, &request("123 Main Avenue"));
        assert_eq!(session.current_kind(), TemplateKind::ExistingCustomer);
        session.apply(&WireAction::ChooseOption { option: 1 });
        assert_eq!(session.current_kind(), TemplateKind::ExistingCustomer);
        session.apply(&WireAction::ChooseOption { option: 3 });
        assert_eq!(session.current_kind(), TemplateKind::ExistingCustomer);
        session.apply(&WireAction::ChooseOption { option: 2 });
        assert_eq!(session.current_kind(), TemplateKind::PlansPage);
    }

    #[test]
    fn blocked_draw_overrides_everything() {
        let doc = format!("{SCENARIO}\n[noise]\np_blocked = 1.0\n");
        let scenario = SimScenario::parse(&doc).unwrap();
        let mut session = open_session(&scenario, 1, &request("123 Main Ave"));
        assert_eq!(session.current_kind(), TemplateKind::Blocked);
        let (body, _) = session.render_current(&scenario, 1, "att");
        assert!(body.contains("access-blocked"));
        assert!(session.finished());
    }

    #[test]
    fn mdu_draw_inserts_unit_phase() {
        let doc = format!("{SCENARIO}\n[noise]\np_mdu = 1.0\n");
        let scenario = SimScenario::parse(&doc).unwrap();
        let mut session = open_session(&scenario, 1, &request("123 Main Avenue"));
        assert_eq!(session.current_kind(), TemplateKind::MultiDwellingUnit);
        assert!((2..=4).contains(&session.units.len()));
        session.apply(&WireAction::SelectUnit { index: 99 });
        assert_eq!(session.current_kind(), TemplateKind::MultiDwellingUnit);
        session.apply(&WireAction::SelectUnit { index: 0 });
        assert_eq!(session.current_kind(), TemplateKind::PlansPage);
    }

    #[test]
    fn sessions_are_deterministic_per_seed() {
        let scenario = SimScenario::parse(SCENARIO).unwrap();
        let a = open_session(&scenario, 42, &request("123 Main Ave"));
        let b = open_session(&scenario, 42, &request("123 Main Ave"));
        assert_eq!(a.id, b.id);
        assert_eq!(a.suggestions, b.suggestions);
        assert_eq!(a.phases, b.phases);
    }

    #[test]
    fn zip_mutation_never_collides() {
        for zip in ["70115", "00000", "99999"] {
            for k in 1..=3 {
                assert_ne!(mutate_zip(zip, k), zip);
            }
        }
    }
}
