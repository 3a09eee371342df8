//! Page-template taxonomy for availability-portal workflows.

use serde::{Deserialize, Serialize};

/// The template classes a portal page can fall into. Exactly one kind is
/// assigned per fetched page; `Unknown` is the sink when nothing matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    PlansPage,
    IncorrectAddress,
    MultiDwellingUnit,
    ExistingCustomer,
    Unserviceable,
    Blocked,
    Unknown,
}

impl TemplateKind {
    /// Classification priority when several patterns match the same body.
    /// Putting `PlansPage` first makes a false miss on a success page
    /// impossible.
    pub const PRIORITY: [TemplateKind; 6] = [
        TemplateKind::PlansPage,
        TemplateKind::IncorrectAddress,
        TemplateKind::MultiDwellingUnit,
        TemplateKind::ExistingCustomer,
        TemplateKind::Unserviceable,
        TemplateKind::Blocked,
    ];
}

impl std::fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::PlansPage => "plans_page",
            Self::IncorrectAddress => "incorrect_address",
            Self::MultiDwellingUnit => "multi_dwelling_unit",
            Self::ExistingCustomer => "existing_customer",
            Self::Unserviceable => "unserviceable",
            Self::Blocked => "blocked",
            Self::Unknown => "unknown",
        };
        write!(f, "{name}")
    }
}
