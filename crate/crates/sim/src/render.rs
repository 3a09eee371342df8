//! Page-body rendering with fixed marker strings.
//!
//! Bodies are HTML-like documents carrying stable class markers; adapter
//! specs classify pages by these markers and extract structured fields from
//! the `data-` attributes. Fidelity to real portal markup is a non-goal.

use planprobe_core::plan::Plan;

pub const PLANS_MARKER: &str = "plans-grid";
pub const INCORRECT_ADDRESS_MARKER: &str = "address-suggestions";
pub const MDU_MARKER: &str = "unit-picker";
pub const EXISTING_CUSTOMER_MARKER: &str = "existing-customer";
pub const UNSERVICEABLE_MARKER: &str = "no-service";
pub const BLOCKED_MARKER: &str = "access-blocked";

pub fn plans_page(isp: &str, plans: &[Plan]) -> String {
    let mut items = String::new();
    for p in plans {
        items.push_str(&format!(
            "    <li class=\"plan\" data-down=\"{}\" data-up=\"{}\" data-price=\"{}\" data-tech=\"{}\">{} / {} Mbps at ${} per month</li>\n",
            p.download_mbps,
            p.upload_mbps,
            p.monthly_price_usd,
            p.technology,
            p.download_mbps,
            p.upload_mbps,
            p.monthly_price_usd,
        ));
    }
    format!(
        "<html><body>\n<div class=\"{PLANS_MARKER}\" data-isp=\"{isp}\">\n  <ul>\n{items}  </ul>\n</div>\n</body></html>\n"
    )
}

pub fn incorrect_address(suggestions: &[(String, String)]) -> String {
    let mut items = String::new();
    for (text, zip) in suggestions {
        items.push_str(&format!(
            "    <li class=\"suggestion\" data-zip=\"{zip}\">{text}</li>\n"
        ));
    }
    format!(
        "<html><body>\n<div class=\"{INCORRECT_ADDRESS_MARKER}\">\n  <p>We could not find that address. Did you mean:</p>\n  <ul>\n{items}  </ul>\n</div>\n</body></html>\n"
    )
}

pub fn multi_dwelling_unit(units: &[String]) -> String {
    let mut items = String::new();
    for unit in units {
        items.push_str(&format!("    <li class=\"unit\">{unit}</li>\n"));
    }
    format!(
        "<html><body>\n<div class=\"{MDU_MARKER}\">\n  <p>Select your unit:</p>\n  <ul>\n{items}  </ul>\n</div>\n</body></html>\n"
    )
}

pub fn existing_customer() -> String {
    format!(
        "<html><body>\n<div class=\"{EXISTING_CUSTOMER_MARKER}\">\n  <ol>\n    <li class=\"option\" data-option=\"1\">Sign in to change your plan</li>\n    <li class=\"option\" data-option=\"2\">Shop plans as a new customer</li>\n    <li class=\"option\" data-option=\"3\">Sign in to add a line</li>\n  </ol>\n</div>\n</body></html>\n"
    )
}

pub fn unserviceable() -> String {
    format!(
        "<html><body>\n<div class=\"{UNSERVICEABLE_MARKER}\">Service is not available at this address.</div>\n</body></html>\n"
    )
}

pub fn blocked() -> String {
    format!(
        "<html><body>\n<div class=\"{BLOCKED_MARKER}\">Access denied.</div>\n</body></html>\n"
    )
}
