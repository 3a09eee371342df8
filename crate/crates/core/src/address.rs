//! Street-address canonicalization, suggestion matching, and privacy hashing.
//!
//! Availability portals are picky about address spelling ("Ave" vs "Avenue",
//! "CT" vs "Court"), and the suggestion lists they return must be matched back
//! to the queried address. Canonicalization uppercases, strips punctuation,
//! and expands a fixed suffix-abbreviation table; matching is token-level
//! Levenshtein restricted to suggestions in the same zip code.

use std::collections::BTreeMap;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

/// Default abbreviation table, versioned in the repo.
const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

#[derive(Debug, Error)]
pub enum AddressError {
    #[error("street is empty")]
    EmptyStreet,
    #[error("salt must be at least 16 bytes, got {0}")]
    WeakSalt(usize),
    #[error("invalid address: {0}")]
    InvalidAddress(String),
    #[error("invalid abbreviation table: {0}")]
    InvalidTable(String),
}

/// One queryable street address with its census block-group assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Address {
    pub address_id: String,
    pub street: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub city: String,
    pub state: String,
    pub zip: String,
    pub block_group_id: String,
}

impl Address {
    /// Checks the field invariants: 5-digit zip, 2-letter uppercase state,
    /// 12-digit numeric block-group GEOID, nonempty street and id.
    pub fn validate(&self) -> Result<(), AddressError> {
        if self.address_id.is_empty() {
            return Err(AddressError::InvalidAddress("empty address_id".into()));
        }
        if self.street.trim().is_empty() {
            return Err(AddressError::EmptyStreet);
        }
        if self.zip.len() != 5 || !self.zip.bytes().all(|b| b.is_ascii_digit()) {
            return Err(AddressError::InvalidAddress(format!(
                "zip must be exactly 5 digits, got {:?}",
                self.zip
            )));
        }
        if self.state.len() != 2 || !self.state.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(AddressError::InvalidAddress(format!(
                "state must be 2 uppercase letters, got {:?}",
                self.state
            )));
        }
        if self.block_group_id.len() != 12
            || !self.block_group_id.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(AddressError::InvalidAddress(format!(
                "block_group_id must be 12 digits, got {:?}",
                self.block_group_id
            )));
        }
        Ok(())
    }
}

/// Normalized address form: uppercase tokens with suffix expansions applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalAddress {
    pub tokens: Vec<String>,
    pub zip: String,
}

impl CanonicalAddress {
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Two-column suffix-abbreviation table (abbrev -> expansion).
#[derive(Debug, Clone)]
pub struct AbbreviationTable {
    entries: BTreeMap<String, String>,
}

impl AbbreviationTable {
    /// The table shipped with the crate.
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS).expect("shipped abbreviation table is valid")
    }

    /// Parses `abbrev expansion` pairs, one per line, blank lines ignored.
    ///
    /// An expansion that is itself a key would break idempotence, so such
    /// tables are rejected.
    pub fn parse(text: &str) -> Result<Self, AddressError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(abbrev), Some(expansion), None) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(AddressError::InvalidTable(format!(
                    "line {}: expected exactly two columns",
                    lineno + 1
                )));
            };
            entries.insert(abbrev.to_uppercase(), expansion.to_uppercase());
        }
        for expansion in entries.values() {
            if entries.contains_key(expansion) {
                return Err(AddressError::InvalidTable(format!(
                    "expansion {expansion} is itself an abbreviation key"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn expand<'a>(&'a self, token: &'a str) -> &'a str {
        self.entries.get(token).map(String::as_str).unwrap_or(token)
    }
}

impl Default for AbbreviationTable {
    fn default() -> Self {
        Self::shipped()
    }
}

/// Canonicalizes a street string: uppercase, punctuation stripped (hyphens
/// kept so unit-style tokens like `45-B` survive), whitespace collapsed,
/// suffix abbreviations expanded. Idempotent.
pub fn normalize(
    street: &str,
    zip: &str,
    table: &AbbreviationTable,
) -> Result<CanonicalAddress, AddressError> {
    if street.trim().is_empty() {
        return Err(AddressError::EmptyStreet);
    }
    let cleaned: String = street
        .to_uppercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { ' ' })
        .collect();
    let tokens: Vec<String> = cleaned
        .split_whitespace()
        .map(|t| table.expand(t).to_string())
        .collect();
    if tokens.is_empty() {
        return Err(AddressError::EmptyStreet);
    }
    Ok(CanonicalAddress {
        tokens,
        zip: zip.to_string(),
    })
}

/// Levenshtein distance over token sequences (tokens compared atomically).
pub fn token_edit_distance(a: &[String], b: &[String]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ta != tb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Picks the suggestion that best matches the input address.
///
/// Only suggestions whose zip equals the input zip are considered; among
/// those, the index minimizing token-level edit distance between normalized
/// forms wins, ties broken by lowest index. `None` when no suggestion passes
/// the zip filter.
pub fn match_suggestion(
    input: &Address,
    suggestions: &[String],
    suggestion_zips: &[String],
    table: &AbbreviationTable,
) -> Option<usize> {
    debug_assert_eq!(suggestions.len(), suggestion_zips.len());
    let target = normalize(&input.street, &input.zip, table).ok()?;
    let mut best: Option<(usize, usize)> = None; // (distance, index)
    for (idx, (text, zip)) in suggestions.iter().zip(suggestion_zips).enumerate() {
        if *zip != input.zip {
            continue;
        }
        let Ok(candidate) = normalize(text, zip, table) else {
            continue;
        };
        let dist = token_edit_distance(&target.tokens, &candidate.tokens);
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, idx));
        }
    }
    best.map(|(_, idx)| idx)
}

/// Keyed digest of the normalized full address, for privacy-preserving
/// dataset release. Identical addresses map to identical ids under the same
/// salt; the id reveals no address bytes.
pub fn hash_address(address: &Address, salt: &[u8]) -> Result<String, AddressError> {
    if salt.len() < 16 {
        return Err(AddressError::WeakSalt(salt.len()));
    }
    let table = AbbreviationTable::shipped();
    let canonical = normalize(&address.street, &address.zip, &table)?;
    let mut mac = Hmac::<Sha256>::new_from_slice(salt)
        .map_err(|e| AddressError::InvalidAddress(e.to_string()))?;
    mac.update(canonical.joined().as_bytes());
    mac.update(b"|");
    mac.update(address.unit.as_deref().unwrap_or("").as_bytes());
    mac.update(b"|");
    mac.update(address.city.to_uppercase().as_bytes());
    mac.update(b"|");
    mac.update(address.state.as_bytes());
    mac.update(b"|");
    mac.update(address.zip.as_bytes());
    Ok(hex::encode(mac.finalize().into_bytes()))
}
