//! Identifier handling.
//!
//! Identifiers are case-insensitive and treat `-` and `_` as the same
//! character: model output freely mixes `MOVE_TO`, `move-to` and `Move_To`.
//! Every identifier is stored in canonical form (lowercase, underscores) so
//! that equality, ordering and hashing agree with that equivalence.

use serde::{Deserialize, Serialize};
use std::fmt;

/// The reserved danger counter name. Bundles may not declare it; only the
/// compiler writes to it.
pub const RESERVED_DANGER: &str = "danger";

/// A canonicalized symbol name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ident(String);

impl Ident {
    pub fn new(raw: &str) -> Ident {
        Ident(canonicalize(raw))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_reserved(&self) -> bool {
        self.0 == RESERVED_DANGER
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for Ident {
    fn from(raw: &str) -> Ident {
        Ident::new(raw)
    }
}

fn canonicalize(raw: &str) -> String {
    raw.trim()
        .chars()
        .map(|c| match c {
            '-' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

/// True when `raw` is a well-formed name: a letter or underscore followed by
/// letters, digits, `_` or `-`. Used when names arrive from JSON rather than
/// the tokenizer.
pub fn is_valid_name(raw: &str) -> bool {
    let mut chars = raw.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms_agree() {
        assert_eq!(Ident::new("MOVE_TO"), Ident::new("move-to"));
        assert_eq!(Ident::new("Move-To").as_str(), "move_to");
    }

    #[test]
    fn reserved_name_detected_in_any_spelling() {
        assert!(Ident::new("DANGER").is_reserved());
        assert!(Ident::new("danger").is_reserved());
        assert!(!Ident::new("dangerous").is_reserved());
    }

    #[test]
    fn name_validity() {
        assert!(is_valid_name("place_on"));
        assert!(is_valid_name("place-on"));
        assert!(!is_valid_name("2fast"));
        assert!(!is_valid_name(""));
        assert!(!is_valid_name("a b"));
    }
}
