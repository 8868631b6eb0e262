//! Versions, version constraints and match-specs.
//!
//! The match-spec text form is the wire format shared by the CLI, recipes,
//! environment documents and lockfiles.

mod constraint;
mod glob;
mod matchspec;
mod version;

use thiserror::Error;

pub use constraint::{Atom, VersionConstraint};
pub use glob::glob_match;
pub use matchspec::{is_name_char, BuildMatcher, MatchSpec};
pub use version::{Component, Segment, Version};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerspecError {
    #[error("malformed version `{text}`: {reason}")]
    MalformedVersion { text: String, reason: String },
    #[error("malformed match-spec `{text}`: {reason}")]
    MalformedSpec { text: String, reason: String },
}

pub fn parse_version(text: &str) -> Result<Version, VerspecError> {
    Version::parse(text)
}

pub fn parse_matchspec(text: &str) -> Result<MatchSpec, VerspecError> {
    MatchSpec::parse(text)
}
