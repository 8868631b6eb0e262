use std::fmt;

use serde::{Deserialize, Serialize};

use super::Platform;
use crate::verspec::{MatchSpec, Version};

/// Extension of every package archive.
pub const ARCHIVE_EXTENSION: &str = ".tar";

/// One installable binary build of a package.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PackageRecord {
    pub name: String,
    pub version: Version,
    pub build: String,
    pub build_number: u64,
    pub depends: Vec<MatchSpec>,
    pub channel: String,
    #[serde(rename = "subdir")]
    pub platform: Platform,
    pub filename: String,
    pub sha256: String,
}

impl PackageRecord {
    pub fn expected_filename(name: &str, version: &str, build: &str) -> String {
        format!("{name}-{version}-{build}{ARCHIVE_EXTENSION}")
    }

    /// `name=version=build`, the fully pinned match-spec text.
    pub fn pin(&self) -> String {
        format!("{}={}={}", self.name, self.version, self.build)
    }

    pub fn pin_spec(&self) -> MatchSpec {
        MatchSpec::pinned(&self.name, &self.version, &self.build)
    }

    /// Identity used by transactions: name, version and build.
    pub fn key(&self) -> (String, String, String) {
        (self.name.clone(), self.version.to_string(), self.build.clone())
    }

    pub fn is_noarch(&self) -> bool {
        self.platform == Platform::NoArch
    }

    /// Relative location of the archive inside its channel.
    pub fn archive_path(&self) -> String {
        format!("{}/{}", self.platform, self.filename)
    }
}

impl fmt::Display for PackageRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}::{}-{}-{}",
            self.channel, self.name, self.version, self.build
        )
    }
}

/// A host capability such as `__glibc`; matched against, never installed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VirtualPackage {
    pub name: String,
    pub version: Version,
    pub build: String,
}

impl VirtualPackage {
    pub fn new(name: &str, version: Version) -> Self {
        VirtualPackage {
            name: name.to_string(),
            version,
            build: "0".to_string(),
        }
    }
}

impl fmt::Display for VirtualPackage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}={}", self.name, self.version, self.build)
    }
}

/// Anything a match-spec can be tested against.
pub trait Matchable {
    fn match_name(&self) -> &str;
    fn match_version(&self) -> &Version;
    fn match_build(&self) -> &str;
    fn match_channel(&self) -> Option<&str>;
}

impl Matchable for PackageRecord {
    fn match_name(&self) -> &str {
        &self.name
    }
    fn match_version(&self) -> &Version {
        &self.version
    }
    fn match_build(&self) -> &str {
        &self.build
    }
    fn match_channel(&self) -> Option<&str> {
        Some(&self.channel)
    }
}

impl Matchable for VirtualPackage {
    fn match_name(&self) -> &str {
        &self.name
    }
    fn match_version(&self) -> &Version {
        &self.version
    }
    fn match_build(&self) -> &str {
        &self.build
    }
    fn match_channel(&self) -> Option<&str> {
        None
    }
}

/// True iff name, version constraint, build matcher and channel restriction
/// all hold for `target`.
pub fn spec_matches<T: Matchable + ?Sized>(spec: &MatchSpec, target: &T) -> bool {
    spec.matches_parts(
        target.match_name(),
        target.match_version(),
        target.match_build(),
        target.match_channel(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(name: &str, version: &str, build: &str) -> PackageRecord {
        PackageRecord {
            name: name.into(),
            version: Version::parse(version).unwrap(),
            build: build.into(),
            build_number: 0,
            depends: vec![],
            channel: "conda-forge".into(),
            platform: Platform::Linux64,
            filename: PackageRecord::expected_filename(name, version, build),
            sha256: String::new(),
        }
    }

    #[test]
    fn prefix_spec_matches_patch_release() {
        let spec = MatchSpec::parse("python=3.8").unwrap();
        assert!(spec_matches(
            &spec,
            &record("python", "3.8.8", "hffdb5ce_0_cpython")
        ));
        assert!(!spec_matches(&spec, &record("python", "3.9.1", "h0")));
    }

    #[test]
    fn channel_restriction_never_matches_virtual() {
        let spec = MatchSpec::parse("conda-forge::__glibc").unwrap();
        let vp = VirtualPackage::new("__glibc", Version::parse("2.17").unwrap());
        assert!(!spec_matches(&spec, &vp));
        assert!(spec_matches(&MatchSpec::parse("__glibc>=2.12").unwrap(), &vp));
    }

    #[test]
    fn pin_round_trips_through_matchspec() {
        let r = record("python", "3.8.8", "hffdb5ce_0_cpython");
        assert_eq!(r.pin(), "python=3.8.8=hffdb5ce_0_cpython");
        assert_eq!(r.pin_spec().to_string(), r.pin());
        assert!(spec_matches(&r.pin_spec(), &r));
    }
}
