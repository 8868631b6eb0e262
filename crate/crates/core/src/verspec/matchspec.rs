use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::constraint::{Atom, VersionConstraint};
use super::glob::glob_match;
use super::{Version, VerspecError};

/// Build-string selector of a match-spec.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BuildMatcher {
    Exact(String),
    Glob(String),
}

impl BuildMatcher {
    fn parse(text: &str, whole: &str) -> Result<Self, VerspecError> {
        if text.is_empty()
            || !text
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "_.+-*".contains(c))
        {
            return Err(malformed(whole, "illegal build string"));
        }
        Ok(if text.contains('*') {
            BuildMatcher::Glob(text.to_string())
        } else {
            BuildMatcher::Exact(text.to_string())
        })
    }

    pub fn matches(&self, build: &str) -> bool {
        match self {
            BuildMatcher::Exact(b) => b == build,
            BuildMatcher::Glob(g) => glob_match(g, build),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            BuildMatcher::Exact(s) | BuildMatcher::Glob(s) => s,
        }
    }
}

impl fmt::Display for BuildMatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `[channel::]name[version-expression[=build]]`, or the whitespace form
/// `name version-expression [build]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchSpec {
    pub name: String,
    pub version: VersionConstraint,
    pub build: Option<BuildMatcher>,
    pub channel: Option<String>,
}

fn malformed(text: &str, reason: &str) -> VerspecError {
    VerspecError::MalformedSpec {
        text: text.to_string(),
        reason: reason.to_string(),
    }
}

pub fn is_name_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '.' || c == '_' || c == '-'
}

fn is_version_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || ".*!+_-".contains(c)
}

impl MatchSpec {
    /// A spec that only names a package.
    pub fn named(name: impl Into<String>) -> Self {
        MatchSpec {
            name: name.into(),
            version: VersionConstraint::any(),
            build: None,
            channel: None,
        }
    }

    /// Exact pin `name=version=build`.
    pub fn pinned(name: &str, version: &Version, build: &str) -> Self {
        MatchSpec {
            name: name.to_string(),
            version: VersionConstraint::from_atoms(vec![Atom::Exact(version.clone())]),
            build: Some(BuildMatcher::Exact(build.to_string())),
            channel: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, VerspecError> {
        Self::parse_inner(text).map_err(|e| match e {
            VerspecError::MalformedVersion { reason, .. } => malformed(text, &reason),
            other => other,
        })
    }

    fn parse_inner(text: &str) -> Result<Self, VerspecError> {
        let whole = text;
        let text = text.trim();
        if text.is_empty() {
            return Err(malformed(whole, "empty spec"));
        }

        let (channel, rest) = match text.split_once("::") {
            Some((ch, rest)) => {
                if ch.is_empty() || !ch.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c)) {
                    return Err(malformed(whole, "illegal channel name"));
                }
                (Some(ch.to_string()), rest)
            }
            None => (None, text),
        };

        let name_len = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
        let (name, tail) = rest.split_at(name_len);
        if name.is_empty() {
            return Err(malformed(whole, "empty name"));
        }

        let (version, build) = if tail.is_empty() {
            (VersionConstraint::any(), None)
        } else if tail.starts_with(char::is_whitespace) {
            let tokens: Vec<&str> = tail.split_whitespace().collect();
            match tokens.as_slice() {
                [expr] => (VersionConstraint::parse(expr)?, None),
                [expr, build] => (
                    VersionConstraint::parse(expr)?,
                    Some(BuildMatcher::parse(build, whole)?),
                ),
                _ => return Err(malformed(whole, "too many fields")),
            }
        } else if tail.starts_with(['=', '<', '>', '!', '~']) {
            parse_attached(tail, whole)?
        } else {
            return Err(malformed(whole, "illegal character in name"));
        };

        Ok(MatchSpec {
            name: name.to_string(),
            version,
            build,
            channel,
        })
    }

    pub fn matches_parts(&self, name: &str, version: &Version, build: &str, channel: Option<&str>) -> bool {
        self.name == name
            && self.version.matches(version)
            && self.build.as_ref().is_none_or(|b| b.matches(build))
            && self.channel.as_deref().is_none_or(|want| channel == Some(want))
    }
}

/// Parses `op version[,op version...][=build]` directly following the name.
fn parse_attached(
    tail: &str,
    whole: &str,
) -> Result<(VersionConstraint, Option<BuildMatcher>), VerspecError> {
    let mut atoms = Vec::new();
    let mut rest = tail;
    let mut single_plain_eq;
    let mut build = None;
    loop {
        let op_len = ["==", "!=", ">=", "<=", ">", "<", "="]
            .iter()
            .find(|op| rest.starts_with(*op))
            .map(|op| op.len())
            .ok_or_else(|| malformed(whole, "unknown operator"))?;
        let body_len = rest[op_len..]
            .find(|c: char| !is_version_char(c))
            .map(|i| i + op_len)
            .unwrap_or(rest.len());
        let atom_text = &rest[..body_len];
        let is_plain_eq = &rest[..op_len] == "=" && !atom_text.contains('*');
        atoms.push(Atom::parse(atom_text)?);
        single_plain_eq = atoms.len() == 1 && is_plain_eq;
        rest = &rest[body_len..];
        match rest.chars().next() {
            None => break,
            Some(',') => {
                rest = &rest[1..];
                if rest.is_empty() {
                    return Err(malformed(whole, "dangling comma"));
                }
            }
            Some('=') => {
                build = Some(BuildMatcher::parse(&rest[1..], whole)?);
                break;
            }
            Some(_) => return Err(malformed(whole, "illegal character in version")),
        }
    }
    if build.is_some() && single_plain_eq {
        if let [Atom::Prefix(v)] = atoms.as_slice() {
            atoms = vec![Atom::Exact(v.clone())];
        }
    }
    Ok((VersionConstraint::from_atoms(atoms), build))
}

impl fmt::Display for MatchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(ch) = &self.channel {
            write!(f, "{ch}::")?;
        }
        f.write_str(&self.name)?;
        match (&self.build, self.version.atoms()) {
            (None, []) => Ok(()),
            (None, _) => write!(f, "{}", self.version),
            (Some(b), []) => write!(f, "=*={b}"),
            (Some(b), [Atom::Exact(v)]) => write!(f, "={v}={b}"),
            (Some(b), [Atom::Prefix(v)]) => write!(f, "={v}.*={b}"),
            (Some(b), _) => write!(f, "{}={b}", self.version),
        }
    }
}

impl FromStr for MatchSpec {
    type Err = VerspecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MatchSpec::parse(s)
    }
}

impl Serialize for MatchSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MatchSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        MatchSpec::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(s: &str) -> MatchSpec {
        MatchSpec::parse(s).unwrap()
    }

    fn v(s: &str) -> Version {
        Version::parse(s).unwrap()
    }

    #[test]
    fn fully_pinned_spec() {
        let s = spec("python=3.8.8=hffdb5ce_0_cpython");
        assert_eq!(s.name, "python");
        assert_eq!(s.version.atoms(), &[Atom::Exact(v("3.8.8"))]);
        assert_eq!(s.build, Some(BuildMatcher::Exact("hffdb5ce_0_cpython".into())));
        assert_eq!(s.to_string(), "python=3.8.8=hffdb5ce_0_cpython");
    }

    #[test]
    fn versioned_spec_is_prefix() {
        let s = spec("python=3.8");
        assert_eq!(s.version.atoms(), &[Atom::Prefix(v("3.8"))]);
        assert!(s.build.is_none());
        assert_eq!(s.to_string(), "python=3.8");
    }

    #[test]
    fn name_only() {
        let s = spec("boost");
        assert!(s.version.is_any());
        assert!(s.build.is_none());
        assert!(s.channel.is_none());
        assert!(s.matches_parts("boost", &v("1.74"), "anything", Some("conda-forge")));
    }

    #[test]
    fn relational_and_channel() {
        let s = spec("robostack::name>=1.2,<2");
        assert_eq!(s.channel.as_deref(), Some("robostack"));
        assert_eq!(s.version.atoms().len(), 2);
        assert_eq!(s.to_string(), "robostack::name>=1.2,<2");
        assert!(s.matches_parts("name", &v("1.5"), "0", Some("robostack")));
        assert!(!s.matches_parts("name", &v("1.5"), "0", Some("conda-forge")));
    }

    #[test]
    fn whitespace_form() {
        let s = spec("python 3.8.* *_cpython");
        assert_eq!(s.version.atoms(), &[Atom::Prefix(v("3.8"))]);
        assert_eq!(s.build, Some(BuildMatcher::Glob("*_cpython".into())));
        assert_eq!(spec(&s.to_string()), s);
        let exact = spec("python 3.8.8");
        assert_eq!(exact.version.atoms(), &[Atom::Exact(v("3.8.8"))]);
        assert_eq!(spec("__glibc >=2.17"), spec("__glibc>=2.17"));
    }

    #[test]
    fn malformed_specs() {
        for bad in [
            "",
            "   ",
            "pyth on==",
            "python~=3.8",
            "python>=1,",
            "python==",
            "=1.0",
            "Python",
            "python=>3",
            "python 1 2 3",
            "::python",
            "python$",
        ] {
            assert!(MatchSpec::parse(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn spec_matching_examples() {
        let s = spec("python=3.8");
        assert!(s.matches_parts("python", &v("3.8.8"), "hffdb5ce_0_cpython", None));
        assert!(!s.matches_parts("python", &v("3.9.1"), "h0", None));
        assert!(!s.matches_parts("pythonx", &v("3.8.8"), "h0", None));
        let b = spec("python=3.8.8=hffdb5ce_0_cpython");
        assert!(!b.matches_parts("python", &v("3.8.8"), "other", None));
    }

    fn spec_strategy() -> impl Strategy<Value = String> {
        let name = "[a-z][a-z0-9_-]{0,6}";
        let ver = "[0-9]{1,2}(\\.[0-9]{1,2}){0,2}(rc[0-9])?";
        let op = prop_oneof![Just(""), Just("="), Just("=="), Just(">="), Just("<"), Just("!=")];
        let build = prop::option::of("[a-z0-9_]{1,8}\\*?");
        let channel = prop::option::of("[a-z][a-z-]{0,6}");
        (channel, name, op, ver, ver, build, any::<bool>()).prop_map(|(ch, name, op, v1, v2, build, two)| {
            let mut s = String::new();
            if let Some(ch) = ch {
                s.push_str(&format!("{ch}::"));
            }
            s.push_str(&name);
            if op.is_empty() {
                return s;
            }
            s.push_str(op);
            s.push_str(&v1);
            if two {
                s.push_str(&format!(",<{v2}"));
            }
            if let Some(b) = build {
                s.push_str(&format!("={b}"));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(text in spec_strategy()) {
            let parsed = spec(&text);
            let rendered = parsed.to_string();
            let reparsed = spec(&rendered);
            prop_assert_eq!(&parsed, &reparsed);
            prop_assert_eq!(rendered, reparsed.to_string());
        }

        #[test]
        fn prefix_semantics(x in "[0-9]{1,2}(\\.[0-9]{1,2}){0,2}", y in "[0-9]{1,2}(\\.[0-9]{1,2}){0,3}") {
            let s = spec(&format!("n={x}"));
            let (xv, yv) = (v(&x), v(&y));
            let seg_prefix = {
                let xs: Vec<u64> = x.split('.').map(|p| p.parse().unwrap()).collect();
                let ys: Vec<u64> = y.split('.').map(|p| p.parse().unwrap()).collect();
                xs.iter().enumerate().all(|(i, a)| ys.get(i).copied().unwrap_or(0) == *a)
            };
            prop_assert_eq!(s.matches_parts("n", &yv, "0", None), yv == xv || seg_prefix);
        }
    }
}
