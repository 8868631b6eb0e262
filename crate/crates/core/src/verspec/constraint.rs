use std::fmt;

use super::glob::glob_match;
use super::{Version, VerspecError};

type AtomCtor = fn(Version) -> Atom;

/// A single relational atom of a version constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Any,
    Exact(Version),
    NotEqual(Version),
    Greater(Version),
    GreaterEq(Version),
    Less(Version),
    LessEq(Version),
    /// `=X` or `X.*`: the version equals `X` or starts with its segments.
    Prefix(Version),
    /// A `*` pattern matched against the canonical version text.
    Glob(String),
}

impl Atom {
    pub fn matches(&self, v: &Version) -> bool {
        match self {
            Atom::Any => true,
            Atom::Exact(x) => v == x,
            Atom::NotEqual(x) => v != x,
            Atom::Greater(x) => v > x,
            Atom::GreaterEq(x) => v >= x,
            Atom::Less(x) => v < x,
            Atom::LessEq(x) => v <= x,
            Atom::Prefix(x) => v == x || v.starts_with(x),
            Atom::Glob(pattern) => glob_match(pattern, &v.to_string()),
        }
    }

    /// Parses one atom of a comma-joined version expression. A bare version
    /// is an exact match.
    pub fn parse(text: &str) -> Result<Atom, VerspecError> {
        let malformed = |reason: &str| VerspecError::MalformedSpec {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if text.is_empty() {
            return Err(malformed("empty version atom"));
        }
        if text == "*" {
            return Ok(Atom::Any);
        }
        let ops: [(&str, AtomCtor); 6] = [
            ("==", Atom::Exact),
            ("!=", Atom::NotEqual),
            (">=", Atom::GreaterEq),
            ("<=", Atom::LessEq),
            (">", Atom::Greater),
            ("<", Atom::Less),
        ];
        for (op, make) in ops {
            if let Some(rest) = text.strip_prefix(op) {
                if rest.contains('*') {
                    return Err(malformed("glob not allowed after a relational operator"));
                }
                check_operand(rest).map_err(&malformed)?;
                return Ok(make(Version::parse(rest)?));
            }
        }
        if let Some(rest) = text.strip_prefix('=') {
            check_operand(rest).map_err(&malformed)?;
            return prefix_or_glob(rest);
        }
        check_operand(text).map_err(malformed)?;
        if text.contains('*') {
            return prefix_or_glob(text);
        }
        Ok(Atom::Exact(Version::parse(text)?))
    }
}

fn check_operand(rest: &str) -> Result<(), &'static str> {
    match rest.chars().next() {
        None => Err("missing version after operator"),
        Some(c) if "=<>!~".contains(c) => Err("unknown operator"),
        _ => Ok(()),
    }
}

/// `X`, `X.*` and `X*` become a prefix atom, anything else with a `*` is a
/// glob over the rendered version.
fn prefix_or_glob(text: &str) -> Result<Atom, VerspecError> {
    if text == "*" {
        return Ok(Atom::Any);
    }
    let stem = text
        .strip_suffix(".*")
        .or_else(|| text.strip_suffix('*'))
        .unwrap_or(text);
    if !stem.contains('*') {
        return Ok(Atom::Prefix(Version::parse(stem)?));
    }
    if !text
        .chars()
        .all(|c| c == '*' || c == '.' || c == '!' || c == '+' || c.is_ascii_digit() || c.is_ascii_lowercase())
    {
        return Err(VerspecError::MalformedSpec {
            text: text.to_string(),
            reason: "illegal character in version glob".to_string(),
        });
    }
    Ok(Atom::Glob(text.to_string()))
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Any => f.write_str("*"),
            Atom::Exact(v) => write!(f, "=={v}"),
            Atom::NotEqual(v) => write!(f, "!={v}"),
            Atom::Greater(v) => write!(f, ">{v}"),
            Atom::GreaterEq(v) => write!(f, ">={v}"),
            Atom::Less(v) => write!(f, "<{v}"),
            Atom::LessEq(v) => write!(f, "<={v}"),
            Atom::Prefix(v) => write!(f, "={v}"),
            Atom::Glob(g) => write!(f, "={g}"),
        }
    }
}

/// A conjunction of atoms. An empty conjunction matches every version.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct VersionConstraint {
    atoms: Vec<Atom>,
}

impl VersionConstraint {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        let atoms = atoms.into_iter().filter(|a| *a != Atom::Any).collect();
        VersionConstraint { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_any(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn matches(&self, v: &Version) -> bool {
        self.atoms.iter().all(|a| a.matches(v))
    }

    /// Parses a comma-joined expression such as `>=1.2,<2`.
    pub fn parse(text: &str) -> Result<Self, VerspecError> {
        if text.is_empty() {
            return Err(VerspecError::MalformedSpec {
                text: text.to_string(),
                reason: "empty version expression".to_string(),
            });
        }
        let mut atoms = Vec::new();
        for part in text.split(',') {
            if part.is_empty() {
                return Err(VerspecError::MalformedSpec {
                    text: text.to_string(),
                    reason: "dangling comma".to_string(),
                });
            }
            atoms.push(Atom::parse(part)?);
        }
        Ok(Self::from_atoms(atoms))
    }
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("*");
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Version {
        Version::parse(s).unwrap()
    }

    #[test]
    fn any_matches_everything() {
        let any = VersionConstraint::any();
        for s in ["0", "1!2.0", "3.8.8+local", "1.0dev"] {
            assert!(any.matches(&v(s)));
        }
        assert_eq!(VersionConstraint::parse("*").unwrap(), any);
    }

    #[test]
    fn relational_conjunction() {
        let c = VersionConstraint::parse(">=1.2,<2").unwrap();
        assert!(c.matches(&v("1.2")));
        assert!(c.matches(&v("1.9.9")));
        assert!(!c.matches(&v("2.0")));
        assert!(!c.matches(&v("1.1")));
        assert_eq!(c.to_string(), ">=1.2,<2");
    }

    #[test]
    fn prefix_forms_agree() {
        let a = VersionConstraint::parse("=3.8").unwrap();
        let b = VersionConstraint::parse("3.8.*").unwrap();
        let c = VersionConstraint::parse("3.8*").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.matches(&v("3.8.8")));
        assert!(a.matches(&v("3.8")));
        assert!(!a.matches(&v("3.9.1")));
    }

    #[test]
    fn glob_in_the_middle() {
        let c = VersionConstraint::parse("1.*.3").unwrap();
        assert!(matches!(c.atoms()[0], Atom::Glob(_)));
        assert!(c.matches(&v("1.7.3")));
        assert!(!c.matches(&v("1.7.4")));
    }

    #[test]
    fn rejects_bad_expressions() {
        for bad in [
            "", ">=1,", ",<2", "~=1.2", "=>1", ">", "=<1", "==", ">=1.*", "1,,2",
        ] {
            assert!(VersionConstraint::parse(bad).is_err(), "{bad:?}");
        }
    }
}
