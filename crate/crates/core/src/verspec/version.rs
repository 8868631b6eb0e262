use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::VerspecError;

/// One component of a version segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Component {
    Number(u64),
    Token(String),
}

impl Component {
    fn is_zero(&self) -> bool {
        matches!(self, Component::Number(0))
    }

    fn cmp_component(&self, other: &Component) -> Ordering {
        use Component::*;
        match (self, other) {
            (Number(a), Number(b)) => a.cmp(b),
            (Token(a), Token(b)) => match (a.as_str(), b.as_str()) {
                ("dev", "dev") => Ordering::Equal,
                ("dev", _) => Ordering::Less,
                (_, "dev") => Ordering::Greater,
                _ => a.cmp(b),
            },
            (Number(_), Token(_)) => Ordering::Greater,
            (Token(_), Number(_)) => Ordering::Less,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Number(n) => write!(f, "{n}"),
            Component::Token(t) => f.write_str(t),
        }
    }
}

pub type Segment = Vec<Component>;

/// A package version: `[epoch!]segments[+local]`.
///
/// Segments are separated by `.`, `_` or `-` and further split on
/// alpha/numeric boundaries. Equality and hashing follow the ordering, so
/// `1.0` and `1.0.0` are the same version.
#[derive(Debug, Clone)]
pub struct Version {
    epoch: u64,
    segments: Vec<Segment>,
    local: Vec<Segment>,
}

impl Version {
    pub fn parse(text: &str) -> Result<Self, VerspecError> {
        let malformed = |reason: &str| VerspecError::MalformedVersion {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if text.is_empty() {
            return Err(malformed("empty version"));
        }

        let (epoch, rest) = match text.split_once('!') {
            Some((e, rest)) => {
                if e.is_empty() || !e.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(malformed("epoch must be a non-negative integer"));
                }
                let epoch = e.parse::<u64>().map_err(|_| malformed("epoch out of range"))?;
                (epoch, rest)
            }
            None => (0, text),
        };
        let (main, local) = match rest.split_once('+') {
            Some((m, l)) => (m, Some(l)),
            None => (rest, None),
        };

        let segments = parse_segments(main).map_err(&malformed)?;
        let local = match local {
            Some(l) => parse_segments(l).map_err(malformed)?,
            None => Vec::new(),
        };
        Ok(Version {
            epoch,
            segments,
            local,
        })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn local(&self) -> &[Segment] {
        &self.local
    }

    /// True when `prefix`'s segments are a leading run of `self`'s segments.
    /// The last prefix segment may be a component-prefix of the matching
    /// segment only if equal; `3.8` matches `3.8.8` but not `3.80`.
    pub fn starts_with(&self, prefix: &Version) -> bool {
        if self.epoch != prefix.epoch {
            return false;
        }
        if !prefix.local.is_empty() {
            return self.cmp(prefix) == Ordering::Equal;
        }
        let padded_len = prefix.segments.len();
        (0..padded_len).all(|i| {
            let empty = Vec::new();
            let ours = self.segments.get(i).unwrap_or(&empty);
            cmp_segment(ours, &prefix.segments[i]) == Ordering::Equal
        })
    }

    fn normalized(&self) -> (u64, Vec<Vec<&Component>>, Vec<Vec<&Component>>) {
        fn norm(segments: &[Segment]) -> Vec<Vec<&Component>> {
            let mut out: Vec<Vec<&Component>> = segments
                .iter()
                .map(|seg| {
                    let mut comps: Vec<&Component> = seg.iter().collect();
                    while comps.last().is_some_and(|c| c.is_zero()) {
                        comps.pop();
                    }
                    comps
                })
                .collect();
            while out.last().is_some_and(|s| s.is_empty()) {
                out.pop();
            }
            out
        }
        (self.epoch, norm(&self.segments), norm(&self.local))
    }
}

fn parse_segments(text: &str) -> Result<Vec<Segment>, &'static str> {
    if text.is_empty() {
        return Err("empty segment");
    }
    let mut segments = Vec::new();
    for raw in text.split(['.', '_', '-']) {
        if raw.is_empty() {
            return Err("empty segment");
        }
        let mut comps = Vec::new();
        let bytes = raw.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let start = i;
            if bytes[i].is_ascii_digit() {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = raw[start..i]
                    .parse::<u64>()
                    .map_err(|_| "numeric component out of range")?;
                comps.push(Component::Number(n));
            } else if bytes[i].is_ascii_lowercase() {
                while i < bytes.len() && bytes[i].is_ascii_lowercase() {
                    i += 1;
                }
                comps.push(Component::Token(raw[start..i].to_string()));
            } else {
                return Err("illegal character");
            }
        }
        segments.push(comps);
    }
    Ok(segments)
}

fn cmp_segment(a: &[Component], b: &[Component]) -> Ordering {
    let zero = Component::Number(0);
    let len = a.len().max(b.len());
    for i in 0..len {
        let x = a.get(i).unwrap_or(&zero);
        let y = b.get(i).unwrap_or(&zero);
        match x.cmp_component(y) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    Ordering::Equal
}

fn cmp_segments(a: &[Segment], b: &[Segment]) -> Ordering {
    let empty: Segment = Vec::new();
    let len = a.len().max(b.len());
    for i in 0..len {
        let x = a.get(i).unwrap_or(&empty);
        let y = b.get(i).unwrap_or(&empty);
        match cmp_segment(x, y) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    Ordering::Equal
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        self.epoch
            .cmp(&other.epoch)
            .then_with(|| cmp_segments(&self.segments, &other.segments))
            .then_with(|| cmp_segments(&self.local, &other.local))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl Hash for Version {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized().hash(state);
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_segments(f: &mut fmt::Formatter<'_>, segments: &[Segment]) -> fmt::Result {
            for (i, seg) in segments.iter().enumerate() {
                if i > 0 {
                    f.write_str(".")?;
                }
                for comp in seg {
                    write!(f, "{comp}")?;
                }
            }
            Ok(())
        }
        if self.epoch != 0 {
            write!(f, "{}!", self.epoch)?;
        }
        write_segments(f, &self.segments)?;
        if !self.local.is_empty() {
            f.write_str("+")?;
            write_segments(f, &self.local)?;
        }
        Ok(())
    }
}

impl FromStr for Version {
    type Err = VerspecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Version::parse(s)
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Version::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(s: &str) -> Version {
        Version::parse(s).unwrap()
    }

    #[test]
    fn parses_plain_version() {
        let ver = v("3.8.8");
        assert_eq!(ver.epoch(), 0);
        assert_eq!(
            ver.segments(),
            &[
                vec![Component::Number(3)],
                vec![Component::Number(8)],
                vec![Component::Number(8)]
            ]
        );
        assert_eq!(v("0").segments(), &[vec![Component::Number(0)]]);
    }

    #[test]
    fn parses_epoch_and_alpha_split() {
        let ver = v("1!2.0rc1");
        assert_eq!(ver.epoch(), 1);
        assert_eq!(
            ver.segments(),
            &[
                vec![Component::Number(2)],
                vec![
                    Component::Number(0),
                    Component::Token("rc".into()),
                    Component::Number(1)
                ]
            ]
        );
        assert_eq!(ver.to_string(), "1!2.0rc1");
    }

    #[test]
    fn local_part_is_split_off() {
        let ver = v("1.2+abc.3");
        assert_eq!(ver.local().len(), 2);
        assert!(v("1.2+1") > v("1.2"));
        assert!(v("1.2+abc") < v("1.2"));
        assert!(v("1.2+1") < v("1.3"));
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "", "1..2", "1.", ".1", "1.2$", "-1!2", "x!1", "1!", "1.2+", "1.A", "1 2",
        ] {
            assert!(Version::parse(bad).is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn ordering_examples() {
        assert_eq!(v("3.8").cmp(&v("3.9")), Ordering::Less);
        assert_eq!(v("1.0").cmp(&v("1.0.0")), Ordering::Equal);
        assert_eq!(v("2.0rc1").cmp(&v("2.0")), Ordering::Less);
        assert_eq!(v("1.0dev").cmp(&v("1.0a")), Ordering::Less);
        assert_eq!(v("1.0dev").cmp(&v("1.0")), Ordering::Less);
        assert_eq!(v("1!0.1").cmp(&v("9.9")), Ordering::Greater);
        assert_eq!(v("1.10").cmp(&v("1.9")), Ordering::Greater);
    }

    #[test]
    fn separators_are_equivalent() {
        assert_eq!(v("1_2-3"), v("1.2.3"));
        assert_eq!(v("1_2-3").to_string(), "1.2.3");
    }

    #[test]
    fn prefix_match_is_segment_wise() {
        assert!(v("3.8.8").starts_with(&v("3.8")));
        assert!(v("3.8").starts_with(&v("3.8")));
        assert!(!v("3.80").starts_with(&v("3.8")));
        assert!(!v("3.9.1").starts_with(&v("3.8")));
    }

    fn version_strategy() -> impl Strategy<Value = String> {
        let component = prop_oneof![
            (0u64..12).prop_map(|n| n.to_string()),
            prop_oneof![Just("a"), Just("b"), Just("rc"), Just("dev"), Just("post")].prop_map(str::to_string),
        ];
        let segment = prop::collection::vec(component, 1..3).prop_map(|c| c.concat());
        (
            prop::option::of(0u64..3),
            prop::collection::vec(segment, 1..4),
            prop::option::of(0u64..3),
        )
            .prop_map(|(epoch, segs, local)| {
                let mut s = String::new();
                if let Some(e) = epoch {
                    s.push_str(&format!("{e}!"));
                }
                s.push_str(&segs.join("."));
                if let Some(l) = local {
                    s.push_str(&format!("+{l}"));
                }
                s
            })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(s in version_strategy()) {
            let parsed = v(&s);
            let rendered = parsed.to_string();
            let reparsed = v(&rendered);
            prop_assert_eq!(&parsed, &reparsed);
            prop_assert_eq!(rendered, reparsed.to_string());
        }

        #[test]
        fn ordering_is_total(a in version_strategy(), b in version_strategy(), c in version_strategy()) {
            let (a, b, c) = (v(&a), v(&b), v(&c));
            prop_assert_eq!(a.cmp(&a), Ordering::Equal);
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
            if a == b {
                use std::collections::hash_map::DefaultHasher;
                let hash = |x: &Version| { let mut h = DefaultHasher::new(); x.hash(&mut h); h.finish() };
                prop_assert_eq!(hash(&a), hash(&b));
            }
        }
    }
}
