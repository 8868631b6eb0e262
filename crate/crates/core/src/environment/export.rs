//! The environment document: `name:`, `channels:` and `dependencies:`.

use std::fmt;

use super::EnvironmentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportMode {
    /// `name=version=build`
    Full,
    /// `name=version`
    NoBuilds,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnvironmentDocument {
    pub name: String,
    pub channels: Vec<String>,
    pub dependencies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct DocumentError {
    pub line: usize,
    pub reason: String,
}

/// Writes `key:` followed by `  - item` lines, or `key: []` when empty.
pub(crate) fn write_list(f: &mut impl fmt::Write, key: &str, items: &[String]) -> fmt::Result {
    if items.is_empty() {
        writeln!(f, "{key}: []")
    } else {
        writeln!(f, "{key}:")?;
        for i in items {
            writeln!(f, "  - {i}")?;
        }
        Ok(())
    }
}

impl fmt::Display for EnvironmentDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name: {}", self.name)?;
        write_list(f, "channels", &self.channels)?;
        write_list(f, "dependencies", &self.dependencies)
    }
}

/// Parsed form of the simple `key: value` / `key:` + `  - item` documents
/// shared by environment and spec files.
pub(crate) struct KeyedLists {
    pub scalars: Vec<(String, String)>,
    pub lists: Vec<(String, Vec<String>)>,
}

pub(crate) fn parse_keyed_lists(text: &str, known: &[&str]) -> Result<KeyedLists, DocumentError> {
    let mut out = KeyedLists {
        scalars: Vec::new(),
        lists: Vec::new(),
    };
    let mut open_list: Option<usize> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |reason: String| DocumentError {
            line: line_no,
            reason,
        };
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if let Some(item) = line.trim_start().strip_prefix("- ") {
            if !line.starts_with(' ') {
                return Err(err("list items must be indented".into()));
            }
            let li = open_list.ok_or_else(|| err("list item outside a list".into()))?;
            out.lists[li].1.push(item.trim().to_string());
            continue;
        }
        if line.starts_with(' ') {
            return Err(err(format!("unexpected indented line `{}`", line.trim())));
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| err(format!("expected `key: value`, found `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        if !known.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if out.scalars.iter().any(|(k, _)| k == key) || out.lists.iter().any(|(k, _)| k == key) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        open_list = None;
        if value.is_empty() {
            out.lists.push((key.to_string(), Vec::new()));
            open_list = Some(out.lists.len() - 1);
        } else if value == "[]" {
            out.lists.push((key.to_string(), Vec::new()));
        } else {
            out.scalars.push((key.to_string(), value.to_string()));
        }
    }
    Ok(out)
}

impl KeyedLists {
    pub fn scalar(&self, key: &str) -> Option<&str> {
        self.scalars
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn list(&self, key: &str) -> Option<&[String]> {
        self.lists
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
    }
}

impl EnvironmentDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let doc = parse_keyed_lists(text, &["name", "channels", "dependencies"])?;
        let missing = |what: &str| DocumentError {
            line: 0,
            reason: format!("missing `{what}`"),
        };
        Ok(EnvironmentDocument {
            name: doc.scalar("name").ok_or_else(|| missing("name"))?.to_string(),
            channels: doc.list("channels").unwrap_or_default().to_vec(),
            dependencies: doc
                .list("dependencies")
                .ok_or_else(|| missing("dependencies"))?
                .to_vec(),
        })
    }
}

/// Describes an environment: its channels in priority order and one pin
/// per installed package, sorted by name.
pub fn export_environment(state: &EnvironmentState, mode: ExportMode) -> EnvironmentDocument {
    let name = state
        .prefix
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dependencies = state
        .installed
        .iter()
        .map(|p| match mode {
            ExportMode::Full => format!("{}={}={}", p.name, p.version, p.build),
            ExportMode::NoBuilds => format!("{}={}", p.name, p.version),
        })
        .collect();
    EnvironmentDocument {
        name,
        channels: state.channels.iter().map(|c| c.source.clone()).collect(),
        dependencies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_round_trips() {
        let doc = EnvironmentDocument {
            name: "rosenv".into(),
            channels: vec!["robostack".into(), "conda-forge".into()],
            dependencies: vec!["python=3.8.8=hffdb5ce_0_cpython".into()],
        };
        let text = doc.to_string();
        assert_eq!(
            text,
            "name: rosenv\nchannels:\n  - robostack\n  - conda-forge\ndependencies:\n  - python=3.8.8=hffdb5ce_0_cpython\n"
        );
        assert_eq!(EnvironmentDocument::parse(&text).unwrap(), doc);
    }

    #[test]
    fn empty_lists() {
        let doc = EnvironmentDocument {
            name: "e".into(),
            ..Default::default()
        };
        assert_eq!(doc.to_string(), "name: e\nchannels: []\ndependencies: []\n");
        assert_eq!(EnvironmentDocument::parse(&doc.to_string()).unwrap(), doc);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(EnvironmentDocument::parse("dependencies: []\n").is_err());
        assert!(EnvironmentDocument::parse("name: a\nfoo: b\ndependencies: []\n").is_err());
        assert!(EnvironmentDocument::parse("name: a\n- x\ndependencies: []\n").is_err());
        let e = EnvironmentDocument::parse("name: a\ndependencies:\nname: b\n").unwrap_err();
        assert_eq!(e.line, 3);
    }
}
