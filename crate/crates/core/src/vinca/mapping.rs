//! rosdep-style key mapping: `[platform]` sections of `key: [spec, spec]`.

use std::collections::BTreeMap;

use super::VincaError;
use crate::channels::Platform;
use crate::verspec::MatchSpec;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DependencyMapping {
    pub platforms: BTreeMap<Platform, BTreeMap<String, Vec<MatchSpec>>>,
}

/// Splits a list body on commas that start a new spec. A comma followed by
/// an operator or digit continues the previous spec's constraint
/// (`a >=1,<2`).
fn split_specs(body: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for piece in body.split(',') {
        let starts_spec = piece
            .trim_start()
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_lowercase() || c == '_');
        match out.last_mut() {
            Some(prev) if !starts_spec => {
                prev.push(',');
                prev.push_str(piece.trim_start());
            }
            _ => out.push(piece.trim().to_string()),
        }
    }
    out.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl DependencyMapping {
    pub fn parse(text: &str) -> Result<Self, VincaError> {
        let mut mapping = DependencyMapping::default();
        let mut current: Option<Platform> = None;
        for (n, raw) in text.lines().enumerate() {
            let err = |reason: String| VincaError::MalformedMapping { line: n + 1, reason };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(section) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let platform: Platform = section
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("unknown platform `{section}`")))?;
                mapping.platforms.entry(platform).or_default();
                current = Some(platform);
                continue;
            }
            let platform = current.ok_or_else(|| err("entry before any [platform] section".into()))?;
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err(format!("expected `key: [specs]`, found `{line}`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            let body = value
                .trim()
                .strip_prefix('[')
                .and_then(|v| v.strip_suffix(']'))
                .ok_or_else(|| err(format!("value of `{key}` is not a [list]")))?;
            let specs = split_specs(body)
                .iter()
                .map(|s| MatchSpec::parse(s).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let section = mapping.platforms.get_mut(&platform).expect("section exists");
            if section.insert(key.to_string(), specs).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }
        Ok(mapping)
    }

    /// Specs for `key` on `platform`; `None` when the key is not mapped.
    pub fn lookup(&self, key: &str, platform: Platform) -> Option<&[MatchSpec]> {
        self.platforms.get(&platform)?.get(key).map(Vec::as_slice)
    }
}
