//! Package archives: an uncompressed tar holding `info/index.json`,
//! `info/paths.json` and the payload files.

use std::collections::BTreeMap;
use std::io::Read;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{PackageRecord, Platform};

pub const INDEX_JSON: &str = "info/index.json";
pub const PATHS_JSON: &str = "info/paths.json";

/// Length of the build-time prefix embedded in relocatable files.
pub const PLACEHOLDER_LEN: usize = 255;

/// The build-time prefix: `/opt/placeholder_prefix` padded to
/// [`PLACEHOLDER_LEN`] bytes so any real prefix up to that length fits.
pub static PLACEHOLDER: LazyLock<String> = LazyLock::new(|| {
    let mut p = String::from("/opt/placeholder_prefix");
    while p.len() < PLACEHOLDER_LEN {
        p.push_str("_placehold");
    }
    p.truncate(PLACEHOLDER_LEN);
    p
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMode {
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEntry {
    pub path: String,
    pub mode: PathMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix_placeholder: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathsJson {
    pub paths: Vec<PathEntry>,
}

/// The record as stored inside its own archive. The digest is absent since
/// it covers the archive itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveIndex {
    pub name: String,
    pub version: String,
    pub build: String,
    pub build_number: u64,
    #[serde(default)]
    pub depends: Vec<String>,
    pub subdir: Platform,
}

impl ArchiveIndex {
    pub fn from_record(record: &PackageRecord) -> Self {
        ArchiveIndex {
            name: record.name.clone(),
            version: record.version.to_string(),
            build: record.build.clone(),
            build_number: record.build_number,
            depends: record.depends.iter().map(|d| d.to_string()).collect(),
            subdir: record.platform,
        }
    }

    pub fn matches(&self, record: &PackageRecord) -> bool {
        self.name == record.name
            && self.version == record.version.to_string()
            && self.build == record.build
            && self.subdir == record.platform
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageArchive {
    pub index: ArchiveIndex,
    pub paths: Vec<PathEntry>,
    /// Payload contents keyed by relative path.
    pub files: BTreeMap<String, Vec<u8>>,
}

/// Payload paths must be relative, `/`-separated and free of `.`/`..`.
pub fn is_safe_relative_path(path: &str) -> bool {
    !path.is_empty()
        && !path.starts_with('/')
        && !path.contains('\\')
        && path.split('/').all(|c| !c.is_empty() && c != "." && c != "..")
}

impl PackageArchive {
    pub fn new(index: ArchiveIndex) -> Self {
        PackageArchive {
            index,
            paths: Vec::new(),
            files: BTreeMap::new(),
        }
    }

    /// Adds a payload file; `relocatable` marks it as carrying
    /// [`PLACEHOLDER`].
    pub fn add_file(&mut self, path: &str, mode: PathMode, relocatable: bool, contents: Vec<u8>) {
        self.paths.retain(|p| p.path != path);
        self.paths.push(PathEntry {
            path: path.to_string(),
            mode,
            prefix_placeholder: relocatable.then(|| PLACEHOLDER.clone()),
        });
        self.paths.sort_by(|a, b| a.path.cmp(&b.path));
        self.files.insert(path.to_string(), contents);
    }

    /// Serializes to tar bytes. Headers carry no timestamps or owners, so
    /// equal archives give equal bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut builder = tar::Builder::new(Vec::new());
        let mut append = |path: &str, data: &[u8]| {
            let mut header = tar::Header::new_ustar();
            header.set_size(data.len() as u64);
            header.set_mode(0o644);
            header.set_mtime(0);
            header.set_uid(0);
            header.set_gid(0);
            builder
                .append_data(&mut header, path, data)
                .expect("writing to memory cannot fail");
        };
        let index = serde_json::to_vec_pretty(&self.index).expect("index serializes");
        let paths = serde_json::to_vec_pretty(&PathsJson {
            paths: self.paths.clone(),
        })
        .expect("paths serialize");
        append(INDEX_JSON, &index);
        append(PATHS_JSON, &paths);
        for entry in &self.paths {
            append(&entry.path, &self.files[&entry.path]);
        }
        builder.into_inner().expect("writing to memory cannot fail")
    }

    /// Parses and validates archive bytes: both info documents present,
    /// every payload file listed in paths.json and vice versa.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        let mut archive = tar::Archive::new(bytes);
        let mut index = None;
        let mut paths = None;
        let mut files = BTreeMap::new();
        for entry in archive.entries().map_err(|e| e.to_string())? {
            let mut entry = entry.map_err(|e| e.to_string())?;
            if !entry.header().entry_type().is_file() {
                continue;
            }
            let path = entry
                .path()
                .map_err(|e| e.to_string())?
                .to_str()
                .ok_or("non UTF-8 path")?
                .to_string();
            let mut data = Vec::new();
            entry.read_to_end(&mut data).map_err(|e| e.to_string())?;
            match path.as_str() {
                INDEX_JSON => {
                    index = Some(
                        serde_json::from_slice::<ArchiveIndex>(&data)
                            .map_err(|e| format!("{INDEX_JSON}: {e}"))?,
                    )
                }
                PATHS_JSON => {
                    paths = Some(
                        serde_json::from_slice::<PathsJson>(&data)
                            .map_err(|e| format!("{PATHS_JSON}: {e}"))?,
                    )
                }
                _ => {
                    if !is_safe_relative_path(&path) {
                        return Err(format!("unsafe payload path `{path}`"));
                    }
                    files.insert(path, data);
                }
            }
        }
        let index = index.ok_or_else(|| format!("missing {INDEX_JSON}"))?;
        let paths = paths.ok_or_else(|| format!("missing {PATHS_JSON}"))?.paths;
        for p in &paths {
            if !files.contains_key(&p.path) {
                return Err(format!("`{}` listed in {PATHS_JSON} but absent", p.path));
            }
        }
        for f in files.keys() {
            if !paths.iter().any(|p| &p.path == f) {
                return Err(format!("payload file `{f}` missing from {PATHS_JSON}"));
            }
        }
        Ok(PackageArchive { index, paths, files })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PackageArchive {
        let mut a = PackageArchive::new(ArchiveIndex {
            name: "a".into(),
            version: "1.0".into(),
            build: "h0".into(),
            build_number: 0,
            depends: vec!["b >=1".into()],
            subdir: Platform::Linux64,
        });
        a.add_file(
            "etc/a.conf",
            PathMode::Text,
            true,
            format!("root={}\n", *PLACEHOLDER).into_bytes(),
        );
        a.add_file("bin/a", PathMode::Binary, false, vec![0, 1, 2]);
        a
    }

    #[test]
    fn placeholder_has_fixed_length() {
        assert_eq!(PLACEHOLDER.len(), PLACEHOLDER_LEN);
        assert!(PLACEHOLDER.starts_with("/opt/placeholder_prefix"));
    }

    #[test]
    fn bytes_round_trip_and_are_deterministic() {
        let a = sample();
        let bytes = a.to_bytes();
        assert_eq!(bytes, sample().to_bytes());
        assert_eq!(PackageArchive::from_bytes(&bytes).unwrap(), a);
    }

    #[test]
    fn rejects_unlisted_payload_and_unsafe_paths() {
        let mut a = sample();
        a.files.insert("extra".into(), vec![]);
        assert!(PackageArchive::from_bytes(&a.to_bytes_unchecked()).is_err());
        assert!(!is_safe_relative_path("../x"));
        assert!(!is_safe_relative_path("/abs"));
        assert!(!is_safe_relative_path("a//b"));
        assert!(is_safe_relative_path("lib/x.so"));
    }

    impl PackageArchive {
        /// Writes every file, listed or not.
        fn to_bytes_unchecked(&self) -> Vec<u8> {
            let mut builder = tar::Builder::new(Vec::new());
            let paths = serde_json::to_vec(&PathsJson {
                paths: self.paths.clone(),
            })
            .unwrap();
            let index = serde_json::to_vec(&self.index).unwrap();
            let files = [(INDEX_JSON.to_string(), index), (PATHS_JSON.to_string(), paths)]
                .into_iter()
                .chain(self.files.clone());
            for (p, d) in files {
                let mut h = tar::Header::new_ustar();
                h.set_size(d.len() as u64);
                h.set_mode(0o644);
                builder.append_data(&mut h, p, d.as_slice()).unwrap();
            }
            builder.into_inner().unwrap()
        }
    }
}
