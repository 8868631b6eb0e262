//! Environment metadata under `<prefix>/meta/`.

use std::fmt;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::channels::{Locator, PackageRecord, Platform};
use crate::verspec::{MatchSpec, Version};

pub const META_DIR: &str = "meta";
pub const HISTORY_FILE: &str = "history";
pub const PINS_FILE: &str = "pins";
pub const REQUESTED_FILE: &str = "requested";
pub const CHANNELS_FILE: &str = "channels";
pub const LOCK_FILE: &str = "lock";
/// Holds displaced files while a transaction runs.
pub const BACKUP_DIR: &str = ".transaction";

/// A channel as configured for an environment: the text it was given as
/// (kept for export) and where it resolved to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelRef {
    pub name: String,
    pub source: String,
    pub locator: Locator,
}

impl ChannelRef {
    pub fn new(source: &str, locator: Locator) -> Self {
        ChannelRef {
            name: channel_name(source),
            source: source.to_string(),
            locator,
        }
    }
}

/// The channel name a source text stands for: its last path or URL
/// component.
pub fn channel_name(source: &str) -> String {
    source
        .trim_end_matches('/')
        .rsplit('/')
        .next()
        .unwrap_or(source)
        .to_string()
}

/// One transaction as recorded in the history file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub timestamp: String,
    pub action: String,
    /// The environment's requested specs after the transaction.
    pub request: Vec<String>,
    pub unlinked: Vec<String>,
    pub linked: Vec<String>,
}

impl fmt::Display for HistoryEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "==> {} <==", self.timestamp)?;
        writeln!(f, "# action: {}", self.action)?;
        if self.request.is_empty() {
            writeln!(f, "# request:")?;
        } else {
            writeln!(f, "# request: {}", self.request.join("; "))?;
        }
        for u in &self.unlinked {
            writeln!(f, "-{u}")?;
        }
        for l in &self.linked {
            writeln!(f, "+{l}")?;
        }
        Ok(())
    }
}

pub fn parse_history(text: &str) -> Result<Vec<HistoryEntry>, String> {
    let mut entries: Vec<HistoryEntry> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let bad = || format!("line {}: unexpected `{line}`", n + 1);
        if let Some(ts) = line.strip_prefix("==> ").and_then(|l| l.strip_suffix(" <==")) {
            entries.push(HistoryEntry {
                timestamp: ts.to_string(),
                action: String::new(),
                request: Vec::new(),
                unlinked: Vec::new(),
                linked: Vec::new(),
            });
            continue;
        }
        let entry = entries.last_mut().ok_or_else(bad)?;
        if let Some(a) = line.strip_prefix("# action: ") {
            entry.action = a.to_string();
        } else if let Some(r) = line.strip_prefix("# request:") {
            entry.request = r
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
        } else if let Some(u) = line.strip_prefix('-') {
            entry.unlinked.push(u.to_string());
        } else if let Some(l) = line.strip_prefix('+') {
            entry.linked.push(l.to_string());
        } else if !line.is_empty() {
            return Err(bad());
        }
    }
    Ok(entries)
}

/// Per-package metadata document: the record plus the files it owns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstalledPackage {
    pub name: String,
    pub version: String,
    pub build: String,
    pub build_number: u64,
    pub depends: Vec<String>,
    pub channel: String,
    pub subdir: Platform,
    pub filename: String,
    pub sha256: String,
    pub files: Vec<String>,
}

impl InstalledPackage {
    pub fn new(record: &PackageRecord, files: Vec<String>) -> Self {
        InstalledPackage {
            name: record.name.clone(),
            version: record.version.to_string(),
            build: record.build.clone(),
            build_number: record.build_number,
            depends: record.depends.iter().map(|d| d.to_string()).collect(),
            channel: record.channel.clone(),
            subdir: record.platform,
            filename: record.filename.clone(),
            sha256: record.sha256.clone(),
            files,
        }
    }

    pub fn record(&self) -> Result<PackageRecord, String> {
        Ok(PackageRecord {
            name: self.name.clone(),
            version: Version::parse(&self.version).map_err(|e| e.to_string())?,
            build: self.build.clone(),
            build_number: self.build_number,
            depends: self
                .depends
                .iter()
                .map(|d| MatchSpec::parse(d).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?,
            channel: self.channel.clone(),
            platform: self.subdir,
            filename: self.filename.clone(),
            sha256: self.sha256.clone(),
        })
    }

    /// File name of this document inside the metadata directory.
    pub fn meta_file_name(record: &PackageRecord) -> String {
        format!("{}-{}-{}.json", record.name, record.version, record.build)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("metadata serializes");
        v.push(b'\n');
        v
    }
}

/// Everything known about one environment, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvironmentState {
    pub prefix: PathBuf,
    /// Installed packages sorted by name.
    pub installed: Vec<InstalledPackage>,
    pub history: Vec<HistoryEntry>,
    pub pins: Vec<MatchSpec>,
    /// Specs the user asked for, one per name.
    pub requested: Vec<MatchSpec>,
    pub channels: Vec<ChannelRef>,
}

impl EnvironmentState {
    /// State of a prefix that has never been written to.
    pub fn empty(prefix: &Path) -> Self {
        EnvironmentState {
            prefix: prefix.to_path_buf(),
            installed: Vec::new(),
            history: Vec::new(),
            pins: Vec::new(),
            requested: Vec::new(),
            channels: Vec::new(),
        }
    }

    pub fn meta_dir(&self) -> PathBuf {
        self.prefix.join(META_DIR)
    }

    pub fn records(&self) -> Result<Vec<PackageRecord>, EnvError> {
        self.installed
            .iter()
            .map(|p| {
                p.record().map_err(|reason| EnvError::MalformedMetadata {
                    path: self
                        .meta_dir()
                        .join(format!("{}-{}-{}.json", p.name, p.version, p.build)),
                    reason,
                })
            })
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&InstalledPackage> {
        self.installed.iter().find(|p| p.name == name)
    }

    pub fn is_environment(prefix: &Path) -> bool {
        prefix.join(META_DIR).join(HISTORY_FILE).is_file()
    }

    /// Reads the metadata directory. Takes a shared lock while reading.
    pub fn load(prefix: &Path) -> Result<Self, EnvError> {
        if !Self::is_environment(prefix) {
            return Err(EnvError::NotAnEnvironment(prefix.to_path_buf()));
        }
        let _lock = PrefixLock::shared(prefix)?;
        Self::load_unlocked(prefix)
    }

    pub(crate) fn load_unlocked(prefix: &Path) -> Result<Self, EnvError> {
        let meta = prefix.join(META_DIR);
        if meta.join(BACKUP_DIR).exists() {
            return Err(EnvError::CorruptEnvironment {
                prefix: prefix.to_path_buf(),
                reason: "an interrupted transaction left a backup directory behind".into(),
            });
        }
        let malformed = |path: &Path, reason: String| EnvError::MalformedMetadata {
            path: path.to_path_buf(),
            reason,
        };
        let read = |name: &str| -> Result<String, EnvError> {
            let path = meta.join(name);
            match fs::read_to_string(&path) {
                Ok(s) => Ok(s),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
                Err(e) => Err(EnvError::io(&path, e)),
            }
        };
        let spec_lines = |name: &str| -> Result<Vec<MatchSpec>, EnvError> {
            read(name)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| MatchSpec::parse(l).map_err(|e| malformed(&meta.join(name), e.to_string())))
                .collect()
        };

        let mut installed = Vec::new();
        let entries = fs::read_dir(&meta).map_err(|e| EnvError::io(&meta, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| EnvError::io(&meta, e))?;
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "json") {
                let bytes = fs::read(&path).map_err(|e| EnvError::io(&path, e))?;
                let pkg: InstalledPackage =
                    serde_json::from_slice(&bytes).map_err(|e| malformed(&path, e.to_string()))?;
                pkg.record().map_err(|e| malformed(&path, e))?;
                installed.push(pkg);
            }
        }
        installed.sort_by(|a, b| a.name.cmp(&b.name));

        let history =
            parse_history(&read(HISTORY_FILE)?).map_err(|e| malformed(&meta.join(HISTORY_FILE), e))?;
        let channels = read(CHANNELS_FILE)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let (source, locator) = l
                    .split_once('\t')
                    .ok_or_else(|| malformed(&meta.join(CHANNELS_FILE), format!("bad line `{l}`")))?;
                Ok(ChannelRef::new(source, Locator::parse(locator)))
            })
            .collect::<Result<_, EnvError>>()?;

        Ok(EnvironmentState {
            prefix: prefix.to_path_buf(),
            installed,
            history,
            pins: spec_lines(PINS_FILE)?,
            requested: spec_lines(REQUESTED_FILE)?,
            channels,
        })
    }

    pub fn history_text(&self) -> String {
        self.history.iter().map(|h| h.to_string()).collect()
    }

    pub fn pins_text(&self) -> String {
        spec_list_text(&self.pins)
    }

    pub fn requested_text(&self) -> String {
        spec_list_text(&self.requested)
    }

    pub fn channels_text(&self) -> String {
        self.channels
            .iter()
            .map(|c| format!("{}\t{}\n", c.source, c.locator))
            .collect()
    }
}

fn spec_list_text(specs: &[MatchSpec]) -> String {
    specs.iter().map(|s| format!("{s}\n")).collect()
}

/// Advisory lock on `<prefix>/meta/lock`, released on drop.
#[derive(Debug)]
pub struct PrefixLock {
    _file: File,
}

impl PrefixLock {
    fn open(prefix: &Path) -> Result<File, EnvError> {
        let meta = prefix.join(META_DIR);
        fs::create_dir_all(&meta).map_err(|e| EnvError::io(&meta, e))?;
        let path = meta.join(LOCK_FILE);
        File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| EnvError::io(&path, e))
    }

    /// Exclusive lock; fails at once if another holder exists.
    pub fn exclusive(prefix: &Path) -> Result<Self, EnvError> {
        let file = Self::open(prefix)?;
        match file.try_lock() {
            Ok(()) => Ok(PrefixLock { _file: file }),
            Err(fs::TryLockError::WouldBlock) => Err(EnvError::LockHeld(prefix.to_path_buf())),
            Err(fs::TryLockError::Error(e)) => Err(EnvError::io(&prefix.join(META_DIR).join(LOCK_FILE), e)),
        }
    }

    pub fn shared(prefix: &Path) -> Result<Self, EnvError> {
        let file = Self::open(prefix)?;
        match file.try_lock_shared() {
            Ok(()) => Ok(PrefixLock { _file: file }),
            Err(fs::TryLockError::WouldBlock) => Err(EnvError::LockHeld(prefix.to_path_buf())),
            Err(fs::TryLockError::Error(e)) => Err(EnvError::io(&prefix.join(META_DIR).join(LOCK_FILE), e)),
        }
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), EnvError> {
    let tmp = path.with_extension("tmp~");
    let mut f = File::create(&tmp).map_err(|e| EnvError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| EnvError::io(&tmp, e))?;
    f.sync_all().map_err(|e| EnvError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| EnvError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_round_trips() {
        let entries = vec![
            HistoryEntry {
                timestamp: "2021-01-01 00:00:00".into(),
                action: "create".into(),
                request: vec!["a>=1,<2".into(), "b".into()],
                unlinked: vec![],
                linked: vec!["c::a-1-h0".into()],
            },
            HistoryEntry {
                timestamp: "2021-01-02 00:00:00".into(),
                action: "remove".into(),
                request: vec![],
                unlinked: vec!["c::a-1-h0".into()],
                linked: vec![],
            },
        ];
        let text: String = entries.iter().map(|e| e.to_string()).collect();
        assert_eq!(parse_history(&text).unwrap(), entries);
    }

    #[test]
    fn channel_names() {
        assert_eq!(channel_name("robostack"), "robostack");
        assert_eq!(channel_name("/srv/chan/conda-forge/"), "conda-forge");
        assert_eq!(channel_name("https://example.org/robostack"), "robostack");
    }

    #[test]
    fn exclusive_lock_excludes() {
        let dir = tempfile::tempdir().unwrap();
        let held = PrefixLock::exclusive(dir.path()).unwrap();
        assert!(matches!(
            PrefixLock::exclusive(dir.path()),
            Err(EnvError::LockHeld(_))
        ));
        assert!(matches!(
            PrefixLock::shared(dir.path()),
            Err(EnvError::LockHeld(_))
        ));
        drop(held);
        let a = PrefixLock::shared(dir.path()).unwrap();
        let _b = PrefixLock::shared(dir.path()).unwrap();
        drop(a);
    }
}
