use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::archive::{sha256_hex, PackageArchive, PathMode};
use super::relocate::{relocate_binary, relocate_text};
use super::state::{
    write_atomic, ChannelRef, EnvironmentState, HistoryEntry, InstalledPackage, PrefixLock, BACKUP_DIR,
    CHANNELS_FILE, HISTORY_FILE, META_DIR, PINS_FILE, REQUESTED_FILE,
};
use super::EnvError;
use crate::channels::{spec_matches, Locator, PackageRecord};
use crate::graph::topological_order;
use crate::solver::Solution;
use crate::verspec::MatchSpec;

/// Ordered changes turning one installed set into another.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transaction {
    /// Dependents before their dependencies.
    pub unlink: Vec<PackageRecord>,
    /// Dependencies before their dependents.
    pub link: Vec<PackageRecord>,
}

impl Transaction {
    pub fn is_empty(&self) -> bool {
        self.unlink.is_empty() && self.link.is_empty()
    }

    /// One line per change, `-` for unlink and `+` for link, sorted by name.
    pub fn summary(&self) -> Vec<String> {
        let mut lines: Vec<(String, String)> = self
            .unlink
            .iter()
            .map(|r| (r.name.clone(), format!("- {r}")))
            .chain(self.link.iter().map(|r| (r.name.clone(), format!("+ {r}"))))
            .collect();
        lines.sort();
        lines.into_iter().map(|(_, l)| l).collect()
    }
}

/// Orders `records` so that each comes after the records its dependencies
/// resolve to within the set.
pub fn dependency_order(records: &[PackageRecord]) -> Result<Vec<PackageRecord>, EnvError> {
    let labels: Vec<String> = records.iter().map(|r| r.name.clone()).collect();
    let deps: Vec<BTreeSet<usize>> = records
        .iter()
        .map(|r| {
            r.depends
                .iter()
                .flat_map(|d| {
                    records
                        .iter()
                        .enumerate()
                        .filter(move |(_, o)| spec_matches(d, *o))
                        .map(|(j, _)| j)
                })
                .collect()
        })
        .collect();
    match topological_order(&labels, &deps) {
        Ok(order) => Ok(order.into_iter().map(|i| records[i].clone()).collect()),
        Err(cycle) => Err(EnvError::CycleInDependencyGraph(
            cycle.into_iter().map(|i| labels[i].clone()).collect(),
        )),
    }
}

/// The unlink/link difference between what is installed and `target`,
/// compared by (name, version, build).
pub fn plan_transaction(current: &EnvironmentState, target: &Solution) -> Result<Transaction, EnvError> {
    let installed = current.records()?;
    let target_keys: BTreeSet<_> = target.records.iter().map(|r| r.key()).collect();
    let installed_keys: BTreeSet<_> = installed.iter().map(|r| r.key()).collect();

    let unlink: Vec<PackageRecord> = installed
        .iter()
        .filter(|r| !target_keys.contains(&r.key()))
        .cloned()
        .collect();
    let link: Vec<PackageRecord> = target
        .records
        .iter()
        .filter(|r| !installed_keys.contains(&r.key()))
        .map(|r| (**r).clone())
        .collect();

    let mut unlink = dependency_order(&unlink)?;
    unlink.reverse();
    Ok(Transaction {
        unlink,
        link: dependency_order(&link)?,
    })
}

/// Supplies archive bytes for records about to be linked.
pub trait ArchiveSource {
    fn fetch(&self, record: &PackageRecord) -> Result<Vec<u8>, EnvError>;
}

/// Fetches archives from the channels the records came from.
pub struct ChannelArchives {
    locators: BTreeMap<String, Locator>,
}

impl ChannelArchives {
    pub fn new(channels: &[ChannelRef]) -> Self {
        ChannelArchives {
            locators: channels
                .iter()
                .map(|c| (c.name.clone(), c.locator.clone()))
                .collect(),
        }
    }
}

impl ArchiveSource for ChannelArchives {
    fn fetch(&self, record: &PackageRecord) -> Result<Vec<u8>, EnvError> {
        let unavailable = |reason: String| EnvError::ArchiveUnavailable {
            package: record.to_string(),
            reason,
        };
        let locator = self
            .locators
            .get(&record.channel)
            .ok_or_else(|| unavailable(format!("channel `{}` is not configured", record.channel)))?;
        locator
            .fetch(&record.archive_path())
            .map_err(|e| unavailable(e.to_string()))?
            .ok_or_else(|| unavailable(format!("{} not found in {locator}", record.archive_path())))
    }
}

/// A file-system step of a running transaction, reported to
/// [`ApplyOptions::hook`] before it happens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Remove(PathBuf),
    Write(PathBuf),
}

/// Called before every step of a transaction; an error aborts it.
pub type StepHook<'a> = &'a dyn Fn(&Step) -> Result<(), String>;

pub struct ApplyOptions<'a> {
    pub action: String,
    pub timestamp: String,
    /// Requested specs, pins and channels after the transaction.
    pub requested: Vec<MatchSpec>,
    pub pins: Vec<MatchSpec>,
    pub channels: Vec<ChannelRef>,
    /// Called before every step; an error aborts and rolls back the
    /// transaction. Used to simulate failures.
    pub hook: Option<StepHook<'a>>,
}

impl<'a> ApplyOptions<'a> {
    /// Options keeping the state's current requested specs, pins and
    /// channels.
    pub fn keep(state: &EnvironmentState, action: &str, timestamp: &str) -> Self {
        ApplyOptions {
            action: action.to_string(),
            timestamp: timestamp.to_string(),
            requested: state.requested.clone(),
            pins: state.pins.clone(),
            channels: state.channels.clone(),
            hook: None,
        }
    }
}

/// Records every change so that it can be undone. Removed files are moved
/// into a backup directory rather than deleted.
struct Journal<'h> {
    prefix: PathBuf,
    backup: PathBuf,
    moved: Vec<(PathBuf, PathBuf)>,
    created_files: Vec<PathBuf>,
    created_dirs: Vec<PathBuf>,
    hook: Option<StepHook<'h>>,
}

impl<'h> Journal<'h> {
    fn begin(prefix: &Path, hook: Option<StepHook<'h>>) -> Result<Self, EnvError> {
        let backup = prefix.join(META_DIR).join(BACKUP_DIR);
        fs::create_dir(&backup).map_err(|e| EnvError::io(&backup, e))?;
        Ok(Journal {
            prefix: prefix.to_path_buf(),
            backup,
            moved: Vec::new(),
            created_files: Vec::new(),
            created_dirs: Vec::new(),
            hook,
        })
    }

    fn check(&self, step: Step) -> Result<(), EnvError> {
        match self.hook {
            Some(hook) => hook(&step).map_err(EnvError::Interrupted),
            None => Ok(()),
        }
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<(), EnvError> {
        if dir.is_dir() {
            return Ok(());
        }
        if let Some(parent) = dir.parent() {
            self.ensure_dir(parent)?;
        }
        fs::create_dir(dir).map_err(|e| EnvError::io(dir, e))?;
        self.created_dirs.push(dir.to_path_buf());
        Ok(())
    }

    /// Moves `rel` (relative to the prefix) out of the way, if present.
    fn remove(&mut self, rel: &str) -> Result<(), EnvError> {
        let path = self.prefix.join(rel);
        if fs::symlink_metadata(&path).is_err() {
            return Ok(());
        }
        self.check(Step::Remove(path.clone()))?;
        let dest = self.backup.join(self.moved.len().to_string());
        fs::rename(&path, &dest).map_err(|e| EnvError::io(&path, e))?;
        self.moved.push((path, dest));
        Ok(())
    }

    /// Writes `rel`, displacing any previous file there.
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), EnvError> {
        self.remove(rel)?;
        let path = self.prefix.join(rel);
        self.check(Step::Write(path.clone()))?;
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        self.created_files.push(path.clone());
        write_atomic(&path, bytes)
    }

    fn rollback(self) -> Result<(), String> {
        let mut problems = Vec::new();
        for f in self.created_files.iter().rev() {
            if let Err(e) = fs::remove_file(f) {
                if e.kind() != std::io::ErrorKind::NotFound {
                    problems.push(format!("{}: {e}", f.display()));
                }
            }
            let _ = fs::remove_file(f.with_extension("tmp~"));
        }
        for (orig, dest) in self.moved.iter().rev() {
            if let Err(e) = fs::rename(dest, orig) {
                problems.push(format!("restoring {}: {e}", orig.display()));
            }
        }
        for d in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
        if problems.is_empty() {
            fs::remove_dir_all(&self.backup).map_err(|e| e.to_string())
        } else {
            Err(problems.join("; "))
        }
    }

    fn commit(self) -> Result<(), EnvError> {
        fs::remove_dir_all(&self.backup).map_err(|e| EnvError::io(&self.backup, e))?;
        // Directories emptied by removals go too.
        let meta = self.prefix.join(META_DIR);
        let mut dirs: BTreeSet<PathBuf> = BTreeSet::new();
        for (orig, _) in &self.moved {
            let mut d = orig.parent();
            while let Some(dir) = d {
                if dir == self.prefix || dir == meta {
                    break;
                }
                dirs.insert(dir.to_path_buf());
                d = dir.parent();
            }
        }
        for d in dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
        Ok(())
    }
}

/// Fetches, verifies and parses every archive of `tx.link`.
fn fetch_archives(tx: &Transaction, source: &dyn ArchiveSource) -> Result<Vec<PackageArchive>, EnvError> {
    tx.link
        .iter()
        .map(|record| {
            let bytes = source.fetch(record)?;
            let actual = sha256_hex(&bytes);
            if actual != record.sha256 {
                return Err(EnvError::DigestMismatch {
                    package: record.to_string(),
                    expected: record.sha256.clone(),
                    actual,
                });
            }
            let malformed = |reason: String| EnvError::MalformedArchive {
                package: record.to_string(),
                reason,
            };
            let archive = PackageArchive::from_bytes(&bytes).map_err(malformed)?;
            if !archive.index.matches(record) {
                return Err(malformed(format!(
                    "archive describes {}-{}-{}",
                    archive.index.name, archive.index.version, archive.index.build
                )));
            }
            Ok(archive)
        })
        .collect()
}

/// Relocated payload of one archive, keyed by relative path.
fn materialize(
    archive: &PackageArchive,
    prefix: &Path,
    package: &str,
) -> Result<Vec<(String, Vec<u8>)>, EnvError> {
    let prefix_text = prefix.to_string_lossy();
    archive
        .paths
        .iter()
        .map(|entry| {
            let data = &archive.files[&entry.path];
            let contents = match &entry.prefix_placeholder {
                None => data.clone(),
                Some(ph) => match entry.mode {
                    PathMode::Text => relocate_text(data, ph.as_bytes(), prefix_text.as_bytes()),
                    PathMode::Binary => relocate_binary(data, ph.as_bytes(), prefix_text.as_bytes())
                        .ok_or_else(|| EnvError::PrefixTooLong {
                            prefix: prefix.to_path_buf(),
                            limit: ph.len(),
                            package: package.to_string(),
                        })?,
                },
            };
            Ok((entry.path.clone(), contents))
        })
        .collect()
}

/// Applies `tx` to the environment at `state.prefix` and returns the new
/// state. Holds the prefix's exclusive lock throughout; on any failure
/// every file change is undone before the error is returned.
pub fn apply_transaction(
    state: &EnvironmentState,
    tx: &Transaction,
    source: &dyn ArchiveSource,
    opts: &ApplyOptions<'_>,
) -> Result<EnvironmentState, EnvError> {
    let prefix = &state.prefix;
    let had_prefix = prefix.exists();
    let had_meta = prefix.join(META_DIR).exists();
    fs::create_dir_all(prefix).map_err(|e| EnvError::io(prefix, e))?;
    let result = apply_locked(state, tx, source, opts);
    if result.is_err() {
        // Leave no trace in a prefix this call brought into existence.
        if !had_meta && !matches!(result, Err(EnvError::CorruptEnvironment { .. })) {
            let _ = fs::remove_dir_all(prefix.join(META_DIR));
        }
        if !had_prefix {
            let _ = fs::remove_dir(prefix);
        }
    }
    result
}

fn apply_locked(
    state: &EnvironmentState,
    tx: &Transaction,
    source: &dyn ArchiveSource,
    opts: &ApplyOptions<'_>,
) -> Result<EnvironmentState, EnvError> {
    let prefix = &state.prefix;
    let _lock = PrefixLock::exclusive(prefix)?;
    if prefix.join(META_DIR).join(BACKUP_DIR).exists() {
        return Err(EnvError::CorruptEnvironment {
            prefix: prefix.clone(),
            reason: "an interrupted transaction left a backup directory behind".into(),
        });
    }

    // Everything that can fail without touching the prefix happens first.
    let archives = fetch_archives(tx, source)?;
    let mut payloads = Vec::with_capacity(archives.len());
    for (record, archive) in tx.link.iter().zip(&archives) {
        payloads.push(materialize(archive, prefix, &record.to_string())?);
    }
    let unlinked_keys: BTreeSet<_> = tx.unlink.iter().map(|r| r.key()).collect();
    let mut remaining: Vec<InstalledPackage> = state
        .installed
        .iter()
        .filter(|p| !unlinked_keys.contains(&(p.name.clone(), p.version.clone(), p.build.clone())))
        .cloned()
        .collect();
    let freed: BTreeSet<&str> = state
        .installed
        .iter()
        .filter(|p| unlinked_keys.contains(&(p.name.clone(), p.version.clone(), p.build.clone())))
        .flat_map(|p| p.files.iter().map(String::as_str))
        .collect();
    let mut owner: BTreeMap<&str, String> = remaining
        .iter()
        .flat_map(|p| p.files.iter().map(move |f| (f.as_str(), p.name.clone())))
        .collect();
    for (record, files) in tx.link.iter().zip(&payloads) {
        for (path, _) in files {
            let taken = owner.contains_key(path.as_str())
                || (!freed.contains(path.as_str()) && fs::symlink_metadata(prefix.join(path)).is_ok())
                || path.split('/').next() == Some(META_DIR);
            if taken {
                return Err(EnvError::PathConflict {
                    path: path.clone(),
                    package: record.to_string(),
                });
            }
            owner.insert(path, record.name.clone());
        }
    }

    let mut new_state = EnvironmentState {
        prefix: prefix.clone(),
        installed: Vec::new(),
        history: state.history.clone(),
        pins: opts.pins.clone(),
        requested: opts.requested.clone(),
        channels: opts.channels.clone(),
    };
    new_state.history.push(HistoryEntry {
        timestamp: opts.timestamp.clone(),
        action: opts.action.clone(),
        request: opts.requested.iter().map(|s| s.to_string()).collect(),
        unlinked: tx.unlink.iter().map(|r| r.to_string()).collect(),
        linked: tx.link.iter().map(|r| r.to_string()).collect(),
    });

    let mut journal = Journal::begin(prefix, opts.hook)?;
    let result = (|| {
        let meta = |name: &str| format!("{META_DIR}/{name}");
        for record in &tx.unlink {
            let pkg = state
                .installed
                .iter()
                .find(|p| {
                    p.name == record.name
                        && p.version == record.version.to_string()
                        && p.build == record.build
                })
                .expect("unlinked records come from the installed set");
            for f in &pkg.files {
                journal.remove(f)?;
            }
            journal.remove(&meta(&InstalledPackage::meta_file_name(record)))?;
        }
        for (record, files) in tx.link.iter().zip(&payloads) {
            for (path, bytes) in files {
                journal.write(path, bytes)?;
            }
            let pkg = InstalledPackage::new(record, files.iter().map(|(p, _)| p.clone()).collect());
            journal.write(&meta(&InstalledPackage::meta_file_name(record)), &pkg.to_bytes())?;
            remaining.push(pkg);
        }
        remaining.sort_by(|a, b| a.name.cmp(&b.name));
        new_state.installed = remaining;
        journal.write(&meta(PINS_FILE), new_state.pins_text().as_bytes())?;
        journal.write(&meta(REQUESTED_FILE), new_state.requested_text().as_bytes())?;
        journal.write(&meta(CHANNELS_FILE), new_state.channels_text().as_bytes())?;
        // Written last: its presence marks a complete environment.
        journal.write(&meta(HISTORY_FILE), new_state.history_text().as_bytes())?;
        Ok(())
    })();

    match result {
        Ok(()) => {
            journal.commit()?;
            Ok(new_state)
        }
        Err(err) => match journal.rollback() {
            Ok(()) => Err(err),
            Err(reason) => Err(EnvError::CorruptEnvironment {
                prefix: prefix.clone(),
                reason: format!("{err}; rollback failed: {reason}"),
            }),
        },
    }
}
