//! Environments on disk: transactions, archive extraction with prefix
//! relocation, metadata and export.

mod archive;
mod export;
mod ops;
mod relocate;
mod state;
mod transaction;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::channels::ChannelError;
use crate::solver::SolveError;

pub use archive::{
    is_safe_relative_path, sha256_hex, ArchiveIndex, PackageArchive, PathEntry, PathMode, PathsJson,
    INDEX_JSON, PATHS_JSON, PLACEHOLDER, PLACEHOLDER_LEN,
};
pub use export::{export_environment, DocumentError, EnvironmentDocument, ExportMode};
pub(crate) use export::{parse_keyed_lists, write_list};
pub use ops::{
    load_merged_index, merge_specs, plan_create, plan_exact, plan_install, plan_remove,
    reverse_dependency_closure, Plan,
};
pub use relocate::{binary_sites, relocate_binary, relocate_text};
pub use state::{
    channel_name, parse_history, ChannelRef, EnvironmentState, HistoryEntry, InstalledPackage, PrefixLock,
    META_DIR,
};
pub use transaction::{
    apply_transaction, dependency_order, plan_transaction, ApplyOptions, ArchiveSource, ChannelArchives,
    Step, StepHook, Transaction,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("digest mismatch for {package}: expected {expected}, got {actual}")]
    DigestMismatch {
        package: String,
        expected: String,
        actual: String,
    },
    #[error("archive for {package} unavailable: {reason}")]
    ArchiveUnavailable { package: String, reason: String },
    #[error("malformed archive for {package}: {reason}")]
    MalformedArchive { package: String, reason: String },
    #[error("prefix {} is longer than the {limit} byte placeholder of {package}", prefix.display())]
    PrefixTooLong {
        prefix: PathBuf,
        limit: usize,
        package: String,
    },
    #[error("another process holds the lock on {}", .0.display())]
    LockHeld(PathBuf),
    #[error("{package} would overwrite existing path `{path}`")]
    PathConflict { path: String, package: String },
    #[error("dependency cycle: {}", .0.join(" -> "))]
    CycleInDependencyGraph(Vec<String>),
    #[error("transaction interrupted and rolled back: {0}")]
    Interrupted(String),
    #[error("environment {} is corrupt: {reason}", prefix.display())]
    CorruptEnvironment { prefix: PathBuf, reason: String },
    #[error("{} already exists and is not empty", .0.display())]
    EnvironmentExists(PathBuf),
    #[error("{} is not an environment", .0.display())]
    NotAnEnvironment(PathBuf),
    #[error("malformed metadata {}: {reason}", path.display())]
    MalformedMetadata { path: PathBuf, reason: String },
    #[error("package `{0}` is not installed")]
    PackageNotInstalled(String),
}

impl EnvError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        EnvError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
