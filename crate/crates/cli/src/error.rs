use std::path::PathBuf;

use pkgstack_core::channels::ChannelError;
use pkgstack_core::environment::{DocumentError, EnvError};
use pkgstack_core::lock::LockError;
use pkgstack_core::solver::SolveError;
use pkgstack_core::verspec::VerspecError;
use pkgstack_core::vinca::VincaError;
use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    UserError = 1,
    Unsatisfiable = 2,
    Failure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid spec `{text}`: {source}")]
    Spec {
        text: String,
        #[source]
        source: VerspecError,
    },
    #[error("{}: {source}", path.display())]
    Document {
        path: PathBuf,
        #[source]
        source: DocumentError,
    },
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Lock(#[from] LockError),
    #[error(transparent)]
    Vinca(#[from] VincaError),
}

fn channel_status(e: &ChannelError) -> ExitStatus {
    match e {
        ChannelError::UnknownPlatform(_) => ExitStatus::UserError,
        ChannelError::SourceUnreachable { .. } | ChannelError::MalformedIndex { .. } => ExitStatus::Failure,
    }
}

fn env_status(e: &EnvError) -> ExitStatus {
    match e {
        EnvError::Solve(_) => ExitStatus::Unsatisfiable,
        EnvError::Channel(c) => channel_status(c),
        EnvError::PrefixTooLong { .. }
        | EnvError::EnvironmentExists(_)
        | EnvError::NotAnEnvironment(_)
        | EnvError::PackageNotInstalled(_) => ExitStatus::UserError,
        EnvError::Io { .. }
        | EnvError::DigestMismatch { .. }
        | EnvError::ArchiveUnavailable { .. }
        | EnvError::MalformedArchive { .. }
        | EnvError::LockHeld(_)
        | EnvError::PathConflict { .. }
        | EnvError::CycleInDependencyGraph(_)
        | EnvError::Interrupted(_)
        | EnvError::CorruptEnvironment { .. }
        | EnvError::MalformedMetadata { .. } => ExitStatus::Failure,
    }
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Usage(_) | CliError::Spec { .. } | CliError::Document { .. } => ExitStatus::UserError,
            CliError::Read { .. } | CliError::Write { .. } => ExitStatus::Failure,
            CliError::Channel(e) => channel_status(e),
            CliError::Solve(_) => ExitStatus::Unsatisfiable,
            CliError::Env(e) => env_status(e),
            CliError::Lock(e) => match e {
                LockError::SpecFile(_) | LockError::Malformed { .. } | LockError::PlatformMissing(_) => {
                    ExitStatus::UserError
                }
                LockError::Unsatisfiable(_) => ExitStatus::Unsatisfiable,
                LockError::MissingIndex(_) => ExitStatus::Failure,
                LockError::Channel(c) => channel_status(c),
                LockError::Env(e) => env_status(e),
            },
            CliError::Vinca(e) => match e {
                VincaError::MalformedManifest { .. }
                | VincaError::MalformedMapping { .. }
                | VincaError::UnknownDistro(_)
                | VincaError::DuplicatePackage { .. } => ExitStatus::UserError,
                VincaError::UnmappedDependency { .. } | VincaError::DependencyCycle(_) => {
                    ExitStatus::Unsatisfiable
                }
                VincaError::Io { .. } => ExitStatus::Failure,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use std::path::PathBuf;

    use pkgstack_core::channels::Platform;
    use pkgstack_core::solver::UnsatExplanation;
    use pkgstack_core::verspec::MatchSpec;
    use proptest::prelude::*;

    use super::*;

    /// One error of every class with its code, payloads taken from `s`.
    fn classes(s: &str) -> Vec<(CliError, ExitStatus)> {
        use ExitStatus::*;
        let p = || PathBuf::from(s);
        let io = || std::io::Error::other(s.to_string());
        let unsat = || SolveError::Unsatisfiable(UnsatExplanation { roots: vec![] });
        let nocand = || SolveError::NoCandidates(vec![MatchSpec::named("a")]);
        let doc = || DocumentError {
            line: 1,
            reason: s.into(),
        };
        let unreachable = || ChannelError::SourceUnreachable {
            locator: s.into(),
            reason: s.into(),
        };
        let malformed_index = || ChannelError::MalformedIndex {
            channel: s.into(),
            platform: Platform::Linux64,
            entry: None,
            reason: s.into(),
        };
        let envs = || {
            vec![
                (
                    EnvError::Io {
                        path: p(),
                        source: io(),
                    },
                    Failure,
                ),
                (EnvError::Channel(unreachable()), Failure),
                (
                    EnvError::Channel(ChannelError::UnknownPlatform(s.into())),
                    UserError,
                ),
                (EnvError::Solve(unsat()), Unsatisfiable),
                (EnvError::Solve(nocand()), Unsatisfiable),
                (
                    EnvError::DigestMismatch {
                        package: s.into(),
                        expected: s.into(),
                        actual: s.into(),
                    },
                    Failure,
                ),
                (
                    EnvError::ArchiveUnavailable {
                        package: s.into(),
                        reason: s.into(),
                    },
                    Failure,
                ),
                (
                    EnvError::MalformedArchive {
                        package: s.into(),
                        reason: s.into(),
                    },
                    Failure,
                ),
                (
                    EnvError::PrefixTooLong {
                        prefix: p(),
                        limit: 255,
                        package: s.into(),
                    },
                    UserError,
                ),
                (EnvError::LockHeld(p()), Failure),
                (
                    EnvError::PathConflict {
                        path: s.into(),
                        package: s.into(),
                    },
                    Failure,
                ),
                (EnvError::CycleInDependencyGraph(vec![s.into()]), Failure),
                (EnvError::Interrupted(s.into()), Failure),
                (
                    EnvError::CorruptEnvironment {
                        prefix: p(),
                        reason: s.into(),
                    },
                    Failure,
                ),
                (EnvError::EnvironmentExists(p()), UserError),
                (EnvError::NotAnEnvironment(p()), UserError),
                (
                    EnvError::MalformedMetadata {
                        path: p(),
                        reason: s.into(),
                    },
                    Failure,
                ),
                (EnvError::PackageNotInstalled(s.into()), UserError),
            ]
        };
        let mut out = vec![
            (CliError::Usage(s.into()), UserError),
            (
                CliError::Spec {
                    text: s.into(),
                    source: VerspecError::MalformedSpec {
                        text: s.into(),
                        reason: s.into(),
                    },
                },
                UserError,
            ),
            (
                CliError::Document {
                    path: p(),
                    source: doc(),
                },
                UserError,
            ),
            (
                CliError::Read {
                    path: p(),
                    source: io(),
                },
                Failure,
            ),
            (
                CliError::Write {
                    path: p(),
                    source: io(),
                },
                Failure,
            ),
            (CliError::Channel(unreachable()), Failure),
            (CliError::Channel(malformed_index()), Failure),
            (
                CliError::Channel(ChannelError::UnknownPlatform(s.into())),
                UserError,
            ),
            (CliError::Solve(unsat()), Unsatisfiable),
            (CliError::Solve(nocand()), Unsatisfiable),
            (CliError::Lock(LockError::SpecFile(doc())), UserError),
            (
                CliError::Lock(LockError::Malformed {
                    line: 2,
                    reason: s.into(),
                }),
                UserError,
            ),
            (CliError::Lock(LockError::MissingIndex(Platform::Win64)), Failure),
            (
                CliError::Lock(LockError::Unsatisfiable(vec![(Platform::Linux64, unsat())])),
                Unsatisfiable,
            ),
            (
                CliError::Lock(LockError::PlatformMissing(Platform::Win64)),
                UserError,
            ),
            (CliError::Lock(LockError::Channel(malformed_index())), Failure),
            (
                CliError::Vinca(VincaError::MalformedManifest {
                    path: None,
                    reason: s.into(),
                }),
                UserError,
            ),
            (
                CliError::Vinca(VincaError::MalformedMapping {
                    line: 1,
                    reason: s.into(),
                }),
                UserError,
            ),
            (CliError::Vinca(VincaError::UnknownDistro(s.into())), UserError),
            (
                CliError::Vinca(VincaError::UnmappedDependency {
                    package: s.into(),
                    platform: Platform::Linux64,
                    keys: vec![s.into()],
                }),
                Unsatisfiable,
            ),
            (
                CliError::Vinca(VincaError::DependencyCycle(vec![s.into()])),
                Unsatisfiable,
            ),
            (
                CliError::Vinca(VincaError::DuplicatePackage { name: s.into() }),
                UserError,
            ),
            (
                CliError::Vinca(VincaError::Io {
                    path: p(),
                    source: io(),
                }),
                Failure,
            ),
        ];
        out.extend(envs().into_iter().map(|(e, c)| (CliError::Env(e), c)));
        out.extend(
            envs()
                .into_iter()
                .map(|(e, c)| (CliError::Lock(LockError::Env(e)), c)),
        );
        out
    }

    proptest! {
        #[test]
        fn every_error_class_has_its_code(s in "[ -~]{0,16}", pick in 0usize..1000) {
            let all = classes(&s);
            let (err, expected) = &all[pick % all.len()];
            prop_assert_eq!(err.status(), *expected, "{}", err);
            prop_assert_ne!(err.status(), ExitStatus::Success);
        }
    }

    #[test]
    fn classes_cover_every_code() {
        let codes: std::collections::BTreeSet<i32> =
            classes("x").iter().map(|(e, _)| e.status().code()).collect();
        assert_eq!(codes, [1, 2, 3].into());
    }
}
