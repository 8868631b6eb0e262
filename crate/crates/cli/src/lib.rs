//! The `pkgstack` command line. [`run`] is the whole program; the binary
//! only wires it to the process.

mod commands;
mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use chrono::{SecondsFormat, TimeZone, Utc};
use clap::{Args, Parser, Subcommand};

pub use error::{CliError, ExitStatus};

/// Names the directory holding `envs/` and `channels/`.
pub const ROOT_VAR: &str = "PKGSTACK_ROOT";

#[derive(Debug, Parser)]
#[command(
    name = "pkgstack",
    version,
    about = "Binary package environments, lockfiles and ROS recipes"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// Environment name, stored under `<root>/envs/`.
    #[arg(short = 'n', long = "name")]
    name: Option<String>,
    /// Environment directory.
    #[arg(short = 'p', long = "prefix")]
    prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
struct OptionalTarget {
    #[arg(short = 'n', long = "name")]
    name: Option<String>,
    #[arg(short = 'p', long = "prefix")]
    prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlatformArgs {
    /// Target platform; defaults to the host.
    #[arg(long)]
    platform: Option<String>,
    /// Declared glibc version for linux targets.
    #[arg(long, value_name = "VERSION")]
    glibc: Option<String>,
    /// Declared macOS version for osx targets.
    #[arg(long, value_name = "VERSION")]
    osx: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a new environment.
    Create {
        #[command(flatten)]
        target: Target,
        specs: Vec<String>,
        /// Channel, highest priority first: a URL, a directory, or a name
        /// under `<root>/channels/`.
        #[arg(short = 'c', long = "channel")]
        channels: Vec<String>,
        #[arg(long = "pin")]
        pins: Vec<String>,
        #[command(flatten)]
        platform: PlatformArgs,
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        json: bool,
    },
    /// Add or change packages in an environment.
    Install {
        #[command(flatten)]
        target: Target,
        #[arg(required = true)]
        specs: Vec<String>,
        #[arg(long = "pin")]
        pins: Vec<String>,
        #[command(flatten)]
        platform: PlatformArgs,
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        json: bool,
    },
    /// Remove packages and everything depending on them.
    Remove {
        #[command(flatten)]
        target: Target,
        #[arg(required = true)]
        names: Vec<String>,
        #[command(flatten)]
        platform: PlatformArgs,
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        json: bool,
    },
    /// List installed packages.
    List {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        json: bool,
    },
    /// Print the environment document.
    Export {
        #[command(flatten)]
        export: ExportArgs,
    },
    /// Environment documents.
    #[command(subcommand)]
    Env(EnvCommand),
    /// Resolve specs without touching any environment.
    Solve {
        #[arg(required = true)]
        specs: Vec<String>,
        #[arg(short = 'c', long = "channel")]
        channels: Vec<String>,
        #[arg(long = "pin")]
        pins: Vec<String>,
        #[command(flatten)]
        platform: PlatformArgs,
        #[arg(long)]
        json: bool,
    },
    /// Lock a spec file for every platform it lists.
    Lock {
        specfile: PathBuf,
        /// Write the lockfile here instead of standard output.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[arg(long, value_name = "VERSION")]
        glibc: Option<String>,
        #[arg(long, value_name = "VERSION")]
        osx: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Create an environment holding exactly one section of a lockfile.
    InstallLock {
        lockfile: PathBuf,
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        platform: Option<String>,
    },
    /// Generate a recipe from a ROS `package.xml`.
    GenerateRecipe {
        manifest: PathBuf,
        #[arg(long)]
        distro: String,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        platform: Option<String>,
        /// Snapshot directory whose packages count as siblings.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Print the build order of a snapshot of ROS packages.
    BuildOrder {
        snapshot: PathBuf,
        /// Print mangled package names for this distro.
        #[arg(long)]
        distro: Option<String>,
    },
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    target: Target,
    /// Leave builds out, keeping `name=version`.
    #[arg(long)]
    no_builds: bool,
    #[arg(short = 'f', long = "file")]
    file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum EnvCommand {
    /// Create an environment from a document.
    Create {
        #[arg(short = 'f', long = "file")]
        file: PathBuf,
        #[command(flatten)]
        target: OptionalTarget,
        #[command(flatten)]
        platform: PlatformArgs,
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print the environment document.
    Export {
        #[command(flatten)]
        export: ExportArgs,
    },
}

/// Process-wide inputs that do not come from arguments.
#[derive(Debug, Clone)]
pub struct Context {
    pub root: PathBuf,
    /// Recorded in history and lockfiles.
    pub timestamp: String,
}

impl Context {
    /// Root from [`ROOT_VAR`] (else `~/.pkgstack`); timestamp from
    /// `SOURCE_DATE_EPOCH` when set, else the clock.
    pub fn from_env() -> Self {
        let root = std::env::var_os(ROOT_VAR)
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".pkgstack")))
            .unwrap_or_else(|| PathBuf::from(".pkgstack"));
        let when = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse::<i64>().ok())
            .and_then(|secs| Utc.timestamp_opt(secs, 0).single())
            .unwrap_or_else(Utc::now);
        Context {
            root,
            timestamp: when.to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }
}

/// Runs one invocation, writing machine output to `out` and diagnostics to
/// `err`. Returns the exit code.
pub fn run<I, T>(args: I, ctx: &Context, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    ExitStatus::Success.code()
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    ExitStatus::UserError.code()
                }
            };
        }
    };
    match commands::dispatch(cli.command, ctx, out, err) {
        Ok(()) => ExitStatus::Success.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.status().code()
        }
    }
}
