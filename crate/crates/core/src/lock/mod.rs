//! Multi-platform lockfiles and installing from them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::channels::{
    detect_virtual_packages, merge_channels, ChannelError, ChannelIndex, PackageRecord, Platform,
    PlatformProfile,
};
use crate::environment::{
    parse_keyed_lists, plan_exact, sha256_hex, write_list, ArchiveIndex, ArchiveSource, ChannelRef,
    DocumentError, EnvError, EnvironmentState, PackageArchive,
};
use crate::solver::{solve, SolveError, SolveRequest};
use crate::verspec::{MatchSpec, Version};

pub const LOCK_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LockError {
    #[error("spec file: {0}")]
    SpecFile(DocumentError),
    #[error("lockfile line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("no index given for platform {0}")]
    MissingIndex(Platform),
    #[error("locking failed on {}:\n{}", .0.iter().map(|(p, _)| p.as_str()).collect::<Vec<_>>().join(", "),
        .0.iter().map(|(p, e)| format!("[{p}] {e}")).collect::<Vec<_>>().join("\n"))]
    Unsatisfiable(Vec<(Platform, SolveError)>),
    #[error("lockfile has no section for {0}")]
    PlatformMissing(Platform),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Input to locking: channels, versioned dependencies, target platforms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub channels: Vec<String>,
    pub dependencies: Vec<MatchSpec>,
    pub platforms: Vec<Platform>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self, LockError> {
        let doc = parse_keyed_lists(text, &["name", "channels", "dependencies", "platforms"])
            .map_err(LockError::SpecFile)?;
        let err = |reason: String| LockError::SpecFile(DocumentError { line: 0, reason });
        let dependencies = doc
            .list("dependencies")
            .ok_or_else(|| err("missing `dependencies`".into()))?
            .iter()
            .map(|d| MatchSpec::parse(d).map_err(|e| err(e.to_string())))
            .collect::<Result<_, _>>()?;
        let platforms: Vec<Platform> = doc
            .list("platforms")
            .unwrap_or_default()
            .iter()
            .map(|p| p.parse().map_err(|e: ChannelError| err(e.to_string())))
            .collect::<Result<_, _>>()?;
        if platforms.is_empty() {
            return Err(err("`platforms` must list at least one platform".into()));
        }
        Ok(SpecFile {
            channels: doc.list("channels").unwrap_or_default().to_vec(),
            dependencies,
            platforms,
        })
    }

    /// Digest of the canonical rendering, insensitive to formatting.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_string().as_bytes())
    }
}

impl fmt::Display for SpecFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, "channels", &self.channels)?;
        let deps: Vec<String> = self.dependencies.iter().map(|d| d.to_string()).collect();
        write_list(f, "dependencies", &deps)?;
        let platforms: Vec<String> = self.platforms.iter().map(|p| p.to_string()).collect();
        write_list(f, "platforms", &platforms)
    }
}

/// One fully pinned package.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LockEntry {
    pub name: String,
    pub version: String,
    pub build: String,
    pub channel: String,
    pub subdir: Platform,
    pub sha256: String,
}

impl LockEntry {
    pub fn from_record(r: &PackageRecord) -> Self {
        LockEntry {
            name: r.name.clone(),
            version: r.version.to_string(),
            build: r.build.clone(),
            channel: r.channel.clone(),
            subdir: r.platform,
            sha256: r.sha256.clone(),
        }
    }

    pub fn filename(&self) -> String {
        PackageRecord::expected_filename(&self.name, &self.version, &self.build)
    }

    pub fn pin(&self) -> String {
        format!("{}={}={}", self.name, self.version, self.build)
    }
}

impl fmt::Display for LockEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{} {}",
            self.pin(),
            self.channel,
            self.subdir,
            self.sha256
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockSection {
    pub platform: Platform,
    /// Digest over the channel indexes the solve saw.
    pub index_digest: String,
    pub virtual_packages: Vec<String>,
    /// Sorted by name.
    pub entries: Vec<LockEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lockfile {
    pub input_digest: String,
    pub generated: String,
    pub channels: Vec<String>,
    /// Sorted by platform.
    pub sections: Vec<LockSection>,
}

impl Lockfile {
    pub fn section(&self, platform: Platform) -> Option<&LockSection> {
        self.sections.iter().find(|s| s.platform == platform)
    }

    pub fn parse(text: &str) -> Result<Self, LockError> {
        let mut lock = Lockfile {
            input_digest: String::new(),
            generated: String::new(),
            channels: Vec::new(),
            sections: Vec::new(),
        };
        let mut in_channels = false;
        let mut saw_version = false;
        for (n, raw) in text.lines().enumerate() {
            let err = |reason: String| LockError::Malformed { line: n + 1, reason };
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(p) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let platform: Platform = p.parse().map_err(|e: ChannelError| err(e.to_string()))?;
                lock.sections.push(LockSection {
                    platform,
                    index_digest: String::new(),
                    virtual_packages: Vec::new(),
                    entries: Vec::new(),
                });
                in_channels = false;
                continue;
            }
            if let Some(section) = lock.sections.last_mut() {
                if let Some(d) = line.strip_prefix("index-digest: ") {
                    section.index_digest = d.to_string();
                } else if let Some(v) = line.strip_prefix("virtual:") {
                    section.virtual_packages = v.split_whitespace().map(str::to_string).collect();
                } else {
                    section.entries.push(parse_entry(line).map_err(err)?);
                }
                continue;
            }
            if in_channels {
                if let Some(c) = line.strip_prefix("  - ") {
                    lock.channels.push(c.to_string());
                    continue;
                }
                in_channels = false;
            }
            if let Some(v) = line.strip_prefix("version: ") {
                if v != LOCK_VERSION.to_string() {
                    return Err(err(format!("unsupported lockfile version {v}")));
                }
                saw_version = true;
            } else if let Some(d) = line.strip_prefix("input-digest: ") {
                lock.input_digest = d.to_string();
            } else if let Some(g) = line.strip_prefix("generated: ") {
                lock.generated = g.to_string();
            } else if line == "channels:" {
                in_channels = true;
            } else if line == "channels: []" {
            } else {
                return Err(err(format!("unexpected `{line}`")));
            }
        }
        if !saw_version {
            return Err(LockError::Malformed {
                line: 0,
                reason: "missing `version`".into(),
            });
        }
        Ok(lock)
    }
}

fn parse_entry(line: &str) -> Result<LockEntry, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [pin, location, sha256] = fields[..] else {
        return Err(format!(
            "expected `name=version=build channel/subdir sha256`, found `{line}`"
        ));
    };
    let mut parts = pin.splitn(3, '=');
    let (Some(name), Some(version), Some(build)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("`{pin}` is not fully pinned"));
    };
    Version::parse(version).map_err(|e| e.to_string())?;
    let (channel, subdir) = location
        .rsplit_once('/')
        .ok_or_else(|| format!("`{location}` is not channel/subdir"))?;
    if sha256.len() != 64 || !sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("`{sha256}` is not a sha256 digest"));
    }
    Ok(LockEntry {
        name: name.to_string(),
        version: version.to_string(),
        build: build.to_string(),
        channel: channel.to_string(),
        subdir: subdir.parse().map_err(|e: ChannelError| e.to_string())?,
        sha256: sha256.to_string(),
    })
}

impl fmt::Display for Lockfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "version: {LOCK_VERSION}")?;
        writeln!(f, "input-digest: {}", self.input_digest)?;
        writeln!(f, "generated: {}", self.generated)?;
        write_list(f, "channels", &self.channels)?;
        for s in &self.sections {
            writeln!(f, "\n[{}]", s.platform)?;
            writeln!(f, "index-digest: {}", s.index_digest)?;
            if s.virtual_packages.is_empty() {
                writeln!(f, "virtual:")?;
            } else {
                writeln!(f, "virtual: {}", s.virtual_packages.join(" "))?;
            }
            for e in &s.entries {
                writeln!(f, "{e}")?;
            }
        }
        Ok(())
    }
}

/// Digest identifying the exact index documents a solve saw.
pub fn index_digest(indexes: &[ChannelIndex]) -> String {
    let listing: String = indexes
        .iter()
        .map(|i| format!("{}/{} {}\n", i.channel, i.platform, i.digest))
        .collect();
    sha256_hex(listing.as_bytes())
}

/// What one platform is solved against.
#[derive(Debug, Clone)]
pub struct PlatformInput {
    pub profile: PlatformProfile,
    /// Channel indexes (platform and noarch) in priority order.
    pub indexes: Vec<ChannelIndex>,
}

/// Solves `spec` once per platform, concurrently. Fails as a whole if any
/// platform fails, reporting every failing platform.
pub fn generate_lock(
    spec: &SpecFile,
    inputs: &BTreeMap<Platform, PlatformInput>,
    timestamp: &str,
) -> Result<Lockfile, LockError> {
    let mut platforms = spec.platforms.clone();
    platforms.sort();
    platforms.dedup();
    for p in &platforms {
        if !inputs.contains_key(p) {
            return Err(LockError::MissingIndex(*p));
        }
    }
    let outcomes: Vec<(Platform, Result<LockSection, SolveError>)> = std::thread::scope(|scope| {
        let jobs: Vec<_> = platforms
            .iter()
            .map(|&p| {
                let input = &inputs[&p];
                (p, scope.spawn(move || lock_platform(spec, input)))
            })
            .collect();
        jobs.into_iter()
            .map(|(p, j)| (p, j.join().expect("solver thread panicked")))
            .collect()
    });

    let mut sections = Vec::new();
    let mut failures = Vec::new();
    for (p, outcome) in outcomes {
        match outcome {
            Ok(s) => sections.push(s),
            Err(e) => failures.push((p, e)),
        }
    }
    if !failures.is_empty() {
        return Err(LockError::Unsatisfiable(failures));
    }
    Ok(Lockfile {
        input_digest: spec.digest(),
        generated: timestamp.to_string(),
        channels: spec.channels.clone(),
        sections,
    })
}

fn lock_platform(spec: &SpecFile, input: &PlatformInput) -> Result<LockSection, SolveError> {
    let merged = merge_channels(&input.indexes);
    let virtuals = detect_virtual_packages(&input.profile);
    let request =
        SolveRequest::new(spec.dependencies.clone(), &merged).with_virtual_packages(virtuals.clone());
    let solution = solve(&request)?;
    let mut entries: Vec<LockEntry> = solution
        .records
        .iter()
        .map(|r| LockEntry::from_record(r))
        .collect();
    entries.sort();
    Ok(LockSection {
        platform: input.profile.platform,
        index_digest: index_digest(&input.indexes),
        virtual_packages: virtuals
            .iter()
            .map(|v| format!("{}={}={}", v.name, v.version, v.build))
            .collect(),
        entries,
    })
}

/// Archives fetched up front, served to the transaction from memory.
struct Prefetched(BTreeMap<String, Vec<u8>>);

impl ArchiveSource for Prefetched {
    fn fetch(&self, record: &PackageRecord) -> Result<Vec<u8>, EnvError> {
        self.0
            .get(&record.archive_path())
            .cloned()
            .ok_or_else(|| EnvError::ArchiveUnavailable {
                package: record.to_string(),
                reason: "not fetched".into(),
            })
    }
}

/// Installs exactly the entries of one platform section into a new
/// environment at `prefix`, without solving. Every archive is fetched and
/// verified before the prefix is touched.
pub fn install_from_lock(
    lock: &Lockfile,
    platform: Platform,
    prefix: &Path,
    channels: &[ChannelRef],
    timestamp: &str,
) -> Result<EnvironmentState, LockError> {
    let section = lock
        .section(platform)
        .ok_or(LockError::PlatformMissing(platform))?;
    let mut records = Vec::with_capacity(section.entries.len());
    let mut archives = BTreeMap::new();
    for entry in &section.entries {
        let package = entry.pin();
        let unavailable = |reason: String| EnvError::ArchiveUnavailable {
            package: package.clone(),
            reason,
        };
        let channel = channels
            .iter()
            .find(|c| c.name == entry.channel)
            .ok_or_else(|| unavailable(format!("channel `{}` is not configured", entry.channel)))?;
        let path = format!("{}/{}", entry.subdir, entry.filename());
        let bytes = channel
            .locator
            .fetch(&path)
            .map_err(|e| unavailable(e.to_string()))?
            .ok_or_else(|| unavailable(format!("{path} not found in {}", channel.locator)))?;
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return Err(EnvError::DigestMismatch {
                package,
                expected: entry.sha256.clone(),
                actual,
            }
            .into());
        }
        let archive = PackageArchive::from_bytes(&bytes).map_err(|reason| EnvError::MalformedArchive {
            package: package.clone(),
            reason,
        })?;
        records.push(record_from_archive(entry, &archive.index).map_err(|reason| {
            EnvError::MalformedArchive {
                package: package.clone(),
                reason,
            }
        })?);
        archives.insert(path, bytes);
    }
    let plan = plan_exact(prefix, records, channels)?;
    Ok(plan.apply(&Prefetched(archives), timestamp, None)?)
}

fn record_from_archive(entry: &LockEntry, index: &ArchiveIndex) -> Result<PackageRecord, String> {
    if index.name != entry.name || index.version != entry.version || index.build != entry.build {
        return Err(format!(
            "archive describes {}={}={}",
            index.name, index.version, index.build
        ));
    }
    Ok(PackageRecord {
        name: entry.name.clone(),
        version: Version::parse(&entry.version).map_err(|e| e.to_string())?,
        build: entry.build.clone(),
        build_number: index.build_number,
        depends: index
            .depends
            .iter()
            .map(|d| MatchSpec::parse(d).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?,
        channel: entry.channel.clone(),
        platform: entry.subdir,
        filename: entry.filename(),
        sha256: entry.sha256.clone(),
    })
}
