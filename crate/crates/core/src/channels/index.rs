use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChannelError, Locator, PackageRecord, Platform};
use crate::verspec::{MatchSpec, Version};

/// Name of the per-platform index document.
pub const REPODATA: &str = "repodata.json";

/// All records one channel offers for one platform.
#[derive(Debug, Clone)]
pub struct ChannelIndex {
    pub channel: String,
    pub platform: Platform,
    pub records: BTreeMap<String, Arc<PackageRecord>>,
    /// sha256 of the index document the records were read from.
    pub digest: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RepoData {
    pub info: RepoInfo,
    pub packages: BTreeMap<String, RepoRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RepoInfo {
    pub subdir: Platform,
}

/// A record as it appears in an index document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepoRecord {
    pub name: String,
    pub version: String,
    pub build: String,
    pub build_number: u64,
    #[serde(default)]
    pub depends: Vec<String>,
    pub sha256: String,
}

impl RepoRecord {
    pub fn from_record(record: &PackageRecord) -> Self {
        RepoRecord {
            name: record.name.clone(),
            version: record.version.to_string(),
            build: record.build.clone(),
            build_number: record.build_number,
            depends: record.depends.iter().map(|d| d.to_string()).collect(),
            sha256: record.sha256.clone(),
        }
    }

    /// Validates the entry and turns it into a record of `channel`.
    pub fn into_record(
        self,
        filename: &str,
        channel: &str,
        platform: Platform,
    ) -> Result<PackageRecord, String> {
        if self.name.is_empty() || !self.name.chars().all(crate::verspec::is_name_char) {
            return Err(format!("invalid package name `{}`", self.name));
        }
        let version = Version::parse(&self.version).map_err(|e| e.to_string())?;
        let expected = PackageRecord::expected_filename(&self.name, &self.version, &self.build);
        if filename != expected {
            return Err(format!("file name does not match `{expected}`"));
        }
        let depends = self
            .depends
            .iter()
            .map(|d| MatchSpec::parse(d).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        if self.sha256.len() != 64 || !self.sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err("sha256 is not a 64 digit hex string".into());
        }
        Ok(PackageRecord {
            name: self.name,
            version,
            build: self.build,
            build_number: self.build_number,
            depends,
            channel: channel.to_string(),
            platform,
            filename: filename.to_string(),
            sha256: self.sha256.to_ascii_lowercase(),
        })
    }
}

impl ChannelIndex {
    pub fn empty(channel: &str, platform: Platform) -> Self {
        ChannelIndex {
            channel: channel.to_string(),
            platform,
            records: BTreeMap::new(),
            digest: hex::encode(Sha256::digest(b"")),
        }
    }

    /// Parses an index document. Any record failing validation rejects the
    /// whole document, naming the offending entry.
    pub fn from_document(bytes: &[u8], channel: &str, platform: Platform) -> Result<Self, ChannelError> {
        let malformed = |entry: Option<&str>, reason: String| ChannelError::MalformedIndex {
            channel: channel.to_string(),
            platform,
            entry: entry.map(str::to_string),
            reason,
        };
        let doc: RepoData = serde_json::from_slice(bytes).map_err(|e| malformed(None, e.to_string()))?;
        if doc.info.subdir != platform {
            return Err(malformed(
                None,
                format!("document is for {} not {platform}", doc.info.subdir),
            ));
        }
        let mut records = BTreeMap::new();
        for (filename, raw) in doc.packages {
            let record = raw
                .into_record(&filename, channel, platform)
                .map_err(|reason| malformed(Some(&filename), reason))?;
            records.insert(filename, Arc::new(record));
        }
        Ok(ChannelIndex {
            channel: channel.to_string(),
            platform,
            records,
            digest: hex::encode(Sha256::digest(bytes)),
        })
    }

    pub fn to_document(&self) -> RepoData {
        RepoData {
            info: RepoInfo {
                subdir: self.platform,
            },
            packages: self
                .records
                .iter()
                .map(|(f, r)| (f.clone(), RepoRecord::from_record(r)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Loads `<platform>/repodata.json` from `source`.
pub fn load_index(source: &Locator, channel: &str, platform: Platform) -> Result<ChannelIndex, ChannelError> {
    let relative = format!("{platform}/{REPODATA}");
    match source.fetch(&relative)? {
        Some(bytes) => ChannelIndex::from_document(&bytes, channel, platform),
        None => Err(ChannelError::SourceUnreachable {
            locator: source.to_string(),
            reason: format!("{relative} not found"),
        }),
    }
}

/// Like [`load_index`] but a missing document yields an empty index. Used
/// for `noarch`, which channels may omit.
pub fn load_index_or_empty(
    source: &Locator,
    channel: &str,
    platform: Platform,
) -> Result<ChannelIndex, ChannelError> {
    let relative = format!("{platform}/{REPODATA}");
    match source.fetch(&relative)? {
        Some(bytes) => ChannelIndex::from_document(&bytes, channel, platform),
        None => Ok(ChannelIndex::empty(channel, platform)),
    }
}

/// Loads the platform and `noarch` indexes of every channel, in priority
/// order, one thread per (channel, platform) pair.
pub fn load_channels(
    channels: &[(String, Locator)],
    platform: Platform,
) -> Result<Vec<ChannelIndex>, ChannelError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = channels
            .iter()
            .flat_map(|(name, loc)| {
                let platform_job = scope.spawn(move || load_index(loc, name, platform));
                let noarch_job = (platform != Platform::NoArch)
                    .then(|| scope.spawn(move || load_index_or_empty(loc, name, Platform::NoArch)));
                std::iter::once(platform_job).chain(noarch_job)
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("index loader panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHA: &str = "0000000000000000000000000000000000000000000000000000000000000000";

    fn doc(depends: &str) -> String {
        format!(
            r#"{{"info": {{"subdir": "linux-64"}}, "packages": {{
                "a-1.0-h0.tar": {{"name": "a", "version": "1.0", "build": "h0", "build_number": 0, "depends": [{depends}], "sha256": "{SHA}"}}
            }}}}"#
        )
    }

    #[test]
    fn parses_valid_document() {
        let idx = ChannelIndex::from_document(doc(r#""b >=2""#).as_bytes(), "c", Platform::Linux64).unwrap();
        assert_eq!(idx.len(), 1);
        let rec = &idx.records["a-1.0-h0.tar"];
        assert_eq!(rec.channel, "c");
        assert_eq!(rec.depends[0].to_string(), "b>=2");
    }

    #[test]
    fn empty_document() {
        let idx = ChannelIndex::from_document(
            br#"{"info": {"subdir": "win-64"}, "packages": {}}"#,
            "c",
            Platform::Win64,
        )
        .unwrap();
        assert!(idx.is_empty());
    }

    #[test]
    fn malformed_dependency_names_the_record() {
        let err = ChannelIndex::from_document(doc(r#""pyth on==""#).as_bytes(), "c", Platform::Linux64)
            .unwrap_err();
        match err {
            ChannelError::MalformedIndex { entry, .. } => {
                assert_eq!(entry.as_deref(), Some("a-1.0-h0.tar"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn filename_must_match_record() {
        let bad = doc("").replace("a-1.0-h0.tar", "a-1.1-h0.tar");
        assert!(matches!(
            ChannelIndex::from_document(bad.as_bytes(), "c", Platform::Linux64),
            Err(ChannelError::MalformedIndex { entry: Some(_), .. })
        ));
    }

    #[test]
    fn wrong_subdir_is_rejected() {
        assert!(ChannelIndex::from_document(doc("").as_bytes(), "c", Platform::Win64).is_err());
    }

    #[test]
    fn missing_directory_is_unreachable() {
        let loc = Locator::dir("/nonexistent/channel/dir");
        assert!(matches!(
            load_index(&loc, "x", Platform::Linux64),
            Err(ChannelError::SourceUnreachable { .. })
        ));
    }
}
