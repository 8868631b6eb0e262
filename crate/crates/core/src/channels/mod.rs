//! Channels, per-platform index documents, strict-priority merging and
//! virtual system packages.

mod index;
mod locator;
mod merge;
mod platform;
mod record;
mod virtual_pkg;

use thiserror::Error;

pub use index::{
    load_channels, load_index, load_index_or_empty, ChannelIndex, RepoData, RepoInfo, RepoRecord, REPODATA,
};
pub use locator::Locator;
pub use merge::{candidate_order, merge_channels, visible_channels, Candidate, MergedIndex};
pub use platform::Platform;
pub use record::{spec_matches, Matchable, PackageRecord, VirtualPackage, ARCHIVE_EXTENSION};
pub use virtual_pkg::{detect_virtual_packages, PlatformProfile};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel source `{locator}` unreachable: {reason}")]
    SourceUnreachable { locator: String, reason: String },
    #[error("malformed index for {channel}/{platform}{}: {reason}", entry.as_ref().map(|e| format!(" (entry {e})")).unwrap_or_default())]
    MalformedIndex {
        channel: String,
        platform: Platform,
        entry: Option<String>,
        reason: String,
    },
    #[error("unknown platform `{0}`")]
    UnknownPlatform(String),
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::verspec::Version;

    fn rec(channel: &str, platform: Platform, name: &str, version: &str, bn: u64) -> PackageRecord {
        let build = format!("h{bn}");
        PackageRecord {
            name: name.into(),
            version: Version::parse(version).unwrap(),
            filename: PackageRecord::expected_filename(name, version, &build),
            build,
            build_number: bn,
            depends: vec![],
            channel: channel.into(),
            platform,
            sha256: "0".repeat(64),
        }
    }

    fn index(channel: &str, platform: Platform, recs: Vec<PackageRecord>) -> ChannelIndex {
        let records: BTreeMap<_, _> = recs
            .into_iter()
            .map(|r| (r.filename.clone(), Arc::new(r)))
            .collect();
        ChannelIndex {
            channel: channel.into(),
            platform,
            records,
            digest: String::new(),
        }
    }

    #[test]
    fn strict_priority_shadows_lower_channels() {
        let robostack = index(
            "robostack",
            Platform::Linux64,
            vec![rec("robostack", Platform::Linux64, "x", "1.0", 0)],
        );
        let forge = index(
            "conda-forge",
            Platform::Linux64,
            vec![rec("conda-forge", Platform::Linux64, "x", "2.0", 0)],
        );
        let merged = merge_channels(&[robostack.clone(), forge.clone()]);
        let visible: Vec<_> = merged
            .candidates("x")
            .iter()
            .map(|c| c.record.version.to_string())
            .collect();
        assert_eq!(visible, ["1.0"]);
        assert_eq!(merged.candidates("x")[0].rank, 0);

        let reversed = merge_channels(&[forge, robostack]);
        let visible: Vec<_> = reversed
            .candidates("x")
            .iter()
            .map(|c| c.record.version.to_string())
            .collect();
        assert_eq!(visible, ["2.0"]);
    }

    #[test]
    fn single_channel_is_identity() {
        let recs = vec![
            rec("c", Platform::Linux64, "a", "1.0", 0),
            rec("c", Platform::Linux64, "a", "1.1", 0),
            rec("c", Platform::Linux64, "b", "3", 2),
        ];
        let merged = merge_channels(&[index("c", Platform::Linux64, recs.clone())]);
        assert_eq!(merged.record_count(), recs.len());
        let versions: Vec<_> = merged
            .candidates("a")
            .iter()
            .map(|c| c.record.version.to_string())
            .collect();
        assert_eq!(versions, ["1.1", "1.0"]);
    }

    #[test]
    fn lower_channel_fills_missing_names() {
        let a = index("a", Platform::Win64, vec![rec("a", Platform::Win64, "x", "1", 0)]);
        let b = index("b", Platform::Win64, vec![rec("b", Platform::Win64, "y", "1", 0)]);
        let merged = merge_channels(&[a, b]);
        assert_eq!(merged.candidates("y").len(), 1);
        assert_eq!(merged.candidates("y")[0].rank, 1);
    }

    #[test]
    fn noarch_shares_rank_and_sorts_after_platform_build() {
        let plat = index(
            "c",
            Platform::Linux64,
            vec![rec("c", Platform::Linux64, "p", "1.0", 0)],
        );
        let noarch = index(
            "c",
            Platform::NoArch,
            vec![rec("c", Platform::NoArch, "p", "1.0", 0)],
        );
        let merged = merge_channels(&[noarch, plat]);
        assert_eq!(merged.platform, Platform::Linux64);
        let c = merged.candidates("p");
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].record.platform, Platform::Linux64);
        assert_eq!(c[1].record.platform, Platform::NoArch);
    }

    #[test]
    fn order_is_independent_of_record_iteration() {
        let recs = vec![
            rec("c", Platform::Linux64, "a", "1.0", 0),
            rec("c", Platform::Linux64, "a", "1.0", 3),
            rec("c", Platform::Linux64, "a", "2.0", 1),
        ];
        let mut reversed = recs.clone();
        reversed.reverse();
        let m1 = merge_channels(&[index("c", Platform::Linux64, recs)]);
        let m2 = merge_channels(&[index("c", Platform::Linux64, reversed)]);
        assert_eq!(m1.candidates("a"), m2.candidates("a"));
        let bns: Vec<_> = m1.candidates("a").iter().map(|c| c.record.build_number).collect();
        assert_eq!(bns, [1, 3, 0]);
    }

    #[test]
    fn virtual_packages_from_profile() {
        let linux = PlatformProfile::new(Platform::Linux64).with_glibc(Version::parse("2.12").unwrap());
        let vps = detect_virtual_packages(&linux);
        assert_eq!(vps.len(), 1);
        assert_eq!(vps[0].name, "__glibc");
        assert_eq!(vps[0].version.to_string(), "2.12");

        let win = detect_virtual_packages(&PlatformProfile::new(Platform::Win64));
        assert_eq!(
            win,
            vec![VirtualPackage::new("__win", Version::parse("0").unwrap())]
        );

        let osx = PlatformProfile::new(Platform::OsxArm64).with_osx(Version::parse("11.0").unwrap());
        assert_eq!(detect_virtual_packages(&osx)[0].name, "__osx");
        assert!(detect_virtual_packages(&PlatformProfile::new(Platform::NoArch)).is_empty());
    }
}
