use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{ChannelIndex, PackageRecord, Platform};

/// A visible record together with the priority rank of its channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub record: Arc<PackageRecord>,
    /// Position of the channel in the priority list; 0 is the highest.
    pub rank: usize,
}

/// Preference order between two candidates of the same name: lower rank,
/// newer version, higher build number, platform build before noarch, then
/// build string and file name for a total order.
pub fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.record.version.cmp(&a.record.version))
        .then_with(|| b.record.build_number.cmp(&a.record.build_number))
        .then_with(|| a.record.is_noarch().cmp(&b.record.is_noarch()))
        .then_with(|| a.record.build.cmp(&b.record.build))
        .then_with(|| a.record.filename.cmp(&b.record.filename))
        .then_with(|| a.record.version.to_string().cmp(&b.record.version.to_string()))
}

/// Candidates of several channels for one platform, grouped by name, with
/// strict channel priority applied.
#[derive(Debug, Clone)]
pub struct MergedIndex {
    pub platform: Platform,
    /// Channel names in priority order.
    pub channels: Vec<String>,
    by_name: BTreeMap<String, Vec<Candidate>>,
}

impl MergedIndex {
    pub fn candidates(&self, name: &str) -> &[Candidate] {
        self.by_name.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Candidate])> {
        self.by_name.iter().map(|(n, c)| (n.as_str(), c.as_slice()))
    }

    pub fn record_count(&self) -> usize {
        self.by_name.values().map(Vec::len).sum()
    }

    pub fn rank_of(&self, channel: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == channel)
    }
}

/// Merges indexes given in priority order. Platform and `noarch` indexes of
/// one channel share its rank. A name offered by a higher-priority channel
/// hides every record of that name from lower-priority channels.
///
/// All non-noarch indexes must be for the same platform.
pub fn merge_channels(indexes: &[ChannelIndex]) -> MergedIndex {
    let mut channels: Vec<String> = Vec::new();
    let mut platform = None;
    for idx in indexes {
        if !channels.contains(&idx.channel) {
            channels.push(idx.channel.clone());
        }
        if idx.platform != Platform::NoArch {
            match platform {
                None => platform = Some(idx.platform),
                Some(p) => assert_eq!(p, idx.platform, "indexes for different platforms"),
            }
        }
    }

    let mut by_name: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for idx in indexes {
        let rank = channels.iter().position(|c| *c == idx.channel).unwrap();
        for record in idx.records.values() {
            by_name.entry(record.name.clone()).or_default().push(Candidate {
                record: Arc::clone(record),
                rank,
            });
        }
    }
    for candidates in by_name.values_mut() {
        let best = candidates.iter().map(|c| c.rank).min().unwrap_or(0);
        candidates.retain(|c| c.rank == best);
        candidates.sort_by(candidate_order);
        candidates.dedup_by(|a, b| a.record == b.record);
    }

    MergedIndex {
        platform: platform.unwrap_or(Platform::NoArch),
        channels,
        by_name,
    }
}

/// Channels that contributed a visible record of `name`; at most one under
/// strict priority.
pub fn visible_channels<'a>(index: &'a MergedIndex, name: &str) -> BTreeSet<&'a str> {
    index
        .candidates(name)
        .iter()
        .map(|c| c.record.channel.as_str())
        .collect()
}
