//! Whole operations: resolve a request against channels and turn the result
//! into a transaction on a prefix.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use super::transaction::{
    apply_transaction, plan_transaction, ApplyOptions, ArchiveSource, StepHook, Transaction,
};
use super::{ChannelRef, EnvError, EnvironmentState};
use crate::channels::{
    detect_virtual_packages, load_channels, merge_channels, spec_matches, MergedIndex, PackageRecord,
    PlatformProfile,
};
use crate::solver::{solve, ConflictNode, Solution, SolveError, SolveRequest, UnsatExplanation};
use crate::verspec::MatchSpec;

/// Loads and merges the channels for one platform.
pub fn load_merged_index(
    channels: &[ChannelRef],
    profile: &PlatformProfile,
) -> Result<MergedIndex, EnvError> {
    let pairs: Vec<_> = channels
        .iter()
        .map(|c| (c.name.clone(), c.locator.clone()))
        .collect();
    let indexes = load_channels(&pairs, profile.platform)?;
    Ok(merge_channels(&indexes))
}

/// A resolved change to an environment, ready to apply or to show.
#[derive(Debug, Clone)]
pub struct Plan {
    pub action: String,
    pub state: EnvironmentState,
    pub solution: Solution,
    pub transaction: Transaction,
    pub requested: Vec<MatchSpec>,
    pub pins: Vec<MatchSpec>,
    pub channels: Vec<ChannelRef>,
}

impl Plan {
    pub fn apply(
        &self,
        source: &dyn ArchiveSource,
        timestamp: &str,
        hook: Option<StepHook<'_>>,
    ) -> Result<EnvironmentState, EnvError> {
        let opts = ApplyOptions {
            action: self.action.clone(),
            timestamp: timestamp.to_string(),
            requested: self.requested.clone(),
            pins: self.pins.clone(),
            channels: self.channels.clone(),
            hook,
        };
        apply_transaction(&self.state, &self.transaction, source, &opts)
    }
}

/// `existing` with each spec of `new` replacing the one of the same name.
pub fn merge_specs(existing: &[MatchSpec], new: &[MatchSpec]) -> Vec<MatchSpec> {
    let mut out = existing.to_vec();
    for spec in new {
        match out.iter_mut().find(|s| s.name == spec.name) {
            Some(slot) => *slot = spec.clone(),
            None => out.push(spec.clone()),
        }
    }
    out
}

fn ensure_fresh_prefix(prefix: &Path) -> Result<(), EnvError> {
    match std::fs::read_dir(prefix) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                Err(EnvError::EnvironmentExists(prefix.to_path_buf()))
            } else {
                Ok(())
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(EnvError::io(prefix, e)),
    }
}

/// Plans a new environment at `prefix` holding the best solution for
/// `specs`. Nothing is written.
pub fn plan_create(
    prefix: &Path,
    specs: &[MatchSpec],
    pins: &[MatchSpec],
    channels: &[ChannelRef],
    profile: &PlatformProfile,
) -> Result<Plan, EnvError> {
    ensure_fresh_prefix(prefix)?;
    let index = load_merged_index(channels, profile)?;
    let requested = merge_specs(&[], specs);
    let request = SolveRequest::new(requested.clone(), &index)
        .with_virtual_packages(detect_virtual_packages(profile))
        .with_pins(pins.to_vec());
    let solution = solve(&request)?;
    let state = EnvironmentState::empty(prefix);
    let transaction = plan_transaction(&state, &solution)?;
    Ok(Plan {
        action: "create".into(),
        state,
        solution,
        transaction,
        requested,
        pins: pins.to_vec(),
        channels: channels.to_vec(),
    })
}

/// Plans adding `specs` to an environment. Installed records are kept
/// unless the new request needs them changed.
pub fn plan_install(
    state: &EnvironmentState,
    specs: &[MatchSpec],
    pins: &[MatchSpec],
    profile: &PlatformProfile,
) -> Result<Plan, EnvError> {
    let index = load_merged_index(&state.channels, profile)?;
    let requested = merge_specs(&state.requested, specs);
    let pins = merge_specs(&state.pins, pins);
    let request = SolveRequest::new(requested.clone(), &index)
        .with_virtual_packages(detect_virtual_packages(profile))
        .with_pins(pins.clone())
        .with_locked(state.records()?);
    let solution = solve(&request)?;
    let transaction = plan_transaction(state, &solution)?;
    Ok(Plan {
        action: "install".into(),
        state: state.clone(),
        solution,
        transaction,
        requested,
        pins,
        channels: state.channels.clone(),
    })
}

/// Installed records that (transitively) depend on any of `names`,
/// together with the records named.
pub fn reverse_dependency_closure(installed: &[PackageRecord], names: &BTreeSet<String>) -> BTreeSet<String> {
    let mut closure = names.clone();
    loop {
        let before = closure.len();
        for r in installed {
            if closure.contains(&r.name) {
                continue;
            }
            let needs_removed = r.depends.iter().any(|d| {
                installed
                    .iter()
                    .any(|o| closure.contains(&o.name) && spec_matches(d, o))
            });
            if needs_removed {
                closure.insert(r.name.clone());
            }
        }
        if closure.len() == before {
            return closure;
        }
    }
}

/// Plans removing `names` along with everything depending on them, then
/// dropping dependencies nothing requested still needs.
pub fn plan_remove(
    state: &EnvironmentState,
    names: &[String],
    profile: &PlatformProfile,
) -> Result<Plan, EnvError> {
    let installed = state.records()?;
    for n in names {
        if !installed.iter().any(|r| &r.name == n) {
            return Err(EnvError::PackageNotInstalled(n.clone()));
        }
    }
    let closure = reverse_dependency_closure(&installed, &names.iter().cloned().collect());
    let pinned: Vec<&MatchSpec> = state.pins.iter().filter(|p| closure.contains(&p.name)).collect();
    if !pinned.is_empty() {
        let roots = pinned
            .into_iter()
            .map(|p| ConflictNode {
                spec: p.to_string(),
                note: Some("pinned, but the removal takes it out".into()),
                candidates: Vec::new(),
                elided: false,
            })
            .collect();
        return Err(SolveError::Unsatisfiable(UnsatExplanation { roots }).into());
    }

    let index = load_merged_index(&state.channels, profile)?;
    let requested: Vec<MatchSpec> = state
        .requested
        .iter()
        .filter(|s| !closure.contains(&s.name))
        .cloned()
        .collect();
    let locked: Vec<PackageRecord> = installed
        .iter()
        .filter(|r| !closure.contains(&r.name))
        .cloned()
        .collect();
    let virtuals = detect_virtual_packages(profile);
    let request = SolveRequest::new(requested.clone(), &index)
        .with_virtual_packages(virtuals)
        .with_pins(state.pins.clone())
        .with_locked(locked);
    let solved = solve(&request)?;
    let solution = prune_orphans(&solved, requested.iter().chain(&state.pins));
    let transaction = plan_transaction(state, &solution)?;
    Ok(Plan {
        action: "remove".into(),
        state: state.clone(),
        solution,
        transaction,
        requested,
        pins: state.pins.clone(),
        channels: state.channels.clone(),
    })
}

/// Keeps the records reachable from `roots` through dependencies.
fn prune_orphans<'a>(solution: &Solution, roots: impl Iterator<Item = &'a MatchSpec>) -> Solution {
    let mut keep: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<&MatchSpec> = roots.collect();
    while let Some(spec) = stack.pop() {
        for r in &solution.records {
            if spec_matches(spec, r.as_ref()) && keep.insert(r.name.clone()) {
                stack.extend(r.depends.iter());
            }
        }
    }
    Solution::new(
        solution
            .records
            .iter()
            .filter(|r| keep.contains(&r.name))
            .cloned()
            .collect(),
    )
}

/// Plans a new environment holding exactly `records`, without solving.
pub fn plan_exact(
    prefix: &Path,
    records: Vec<PackageRecord>,
    channels: &[ChannelRef],
) -> Result<Plan, EnvError> {
    ensure_fresh_prefix(prefix)?;
    let requested = records.iter().map(|r| MatchSpec::named(&r.name)).collect();
    let solution = Solution::new(records.into_iter().map(Arc::new).collect());
    let state = EnvironmentState::empty(prefix);
    let transaction = plan_transaction(&state, &solution)?;
    Ok(Plan {
        action: "install-lock".into(),
        state,
        solution,
        transaction,
        requested,
        pins: Vec::new(),
        channels: channels.to_vec(),
    })
}
