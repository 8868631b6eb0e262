//! Exhaustive reference solver.
//!
//! Deliberately shares nothing with the clause encoding: it walks the index
//! itself, enumerates every assignment of "one candidate or nothing" per
//! reachable name and scores each consistent one directly.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::{Solution, SolveRequest};
use crate::channels::{spec_matches, Candidate, PackageRecord};
use crate::verspec::MatchSpec;

/// Largest number of reachable candidates the oracle will enumerate.
pub const ORACLE_CANDIDATE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("instance has {candidates} reachable candidates, above the limit of {ORACLE_CANDIDATE_LIMIT}")]
pub struct InstanceTooLarge {
    pub candidates: usize,
}

/// `Ok(None)` means unsatisfiable.
pub fn brute_force_solve(request: &SolveRequest<'_>) -> Result<Option<Solution>, InstanceTooLarge> {
    let by_virtual = |spec: &MatchSpec| request.virtual_packages.iter().any(|v| spec_matches(spec, v));
    let matching = |spec: &MatchSpec| -> Vec<&Candidate> {
        request
            .index
            .candidates(&spec.name)
            .iter()
            .filter(|c| spec_matches(spec, c.record.as_ref()))
            .collect()
    };

    // Reachable candidates, by name.
    let mut reached: BTreeMap<String, Vec<&Candidate>> = BTreeMap::new();
    let mut stack: Vec<MatchSpec> = request.specs.iter().chain(&request.pins).cloned().collect();
    let mut visited_specs: BTreeSet<String> = BTreeSet::new();
    while let Some(spec) = stack.pop() {
        if !visited_specs.insert(spec.to_string()) || by_virtual(&spec) {
            continue;
        }
        for c in matching(&spec) {
            let list = reached.entry(c.record.name.clone()).or_default();
            if !list.iter().any(|x| Arc::ptr_eq(&x.record, &c.record)) {
                list.push(c);
                stack.extend(c.record.depends.iter().cloned());
            }
        }
    }
    let total: usize = reached.values().map(Vec::len).sum();
    if total > ORACLE_CANDIDATE_LIMIT {
        return Err(InstanceTooLarge { candidates: total });
    }

    let mut names: Vec<String> = Vec::new();
    for s in &request.specs {
        if reached.contains_key(&s.name) && !names.contains(&s.name) {
            names.push(s.name.clone());
        }
    }
    let mut rest: Vec<String> = reached.keys().filter(|n| !names.contains(n)).cloned().collect();
    rest.sort();
    names.extend(rest);

    // Option costs per name: index 0 = absent.
    let position = |c: &Candidate| {
        request
            .index
            .candidates(&c.record.name)
            .iter()
            .position(|o| Arc::ptr_eq(&o.record, &c.record))
            .unwrap()
    };
    let locked_position = |name: &str| {
        request.index.candidates(name).iter().position(|o| {
            request.locked.iter().any(|l| {
                l.name == o.record.name
                    && l.version == o.record.version
                    && l.build == o.record.build
                    && l.channel == o.record.channel
            })
        })
    };
    let choices: Vec<Vec<Option<&Candidate>>> = names
        .iter()
        .map(|n| {
            std::iter::once(None)
                .chain(reached[n].iter().map(|c| Some(*c)))
                .collect()
        })
        .collect();
    let cost = |ni: usize, choice: Option<&Candidate>| -> usize {
        match choice {
            None => 1,
            Some(c) => {
                let pos = position(c);
                if locked_position(&names[ni]) == Some(pos) {
                    0
                } else {
                    2 + pos
                }
            }
        }
    };

    let consistent = |chosen: &[&Arc<PackageRecord>]| -> bool {
        let ok = |spec: &MatchSpec| by_virtual(spec) || chosen.iter().any(|r| spec_matches(spec, r.as_ref()));
        request.specs.iter().all(ok)
            && request.pins.iter().all(|p| {
                ok(p)
                    && chosen
                        .iter()
                        .filter(|r| r.name == p.name)
                        .all(|r| spec_matches(p, r.as_ref()))
            })
            && chosen.iter().all(|r| r.depends.iter().all(ok))
    };

    let mut best: Option<(Vec<usize>, Vec<Arc<PackageRecord>>)> = None;
    let mut odometer = vec![0usize; names.len()];
    loop {
        let picked: Vec<Option<&Candidate>> = odometer
            .iter()
            .enumerate()
            .map(|(ni, &k)| choices[ni][k])
            .collect();
        let chosen: Vec<&Arc<PackageRecord>> = picked.iter().flatten().map(|c| &c.record).collect();
        if consistent(&chosen) {
            let costs: Vec<usize> = picked.iter().enumerate().map(|(ni, c)| cost(ni, *c)).collect();
            let better = match &best {
                None => true,
                Some((b, _)) => costs.cmp(b) == Ordering::Less,
            };
            if better {
                best = Some((costs, chosen.into_iter().cloned().collect()));
            }
        }

        // Advance the odometer.
        let mut i = 0;
        loop {
            if i == names.len() {
                return Ok(best.map(|(_, records)| Solution::new(records)));
            }
            odometer[i] += 1;
            if odometer[i] < choices[i].len() {
                break;
            }
            odometer[i] = 0;
            i += 1;
        }
    }
}
