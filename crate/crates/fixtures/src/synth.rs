//! Seeded random solver instances.

use std::collections::BTreeMap;
use std::sync::Arc;

use pkgstack_core::channels::{merge_channels, ChannelIndex, MergedIndex, PackageRecord, Platform};
use pkgstack_core::solver::ORACLE_CANDIDATE_LIMIT;
use pkgstack_core::verspec::{MatchSpec, Version};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const SYNTH_CHANNEL: &str = "synth";

#[derive(Debug, Clone)]
pub struct Instance {
    pub records: Vec<PackageRecord>,
    pub specs: Vec<MatchSpec>,
    /// Built so that no solution can exist.
    pub engineered_unsat: bool,
}

impl Instance {
    pub fn index(&self) -> MergedIndex {
        let records: BTreeMap<_, _> = self
            .records
            .iter()
            .map(|r| (r.filename.clone(), Arc::new(r.clone())))
            .collect();
        merge_channels(&[ChannelIndex {
            channel: SYNTH_CHANNEL.into(),
            platform: Platform::Linux64,
            records,
            digest: String::new(),
        }])
    }
}

pub fn record(name: &str, version: &str, build_number: u64, depends: Vec<MatchSpec>) -> PackageRecord {
    let build = format!("h{build_number}");
    PackageRecord {
        name: name.into(),
        version: Version::parse(version).expect("synthetic version parses"),
        filename: PackageRecord::expected_filename(name, version, &build),
        build,
        build_number,
        depends,
        channel: SYNTH_CHANNEL.into(),
        platform: Platform::Linux64,
        sha256: "0".repeat(64),
    }
}

fn spec(text: &str) -> MatchSpec {
    MatchSpec::parse(text).expect("synthetic spec parses")
}

/// A random dependency on `target`: bare, lower-bounded or upper-bounded.
fn random_dep(rng: &mut StdRng, target: &str, versions: usize) -> MatchSpec {
    let k = rng.random_range(1..=versions.max(1));
    match rng.random_range(0..3) {
        0 => spec(target),
        1 => spec(&format!("{target} >={k}.0")),
        _ => spec(&format!("{target} <{}.0", k + 1)),
    }
}

/// Small instances the exhaustive oracle can check: at most 8 names, 4
/// versions each and [`ORACLE_CANDIDATE_LIMIT`] records overall. About 30%
/// are made unsatisfiable on purpose: every record of the first name needs
/// `c <k`, every record of the second needs `c >=k`, and both are requested.
pub fn oracle_instance(rng: &mut StdRng) -> Instance {
    let n = rng.random_range(3..=8);
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut counts: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
    while counts.iter().sum::<usize>() > ORACLE_CANDIDATE_LIMIT {
        let max = (0..n).max_by_key(|&i| (counts[i], i)).expect("non-empty");
        counts[max] -= 1;
    }
    let engineered_unsat = rng.random_bool(0.3);
    let split = if engineered_unsat {
        // `c` needs two versions for the bound to cut between them.
        counts[2] = counts[2].max(2);
        while counts.iter().sum::<usize>() > ORACLE_CANDIDATE_LIMIT {
            let i = (3..n).max_by_key(|&i| (counts[i], i)).expect("names beyond c");
            counts[i] -= 1;
        }
        rng.random_range(2..=counts[2])
    } else {
        0
    };

    let mut records = Vec::new();
    for (i, name) in names.iter().enumerate() {
        for v in 1..=counts[i] {
            let mut depends = Vec::new();
            for (j, other) in names.iter().enumerate() {
                if j != i && rng.random_bool(0.25) {
                    depends.push(random_dep(rng, other, counts[j]));
                }
            }
            if engineered_unsat && i < 2 {
                depends.retain(|d| d.name != names[2]);
                let op = if i == 0 { "<" } else { ">=" };
                depends.push(spec(&format!("{} {op}{split}.0", names[2])));
            }
            records.push(record(name, &format!("{v}.0"), 0, depends));
        }
    }

    let mut specs = Vec::new();
    if engineered_unsat {
        specs.push(spec(&names[0]));
        specs.push(spec(&names[1]));
    } else {
        for (j, name) in names.iter().enumerate() {
            if specs.is_empty() || rng.random_bool(0.25) {
                if rng.random_bool(0.5) || specs.is_empty() {
                    specs.push(spec(name));
                } else {
                    specs.push(random_dep(rng, name, counts[j]));
                }
            }
        }
    }
    Instance {
        records,
        specs,
        engineered_unsat,
    }
}

pub fn oracle_instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| oracle_instance(&mut rng)).collect()
}

/// A large satisfiable index: `records` records spread over `names` names,
/// each depending on up to three later names. Versions run `1.0` to `4.x`
/// and every bound admits the `3.x` range, so a solution always exists,
/// though the newest versions are often excluded.
pub fn scale_instance(seed: u64, records: usize, names: usize, requested: usize) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let name_of = |i: usize| format!("pkg{i:03}");
    let mut out = Vec::with_capacity(records);
    for i in 0..names {
        let count = records / names + usize::from(i < records % names);
        for v in 0..count {
            let version = format!("{}.{}", v * 4 / count.max(1) + 1, v % 8);
            let mut depends = Vec::new();
            if i + 1 < names {
                for _ in 0..rng.random_range(0..=3) {
                    let j = rng.random_range(i + 1..names);
                    let target = name_of(j);
                    let dep = match rng.random_range(0..3) {
                        0 => spec(&target),
                        1 => spec(&format!("{target} >={}", rng.random_range(1..=3))),
                        _ => spec(&format!("{target} <{}", rng.random_range(4..=5))),
                    };
                    if depends.iter().all(|d: &MatchSpec| d.name != dep.name) {
                        depends.push(dep);
                    }
                }
            }
            out.push(record(&name_of(i), &version, v as u64, depends));
        }
    }
    let mut chosen: Vec<usize> = (0..names).collect();
    for k in 0..requested.min(names) {
        let pick = rng.random_range(k..names);
        chosen.swap(k, pick);
    }
    chosen.truncate(requested);
    chosen.sort_unstable();
    Instance {
        records: out,
        specs: chosen.into_iter().map(|i| spec(&name_of(i))).collect(),
        engineered_unsat: false,
    }
}
