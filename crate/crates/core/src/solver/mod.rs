//! Dependency resolution.
//!
//! A request is encoded as clauses over one boolean variable per reachable
//! candidate record and handed to a CDCL SAT engine. The engine is then
//! queried with assumptions, one package name at a time in objective order,
//! to reach the lexicographically best solution:
//!
//! * names are ranked requested names first (in request order), then the
//!   other reachable names alphabetically;
//! * for each name the options rank: the locked (installed) record, then
//!   leaving the name out, then the candidates in channel preference order
//!   (channel rank, newer version, higher build number, platform before
//!   noarch).

mod encode;
mod explain;
mod oracle;
pub mod sat;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::channels::{spec_matches, Matchable, MergedIndex, PackageRecord, VirtualPackage};
use crate::verspec::MatchSpec;

pub use encode::{Clause, ClauseKind, ClauseSet, Variable};
pub use explain::{CandidateNode, ConflictNode, Exclusion, UnsatExplanation, MAX_EXPLAIN_DEPTH};
pub use oracle::{brute_force_solve, InstanceTooLarge, ORACLE_CANDIDATE_LIMIT};
use sat::{Lit, SatSolver};

pub(crate) use encode::Problem;

/// Everything a solve depends on.
#[derive(Debug, Clone)]
pub struct SolveRequest<'a> {
    pub specs: Vec<MatchSpec>,
    pub index: &'a MergedIndex,
    pub virtual_packages: Vec<VirtualPackage>,
    /// Hard constraints: a matching record must be in the solution.
    pub pins: Vec<MatchSpec>,
    /// Installed records, kept at their exact build unless excluded.
    pub locked: Vec<PackageRecord>,
}

impl<'a> SolveRequest<'a> {
    pub fn new(specs: Vec<MatchSpec>, index: &'a MergedIndex) -> Self {
        SolveRequest {
            specs,
            index,
            virtual_packages: Vec::new(),
            pins: Vec::new(),
            locked: Vec::new(),
        }
    }

    pub fn with_virtual_packages(mut self, vps: Vec<VirtualPackage>) -> Self {
        self.virtual_packages = vps;
        self
    }

    pub fn with_pins(mut self, pins: Vec<MatchSpec>) -> Self {
        self.pins = pins;
        self
    }

    pub fn with_locked(mut self, locked: Vec<PackageRecord>) -> Self {
        self.locked = locked;
        self
    }
}

/// Something that satisfies dependencies without being a candidate: a
/// virtual package, or a record fixed while explaining a failure.
#[derive(Debug, Clone)]
pub(crate) enum Provided {
    Virtual(VirtualPackage),
    Fixed(Arc<PackageRecord>),
}

impl Provided {
    pub fn matches(&self, spec: &MatchSpec) -> bool {
        match self {
            Provided::Virtual(v) => spec_matches(spec, v),
            Provided::Fixed(r) => spec_matches(spec, r.as_ref()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Provided::Virtual(v) => &v.name,
            Provided::Fixed(r) => &r.name,
        }
    }
}

/// A consistent set of records, at most one per name, sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Solution {
    pub records: Vec<Arc<PackageRecord>>,
}

impl Solution {
    pub fn new(mut records: Vec<Arc<PackageRecord>>) -> Self {
        records.sort_by(|a, b| a.name.cmp(&b.name));
        Solution { records }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn get(&self, name: &str) -> Option<&Arc<PackageRecord>> {
        self.records.iter().find(|r| r.name == name)
    }

    /// `(name, version, build, channel)` of every record.
    pub fn identities(&self) -> Vec<(String, String, String, String)> {
        self.records
            .iter()
            .map(|r| {
                (
                    r.name.clone(),
                    r.version.to_string(),
                    r.build.clone(),
                    r.channel.clone(),
                )
            })
            .collect()
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("no candidates for: {}", .0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "))]
    NoCandidates(Vec<MatchSpec>),
    #[error("the request cannot be satisfied:\n{0}")]
    Unsatisfiable(UnsatExplanation),
}

impl SolveError {
    /// Explanation tree for either failure kind.
    pub fn explanation(&self) -> UnsatExplanation {
        match self {
            SolveError::NoCandidates(specs) => UnsatExplanation::no_candidates(specs),
            SolveError::Unsatisfiable(e) => e.clone(),
        }
    }
}

/// Boolean encoding of `request`. Fails if a requested spec or pin has no
/// candidate at all.
pub fn encode(request: &SolveRequest<'_>) -> Result<ClauseSet, SolveError> {
    Problem::from_request(request).encode()
}

/// The lexicographically best solution of `request`, or an explanation of
/// why none exists.
pub fn solve(request: &SolveRequest<'_>) -> Result<Solution, SolveError> {
    let problem = Problem::from_request(request);
    let clauses = problem.encode()?;
    match optimize(&clauses) {
        Some(solution) => {
            debug_assert!(
                validate_solution(request, &solution).is_ok(),
                "solver produced an invalid solution"
            );
            Ok(solution)
        }
        None => Err(SolveError::Unsatisfiable(explain::explain(&problem))),
    }
}

/// Satisfiability only, without optimization.
pub(crate) fn is_satisfiable(problem: &Problem<'_>) -> bool {
    if !problem.specs_without_candidates().is_empty() {
        return false;
    }
    let clauses = problem.encode_unchecked();
    let (mut sat, _) = build_sat(&clauses);
    sat.solve(&[]).is_some()
}

/// Builds the SAT instance: candidate variables, then one "absent" variable
/// per name. The decision order walks names in objective order and, within
/// a name, the options best first.
fn build_sat(clauses: &ClauseSet) -> (SatSolver, Vec<usize>) {
    let num_candidates = clauses.variables.len();
    let absent: Vec<usize> = (0..clauses.names.len()).map(|i| num_candidates + i).collect();
    let mut order = Vec::with_capacity(num_candidates + absent.len());
    for (ni, vars) in clauses.by_name.iter().enumerate() {
        if let Some(l) = clauses.locked[ni] {
            order.push(l);
        }
        order.push(absent[ni]);
        order.extend(vars.iter().copied());
    }
    let mut sat = SatSolver::new(num_candidates + absent.len(), &order);
    for c in &clauses.clauses {
        sat.add_clause(&c.literals);
    }
    for (ni, vars) in clauses.by_name.iter().enumerate() {
        let a = absent[ni];
        let mut any = vec![Lit::pos(a)];
        for &v in vars {
            sat.add_clause(&[Lit::neg(a), Lit::neg(v)]);
            any.push(Lit::pos(v));
        }
        sat.add_clause(&any);
    }
    (sat, absent)
}

/// Per-name options in preference order, as literals.
fn options(clauses: &ClauseSet, absent: &[usize], ni: usize) -> Vec<Lit> {
    let mut opts = Vec::new();
    let locked = clauses.locked[ni];
    if let Some(l) = locked {
        opts.push(Lit::pos(l));
    }
    opts.push(Lit::pos(absent[ni]));
    opts.extend(
        clauses.by_name[ni]
            .iter()
            .filter(|&&v| Some(v) != locked)
            .map(|&v| Lit::pos(v)),
    );
    opts
}

fn optimize(clauses: &ClauseSet) -> Option<Solution> {
    let (mut sat, absent) = build_sat(clauses);
    let mut model = sat.solve(&[])?;
    let mut fixed: Vec<Lit> = Vec::with_capacity(clauses.names.len());
    for ni in 0..clauses.names.len() {
        let opts = options(clauses, &absent, ni);
        let current = opts
            .iter()
            .position(|l| model[l.var()])
            .expect("every name has exactly one option set");
        let mut chosen = opts[current];
        for &better in &opts[..current] {
            fixed.push(better);
            let found = sat.solve(&fixed);
            fixed.pop();
            if let Some(m) = found {
                model = m;
                chosen = better;
                break;
            }
        }
        fixed.push(chosen);
    }
    let records = (0..clauses.variables.len())
        .filter(|&v| model[v])
        .map(|v| Arc::clone(clauses.record(v)))
        .collect();
    Some(Solution::new(records))
}

/// Checks the three solution invariants: one record per name, every spec
/// and pin matched, every dependency matched by a record or virtual package.
pub fn validate_records(
    specs: &[MatchSpec],
    pins: &[MatchSpec],
    virtual_packages: &[VirtualPackage],
    records: &[Arc<PackageRecord>],
) -> Result<(), Vec<String>> {
    let mut problems = Vec::new();
    let mut by_name: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *by_name.entry(&r.name).or_default() += 1;
    }
    for (name, n) in by_name {
        if n > 1 {
            problems.push(format!("{n} records named {name}"));
        }
    }
    let satisfied = |spec: &MatchSpec| {
        records.iter().any(|r| spec_matches(spec, r.as_ref()))
            || virtual_packages.iter().any(|v| spec_matches(spec, v))
    };
    for spec in specs {
        if !satisfied(spec) {
            problems.push(format!("requested spec {spec} is not satisfied"));
        }
    }
    for pin in pins {
        if !satisfied(pin) {
            problems.push(format!("pin {pin} is not satisfied"));
        }
        for r in records {
            if r.name == pin.name && !spec_matches(pin, r.as_ref()) {
                problems.push(format!("{r} violates pin {pin}"));
            }
        }
    }
    for r in records {
        for dep in &r.depends {
            if !satisfied(dep) {
                problems.push(format!("{r} depends on {dep}, which is not satisfied"));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

pub fn validate_solution(request: &SolveRequest<'_>, solution: &Solution) -> Result<(), Vec<String>> {
    validate_records(
        &request.specs,
        &request.pins,
        &request.virtual_packages,
        &solution.records,
    )
}

/// Formats a record for explanations and listings.
pub(crate) fn describe<T: Matchable + ?Sized>(t: &T) -> String {
    let channel = t.match_channel().map(|c| format!(" [{c}]")).unwrap_or_default();
    format!(
        "{} {} {}{}",
        t.match_name(),
        t.match_version(),
        t.match_build(),
        channel
    )
}
