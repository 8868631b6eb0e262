use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use super::sat::Lit;
use super::{Provided, SolveError, SolveRequest};
use crate::channels::{spec_matches, Candidate, MergedIndex, PackageRecord};
use crate::verspec::MatchSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClauseKind {
    /// At least one candidate of a requested spec.
    Request,
    /// A candidate implies one of the candidates of each of its dependencies.
    Dependency,
    /// Two candidates of the same name exclude each other.
    AtMostOne,
    /// A pin: presence of a matching candidate, or exclusion of a
    /// non-matching one.
    Pin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub kind: ClauseKind,
    pub literals: Vec<Lit>,
}

/// One boolean variable per reachable candidate.
#[derive(Debug, Clone)]
pub struct Variable {
    pub candidate: Candidate,
    /// Position of the package name in [`ClauseSet::names`].
    pub name: usize,
    /// Position among the candidates of its name, in preference order.
    pub preference: usize,
}

/// The boolean encoding of a request.
#[derive(Debug, Clone)]
pub struct ClauseSet {
    pub variables: Vec<Variable>,
    /// Package names in objective order: requested names first, then the
    /// other reachable names alphabetically.
    pub names: Vec<String>,
    /// Variables of each name, in preference order.
    pub by_name: Vec<Vec<usize>>,
    /// Variable of the locked record of each name, if it is a candidate.
    pub locked: Vec<Option<usize>>,
    pub clauses: Vec<Clause>,
}

impl ClauseSet {
    pub fn count(&self, kind: ClauseKind) -> usize {
        self.clauses.iter().filter(|c| c.kind == kind).count()
    }

    pub fn record(&self, var: usize) -> &Arc<PackageRecord> {
        &self.variables[var].candidate.record
    }
}

impl fmt::Display for ClauseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.variables.iter().enumerate() {
            writeln!(f, "v{i} = {}", v.candidate.record)?;
        }
        for c in &self.clauses {
            let lits: Vec<String> = c.literals.iter().map(|l| l.to_string()).collect();
            writeln!(f, "{:?}: ({})", c.kind, lits.join(" "))?;
        }
        Ok(())
    }
}

/// Internal form of a request, also used for the sub-problems built while
/// explaining a failure.
pub(crate) struct Problem<'a> {
    pub index: &'a MergedIndex,
    pub specs: Vec<MatchSpec>,
    pub pins: Vec<MatchSpec>,
    pub provided: Vec<Provided>,
    /// Names whose real candidates are all excluded.
    pub blocked: BTreeSet<String>,
    pub locked: Vec<PackageRecord>,
}

impl<'a> Problem<'a> {
    pub fn from_request(req: &SolveRequest<'a>) -> Self {
        Problem {
            index: req.index,
            specs: req.specs.clone(),
            pins: req.pins.clone(),
            provided: req
                .virtual_packages
                .iter()
                .cloned()
                .map(Provided::Virtual)
                .collect(),
            blocked: BTreeSet::new(),
            locked: req.locked.clone(),
        }
    }

    pub fn is_provided(&self, spec: &MatchSpec) -> bool {
        self.provided.iter().any(|p| p.matches(spec))
    }

    pub fn candidates(&self, spec: &MatchSpec) -> Vec<&'a Candidate> {
        if self.blocked.contains(&spec.name) {
            return Vec::new();
        }
        self.index
            .candidates(&spec.name)
            .iter()
            .filter(|c| spec_matches(spec, c.record.as_ref()))
            .collect()
    }

    /// Specs and pins that neither a provided package nor any candidate can
    /// satisfy.
    pub fn specs_without_candidates(&self) -> Vec<MatchSpec> {
        self.specs
            .iter()
            .chain(&self.pins)
            .filter(|s| !self.is_provided(s) && self.candidates(s).is_empty())
            .cloned()
            .collect()
    }

    pub fn encode(&self) -> Result<ClauseSet, SolveError> {
        let missing = self.specs_without_candidates();
        if !missing.is_empty() {
            return Err(SolveError::NoCandidates(missing));
        }
        Ok(self.encode_unchecked())
    }

    /// Encodes without the up-front candidate check; specs with no
    /// candidates become empty clauses.
    pub fn encode_unchecked(&self) -> ClauseSet {
        // Reachable candidates: those matched by a spec or pin, then
        // transitively those matched by a dependency of a reachable one.
        let mut seen: BTreeSet<*const PackageRecord> = BTreeSet::new();
        let mut queue: VecDeque<&'a Candidate> = VecDeque::new();
        let mut push = |c: &'a Candidate, queue: &mut VecDeque<&'a Candidate>| {
            if seen.insert(Arc::as_ptr(&c.record)) {
                queue.push_back(c);
            }
        };
        for spec in self.specs.iter().chain(&self.pins) {
            if !self.is_provided(spec) {
                for c in self.candidates(spec) {
                    push(c, &mut queue);
                }
            }
        }
        let mut reachable: BTreeMap<String, Vec<&'a Candidate>> = BTreeMap::new();
        while let Some(c) = queue.pop_front() {
            for dep in &c.record.depends {
                if !self.is_provided(dep) {
                    for d in self.candidates(dep) {
                        push(d, &mut queue);
                    }
                }
            }
            reachable.entry(c.record.name.clone()).or_default().push(c);
        }
        for (name, cands) in reachable.iter_mut() {
            let order = self.index.candidates(name);
            cands.sort_by_key(|c| {
                order
                    .iter()
                    .position(|o| Arc::ptr_eq(&o.record, &c.record))
                    .unwrap_or(usize::MAX)
            });
        }

        let mut names: Vec<String> = Vec::new();
        for spec in &self.specs {
            if reachable.contains_key(&spec.name) && !names.contains(&spec.name) {
                names.push(spec.name.clone());
            }
        }
        let requested: BTreeSet<String> = names.iter().cloned().collect();
        names.extend(reachable.keys().filter(|n| !requested.contains(*n)).cloned());

        let mut variables = Vec::new();
        let mut by_name = Vec::with_capacity(names.len());
        let mut locked = Vec::with_capacity(names.len());
        let mut var_of: HashMap<*const PackageRecord, usize> = HashMap::new();
        for (ni, name) in names.iter().enumerate() {
            let mut vars = Vec::new();
            let mut locked_var = None;
            for (pi, cand) in reachable[name].iter().enumerate() {
                let v = variables.len();
                variables.push(Variable {
                    candidate: (*cand).clone(),
                    name: ni,
                    preference: pi,
                });
                var_of.insert(Arc::as_ptr(&cand.record), v);
                if locked_var.is_none() && self.locked.iter().any(|l| same_record(l, &cand.record)) {
                    locked_var = Some(v);
                }
                vars.push(v);
            }
            by_name.push(vars);
            locked.push(locked_var);
        }

        let lits_of = |cands: &[&Candidate]| -> Vec<Lit> {
            cands
                .iter()
                .map(|c| Lit::pos(var_of[&Arc::as_ptr(&c.record)]))
                .collect()
        };

        let mut clauses = Vec::new();
        for spec in &self.specs {
            if self.is_provided(spec) {
                continue;
            }
            clauses.push(Clause {
                kind: ClauseKind::Request,
                literals: lits_of(&self.candidates(spec)),
            });
        }
        for (v, var) in variables.iter().enumerate() {
            for dep in &var.candidate.record.depends {
                if self.is_provided(dep) {
                    continue;
                }
                let mut literals = vec![Lit::neg(v)];
                literals.extend(lits_of(&self.candidates(dep)));
                clauses.push(Clause {
                    kind: ClauseKind::Dependency,
                    literals,
                });
            }
        }
        for vars in &by_name {
            for (i, &a) in vars.iter().enumerate() {
                for &b in &vars[i + 1..] {
                    clauses.push(Clause {
                        kind: ClauseKind::AtMostOne,
                        literals: vec![Lit::neg(a), Lit::neg(b)],
                    });
                }
            }
        }
        for pin in &self.pins {
            if !self.is_provided(pin) {
                clauses.push(Clause {
                    kind: ClauseKind::Pin,
                    literals: lits_of(&self.candidates(pin)),
                });
            }
            if let Some(ni) = names.iter().position(|n| *n == pin.name) {
                for &v in &by_name[ni] {
                    if !spec_matches(pin, variables[v].candidate.record.as_ref()) {
                        clauses.push(Clause {
                            kind: ClauseKind::Pin,
                            literals: vec![Lit::neg(v)],
                        });
                    }
                }
            }
        }

        ClauseSet {
            variables,
            names,
            by_name,
            locked,
            clauses,
        }
    }
}

/// Locked records are identified by name, version, build and channel.
pub(crate) fn same_record(a: &PackageRecord, b: &PackageRecord) -> bool {
    a.name == b.name && a.version == b.version && a.build == b.build && a.channel == b.channel
}
