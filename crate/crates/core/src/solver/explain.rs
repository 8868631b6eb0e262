use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{describe, is_satisfiable, Problem, Provided};
use crate::channels::{spec_matches, PackageRecord};
use crate::verspec::MatchSpec;

/// Explanation trees stop at this depth; deeper chains are elided.
pub const MAX_EXPLAIN_DEPTH: usize = 10;

/// Why a request cannot be satisfied: one tree per failing requested spec,
/// in alphabetical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnsatExplanation {
    pub roots: Vec<ConflictNode>,
}

/// A spec and the fate of each of its candidates. No candidates and no
/// elision means nothing matched the spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictNode {
    pub spec: String,
    /// Extra context for an empty candidate list, e.g. the virtual package
    /// or already chosen record that occupies the name.
    pub note: Option<String>,
    pub candidates: Vec<CandidateNode>,
    pub elided: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateNode {
    pub candidate: String,
    pub exclusion: Exclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Exclusion {
    /// The candidate's name is taken by a different requirement.
    ConflictsWith(String),
    /// One of the candidate's dependencies cannot be satisfied.
    Dependency(Box<ConflictNode>),
}

impl ConflictNode {
    fn no_candidate(spec: &MatchSpec, note: Option<String>) -> Self {
        ConflictNode {
            spec: spec.to_string(),
            note,
            candidates: Vec::new(),
            elided: false,
        }
    }

    pub fn has_no_candidate(&self) -> bool {
        self.candidates.is_empty() && !self.elided
    }

    fn render(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        if self.elided {
            out.push_str(&format!("{pad}{}: ... (elided)\n", self.spec));
        } else if self.candidates.is_empty() {
            let note = self.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default();
            out.push_str(&format!("{pad}{}: no candidate matches{note}\n", self.spec));
        } else {
            out.push_str(&format!("{pad}{}\n", self.spec));
            for c in &self.candidates {
                match &c.exclusion {
                    Exclusion::ConflictsWith(other) => {
                        out.push_str(&format!("{pad}  {}: conflicts with {other}\n", c.candidate))
                    }
                    Exclusion::Dependency(node) => {
                        out.push_str(&format!("{pad}  {}\n", c.candidate));
                        node.render(out, depth + 2);
                    }
                }
            }
        }
    }
}

impl UnsatExplanation {
    pub fn no_candidates(specs: &[MatchSpec]) -> Self {
        let mut specs = specs.to_vec();
        specs.sort_by_key(|s| (s.name.clone(), s.to_string()));
        specs.dedup();
        UnsatExplanation {
            roots: specs
                .iter()
                .map(|s| ConflictNode::no_candidate(s, None))
                .collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for root in &self.roots {
            root.render(&mut out, 0);
        }
        out
    }
}

impl fmt::Display for UnsatExplanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct Explainer<'p, 'a> {
    base: &'p Problem<'a>,
}

impl<'a> Explainer<'_, 'a> {
    fn problem(&self, specs: Vec<MatchSpec>, fixed: &[Arc<PackageRecord>]) -> Problem<'a> {
        let mut provided = self.base.provided.clone();
        provided.extend(fixed.iter().cloned().map(Provided::Fixed));
        let mut blocked = self.base.blocked.clone();
        blocked.extend(fixed.iter().map(|r| r.name.clone()));
        Problem {
            index: self.base.index,
            specs,
            pins: self.base.pins.clone(),
            provided,
            blocked,
            locked: Vec::new(),
        }
    }

    fn sat(&self, specs: Vec<MatchSpec>, fixed: &[Arc<PackageRecord>]) -> bool {
        is_satisfiable(&self.problem(specs, fixed))
    }

    fn node(
        &self,
        spec: &MatchSpec,
        context: &[MatchSpec],
        fixed: &[Arc<PackageRecord>],
        depth: usize,
    ) -> ConflictNode {
        if depth >= MAX_EXPLAIN_DEPTH {
            return ConflictNode {
                spec: spec.to_string(),
                note: None,
                candidates: Vec::new(),
                elided: true,
            };
        }
        let sub = self.problem(context.to_vec(), fixed);
        let candidates = sub.candidates(spec);
        if candidates.is_empty() {
            let note = sub
                .provided
                .iter()
                .find(|p| p.name() == spec.name)
                .map(|p| match p {
                    Provided::Virtual(v) => format!("system provides {}", describe(v)),
                    Provided::Fixed(r) => format!("{} already chosen", describe(r.as_ref())),
                });
            return ConflictNode::no_candidate(spec, note);
        }

        let mut nodes = Vec::new();
        for cand in candidates {
            let record = &cand.record;
            let direct = context
                .iter()
                .chain(&self.base.pins)
                .find(|x| x.name == record.name && !spec_matches(x, record.as_ref()));
            let exclusion = if let Some(other) = direct {
                Exclusion::ConflictsWith(other.to_string())
            } else {
                let mut with_cand = fixed.to_vec();
                with_cand.push(Arc::clone(record));
                self.exclusion(record, context, &with_cand, depth)
            };
            nodes.push(CandidateNode {
                candidate: describe(record.as_ref()),
                exclusion,
            });
        }
        ConflictNode {
            spec: spec.to_string(),
            note: None,
            candidates: nodes,
            elided: false,
        }
    }

    /// Finds the first constraint that rules out `record`, given that it is
    /// already part of `fixed`.
    fn exclusion(
        &self,
        record: &Arc<PackageRecord>,
        context: &[MatchSpec],
        fixed: &[Arc<PackageRecord>],
        depth: usize,
    ) -> Exclusion {
        if !self.sat(context.to_vec(), fixed) {
            for j in 0..context.len() {
                if !self.sat(context[..=j].to_vec(), fixed) {
                    return Exclusion::ConflictsWith(context[j].to_string());
                }
            }
            let pins: Vec<String> = self.base.pins.iter().map(|p| p.to_string()).collect();
            return Exclusion::ConflictsWith(if pins.is_empty() {
                "the other requirements".to_string()
            } else {
                format!("pins {}", pins.join(", "))
            });
        }
        let mut specs = context.to_vec();
        for dep in &record.depends {
            specs.push(dep.clone());
            if !self.sat(specs.clone(), fixed) {
                specs.pop();
                let child = self.node(dep, &specs, fixed, depth + 1);
                return Exclusion::Dependency(Box::new(child));
            }
        }
        Exclusion::ConflictsWith("the other requirements".to_string())
    }
}

/// Builds the explanation for an unsatisfiable problem. Specs that fail on
/// their own become roots; otherwise the roots are a minimal conflicting
/// subset of the requested specs, each explained against the others.
pub(crate) fn explain(problem: &Problem<'_>) -> UnsatExplanation {
    let explainer = Explainer { base: problem };
    let mut specs = problem.specs.clone();
    specs.sort_by_key(|s| (s.name.clone(), s.to_string()));
    specs.dedup();

    if !explainer.sat(Vec::new(), &[]) {
        // The pins alone are contradictory; explain them as requests.
        let pins_only = Problem {
            index: problem.index,
            specs: problem.pins.clone(),
            pins: Vec::new(),
            provided: problem.provided.clone(),
            blocked: problem.blocked.clone(),
            locked: Vec::new(),
        };
        return explain(&pins_only);
    }

    let failing: Vec<MatchSpec> = specs
        .iter()
        .filter(|s| !explainer.sat(vec![(*s).clone()], &[]))
        .cloned()
        .collect();
    if !failing.is_empty() {
        return UnsatExplanation {
            roots: failing.iter().map(|s| explainer.node(s, &[], &[], 0)).collect(),
        };
    }

    let mut core = specs.clone();
    for s in &specs {
        let trial: Vec<MatchSpec> = core.iter().filter(|x| *x != s).cloned().collect();
        if !explainer.sat(trial.clone(), &[]) {
            core = trial;
        }
    }
    UnsatExplanation {
        roots: core
            .iter()
            .map(|s| {
                let others: Vec<MatchSpec> = core.iter().filter(|x| *x != s).cloned().collect();
                explainer.node(s, &others, &[], 0)
            })
            .collect(),
    }
}
