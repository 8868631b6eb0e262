//! A small conflict-driven clause-learning SAT engine.
//!
//! Decisions follow a fixed variable order with every decision set to true.
//! The encoder lays that order out as "best option first" for each package
//! name, so the first model found is usually already close to the optimum the
//! caller is looking for. Learned clauses survive across calls, which makes
//! the repeated assumption-based queries of the optimizer cheap.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(var: usize) -> Lit {
        Lit((var as u32) << 1)
    }

    pub fn neg(var: usize) -> Lit {
        Lit(((var as u32) << 1) | 1)
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl std::fmt::Display for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_neg() {
            write!(f, "-{}", self.var())
        } else {
            write!(f, "{}", self.var())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    True,
    False,
    Unset,
}

#[derive(Debug)]
pub struct SatSolver {
    clauses: Vec<Vec<Lit>>,
    /// `watches[l]` lists clauses whose first two literals contain `!l`.
    watches: Vec<Vec<usize>>,
    values: Vec<Value>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    order: Vec<usize>,
    order_pos: Vec<usize>,
    cursor: usize,
    inconsistent: bool,
    conflicts: u64,
}

impl SatSolver {
    /// `order` is the decision order; variables missing from it are decided
    /// last, in index order.
    pub fn new(num_vars: usize, order: &[usize]) -> Self {
        let mut full_order = Vec::with_capacity(num_vars);
        let mut placed = vec![false; num_vars];
        for &v in order {
            if v < num_vars && !placed[v] {
                placed[v] = true;
                full_order.push(v);
            }
        }
        full_order.extend((0..num_vars).filter(|&v| !placed[v]));
        let mut order_pos = vec![0; num_vars];
        for (i, &v) in full_order.iter().enumerate() {
            order_pos[v] = i;
        }
        SatSolver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            values: vec![Value::Unset; num_vars],
            level: vec![0; num_vars],
            reason: vec![None; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: vec![false; num_vars],
            order: full_order,
            order_pos,
            cursor: 0,
            inconsistent: false,
            conflicts: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    fn lit_value(&self, l: Lit) -> Value {
        match (self.values[l.var()], l.is_neg()) {
            (Value::Unset, _) => Value::Unset,
            (Value::True, false) | (Value::False, true) => Value::True,
            _ => Value::False,
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause at decision level 0. Must not be called mid-search.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        if self.inconsistent {
            return;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut clause: Vec<Lit> = lits.to_vec();
        clause.sort();
        clause.dedup();
        if clause.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        clause.retain(|&l| self.lit_value(l) != Value::False);
        if clause.iter().any(|&l| self.lit_value(l) == Value::True) {
            return;
        }
        match clause.len() {
            0 => self.inconsistent = true,
            1 => {
                self.enqueue(clause[0], None);
                if self.propagate().is_some() {
                    self.inconsistent = true;
                }
            }
            _ => {
                self.attach(clause);
            }
        }
    }

    fn attach(&mut self, clause: Vec<Lit>) -> usize {
        let idx = self.clauses.len();
        self.watches[(!clause[0]).index()].push(idx);
        self.watches[(!clause[1]).index()].push(idx);
        self.clauses.push(clause);
        idx
    }

    fn enqueue(&mut self, lit: Lit, reason: Option<usize>) {
        let v = lit.var();
        self.values[v] = if lit.is_neg() { Value::False } else { Value::True };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Unit propagation; returns the index of a conflicting clause.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let watching = std::mem::take(&mut self.watches[p.index()]);
            let mut kept = Vec::with_capacity(watching.len());
            let mut conflict = None;
            let mut iter = watching.into_iter();
            for ci in iter.by_ref() {
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.lit_value_of(first) == Value::True {
                    kept.push(ci);
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[ci].len() {
                    let l = self.clauses[ci][k];
                    if self.lit_value(l) != Value::False {
                        self.clauses[ci].swap(1, k);
                        self.watches[(!l).index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(ci);
                match self.lit_value(first) {
                    Value::False => {
                        conflict = Some(ci);
                        break;
                    }
                    _ => self.enqueue(first, Some(ci)),
                }
            }
            kept.extend(iter);
            self.watches[p.index()].extend(kept);
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    // Split out so the borrow of `self.clauses` in `propagate` stays local.
    fn lit_value_of(&self, l: Lit) -> Value {
        self.lit_value(l)
    }

    /// First-UIP conflict analysis. Returns the learned clause (asserting
    /// literal first) and the level to backjump to.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        loop {
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl].len() {
                let q = self.clauses[confl][k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            self.seen[lit.var()] = false;
            path -= 1;
            p = Some(lit);
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var()].expect("implied literal without reason");
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut backjump = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            backjump = self.level[learnt[1].var()];
        }
        (learnt, backjump)
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let v = self.trail[i].var();
            self.values[v] = Value::Unset;
            self.reason[v] = None;
            self.cursor = self.cursor.min(self.order_pos[v]);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = lim;
    }

    fn next_decision(&mut self) -> Option<Lit> {
        while self.cursor < self.order.len() {
            let v = self.order[self.cursor];
            if self.values[v] == Value::Unset {
                return Some(Lit::pos(v));
            }
            self.cursor += 1;
        }
        None
    }

    /// Searches for a model under `assumptions`. Returns the truth value of
    /// every variable, or `None` when no model extends the assumptions.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        if self.inconsistent {
            return None;
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.inconsistent = true;
            return None;
        }
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    self.inconsistent = true;
                    return None;
                }
                let (learnt, backjump) = self.analyze(confl);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let ci = self.attach(learnt);
                    self.enqueue(asserting, Some(ci));
                }
                continue;
            }

            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let a = assumptions[self.decision_level()];
                match self.lit_value(a) {
                    Value::True => self.trail_lim.push(self.trail.len()),
                    Value::False => {
                        self.cancel_until(0);
                        return None;
                    }
                    Value::Unset => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let next = match next.or_else(|| self.next_decision()) {
                Some(l) => l,
                None => {
                    let model = self.values.iter().map(|v| *v == Value::True).collect();
                    self.cancel_until(0);
                    return Some(model);
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, None);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(xs: &[i32]) -> Vec<Lit> {
        xs.iter()
            .map(|&x| {
                if x > 0 {
                    Lit::pos(x as usize - 1)
                } else {
                    Lit::neg((-x) as usize - 1)
                }
            })
            .collect()
    }

    fn brute_force(n: usize, clauses: &[Vec<i32>]) -> bool {
        (0u32..1 << n).any(|m| {
            clauses.iter().all(|c| {
                c.iter().any(|&x| {
                    let v = x.unsigned_abs() as usize - 1;
                    let val = m >> v & 1 == 1;
                    if x > 0 {
                        val
                    } else {
                        !val
                    }
                })
            })
        })
    }

    fn check_model(model: &[bool], clauses: &[Vec<i32>]) -> bool {
        clauses.iter().all(|c| {
            c.iter().any(|&x| {
                let val = model[x.unsigned_abs() as usize - 1];
                if x > 0 {
                    val
                } else {
                    !val
                }
            })
        })
    }

    #[test]
    fn simple_sat_and_unsat() {
        let mut s = SatSolver::new(2, &[]);
        s.add_clause(&lits(&[1, 2]));
        s.add_clause(&lits(&[-1]));
        let m = s.solve(&[]).unwrap();
        assert_eq!(m, vec![false, true]);
        s.add_clause(&lits(&[-2]));
        assert!(s.solve(&[]).is_none());
    }

    #[test]
    fn assumptions_do_not_stick() {
        let mut s = SatSolver::new(3, &[]);
        s.add_clause(&lits(&[1, 2, 3]));
        s.add_clause(&lits(&[-1, -2]));
        assert!(s.solve(&lits(&[1, 2])).is_none());
        assert!(s.solve(&lits(&[1])).is_some());
        assert!(s.solve(&lits(&[-1, -2, -3])).is_none());
        assert!(s.solve(&[]).is_some());
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 4 pigeons into 3 holes.
        let var = |p: usize, h: usize| (p * 3 + h + 1) as i32;
        let mut clauses = Vec::new();
        for p in 0..4 {
            clauses.push((0..3).map(|h| var(p, h)).collect::<Vec<_>>());
        }
        for h in 0..3 {
            for p in 0..4 {
                for q in p + 1..4 {
                    clauses.push(vec![-var(p, h), -var(q, h)]);
                }
            }
        }
        let mut s = SatSolver::new(12, &[]);
        for c in &clauses {
            s.add_clause(&lits(c));
        }
        assert!(s.solve(&[]).is_none());
    }

    #[test]
    fn random_3sat_agrees_with_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.random_range(3..11);
            let m = rng.random_range(1..(5 * n));
            let clauses: Vec<Vec<i32>> = (0..m)
                .map(|_| {
                    (0..rng.random_range(1..4))
                        .map(|_| {
                            let v = rng.random_range(1..=n as i32);
                            if rng.random_bool(0.5) {
                                v
                            } else {
                                -v
                            }
                        })
                        .collect()
                })
                .collect();
            let mut s = SatSolver::new(n, &[]);
            for c in &clauses {
                s.add_clause(&lits(c));
            }
            let expected = brute_force(n, &clauses);
            match s.solve(&[]) {
                Some(model) => {
                    assert!(expected);
                    assert!(check_model(&model, &clauses));
                }
                None => assert!(!expected, "{clauses:?}"),
            }
        }
    }
}
