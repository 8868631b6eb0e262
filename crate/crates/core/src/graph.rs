//! Deterministic topological ordering.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

/// Orders `labels` so that every node comes after all of its `deps`
/// (`deps[i]` lists the nodes `i` depends on). Among ready nodes the
/// smallest label goes first. On a cycle, returns one cycle as a node path
/// whose first and last entries coincide.
pub fn topological_order(labels: &[String], deps: &[BTreeSet<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = labels.len();
    let mut pending: Vec<usize> = deps.iter().map(BTreeSet::len).collect();
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, ds) in deps.iter().enumerate() {
        for &d in ds {
            dependents[d].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<(&str, usize)>> = (0..n)
        .filter(|&i| pending[i] == 0)
        .map(|i| Reverse((labels[i].as_str(), i)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &j in &dependents[i] {
            pending[j] -= 1;
            if pending[j] == 0 {
                ready.push(Reverse((labels[j].as_str(), j)));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(find_cycle(labels, deps, &pending))
    }
}

/// Walks unfinished nodes along unfinished dependencies until a node
/// repeats. Every unfinished node has at least one unfinished dependency,
/// so the walk cannot stall.
fn find_cycle(labels: &[String], deps: &[BTreeSet<usize>], pending: &[usize]) -> Vec<usize> {
    let stuck = |i: usize| pending[i] > 0;
    let start = (0..labels.len())
        .filter(|&i| stuck(i))
        .min_by(|&a, &b| labels[a].cmp(&labels[b]))
        .expect("a cycle leaves nodes unfinished");
    let mut path = vec![start];
    loop {
        let cur = *path.last().unwrap();
        let next = deps[cur]
            .iter()
            .copied()
            .filter(|&d| stuck(d))
            .min_by(|&a, &b| labels[a].cmp(&labels[b]))
            .expect("unfinished node has an unfinished dependency");
        if let Some(pos) = path.iter().position(|&p| p == next) {
            let mut cycle = path[pos..].to_vec();
            cycle.push(next);
            return cycle;
        }
        path.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(labels: &[&str], edges: &[(usize, usize)]) -> (Vec<String>, Vec<BTreeSet<usize>>) {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let mut deps = vec![BTreeSet::new(); labels.len()];
        for &(from, to) in edges {
            deps[from].insert(to);
        }
        (labels, deps)
    }

    #[test]
    fn chain_and_ties() {
        let (l, d) = graph(&["c", "b", "a"], &[(0, 1), (1, 2)]);
        assert_eq!(topological_order(&l, &d).unwrap(), [2, 1, 0]);
        let (l, d) = graph(&["b", "a"], &[]);
        assert_eq!(topological_order(&l, &d).unwrap(), [1, 0]);
    }

    #[test]
    fn reports_a_cycle_path() {
        let (l, d) = graph(&["a", "b", "z"], &[(0, 1), (1, 0), (2, 0)]);
        assert_eq!(topological_order(&l, &d).unwrap_err(), [0, 1, 0]);
        let (l, d) = graph(&["a"], &[(0, 0)]);
        assert_eq!(topological_order(&l, &d).unwrap_err(), [0, 0]);
    }
}
