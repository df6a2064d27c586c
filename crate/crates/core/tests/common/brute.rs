//! Exhaustive sharing-graph enumeration, written without the library's
//! search: every node multiset, every stub pairing in every layer, and a plain
//! depth-first connectivity test.

use std::collections::BTreeSet;

use shlin_core::{SharingGroup, Substitution, Term, Var};

/// Limits for the enumeration; `None` means unlimited.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_nodes: Option<usize>,
    pub max_edges: Option<usize>,
}

impl Limits {
    pub const UNLIMITED: Limits = Limits {
        max_nodes: None,
        max_edges: None,
    };
    pub const TINY: Limits = Limits {
        max_nodes: Some(4),
        max_edges: Some(6),
    };
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// Resultants of graphs that were found.
    pub found: BTreeSet<SharingGroup>,
    /// Resultants of node multisets that exceeded the limits and were not decided.
    pub undecided: BTreeSet<SharingGroup>,
}

fn occurrences(v: &Var, t: &Term) -> u64 {
    match t {
        Term::Var(w) => u64::from(w == v),
        Term::App(_, args) => args.iter().map(|a| occurrences(v, a)).sum(),
    }
}

fn weight(label: &SharingGroup, t: &Term) -> u64 {
    label.iter().map(|(v, k)| u64::from(k) * occurrences(v, t)).sum()
}

/// All resultants of cardinality at most `max_card`, including the empty group.
pub fn resultants(groups: &BTreeSet<SharingGroup>, theta: &Substitution, max_card: u64, limits: Limits) -> Outcome {
    let labels: Vec<SharingGroup> = groups.iter().filter(|g| !g.is_empty()).cloned().collect();
    let bindings: Vec<(Var, Term)> = theta.bindings().map(|(x, t)| (x.clone(), t.clone())).collect();
    let mut out = Outcome::default();
    out.found.insert(SharingGroup::empty());
    let mut counts = vec![0usize; labels.len()];
    multisets(&labels, 0, max_card, &mut counts, &mut |nodes| {
        let resultant = nodes.iter().fold(SharingGroup::empty(), |acc, g| acc.msum(g));
        if out.found.contains(&resultant) {
            return;
        }
        match decide(nodes, &bindings, limits) {
            Some(true) => {
                out.undecided.remove(&resultant);
                out.found.insert(resultant);
            }
            Some(false) => {}
            None => {
                out.undecided.insert(resultant);
            }
        }
    });
    out
}

fn multisets(
    labels: &[SharingGroup],
    i: usize,
    budget: u64,
    counts: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[SharingGroup]),
) {
    if i == labels.len() {
        let nodes: Vec<SharingGroup> = counts
            .iter()
            .enumerate()
            .flat_map(|(j, &k)| std::iter::repeat_n(labels[j].clone(), k))
            .collect();
        if !nodes.is_empty() {
            visit(&nodes);
        }
        return;
    }
    let card = labels[i].cardinality();
    let mut k = 0;
    loop {
        counts[i] = k;
        multisets(labels, i + 1, budget - card * k as u64, counts, visit);
        if card * (k as u64 + 1) > budget {
            break;
        }
        k += 1;
    }
    counts[i] = 0;
}

/// Whether some pairing connects the nodes; `None` when over the limits.
fn decide(nodes: &[SharingGroup], bindings: &[(Var, Term)], limits: Limits) -> Option<bool> {
    if limits.max_nodes.is_some_and(|m| nodes.len() > m) {
        return None;
    }
    let mut layers = Vec::new();
    let mut total = 0;
    for (x, t) in bindings {
        let outs: Vec<usize> = (0..nodes.len())
            .flat_map(|n| std::iter::repeat_n(n, nodes[n].get(x) as usize))
            .collect();
        let ins: Vec<usize> = (0..nodes.len())
            .flat_map(|n| std::iter::repeat_n(n, weight(&nodes[n], t) as usize))
            .collect();
        total += outs.len();
        layers.push((outs, ins));
    }
    if limits.max_edges.is_some_and(|m| total > m) {
        return None;
    }
    if layers.iter().any(|(o, i)| o.len() != i.len()) {
        return Some(false);
    }
    let mut edges = Vec::new();
    Some(pairings(&layers, 0, &mut edges, nodes.len()))
}

fn pairings(layers: &[(Vec<usize>, Vec<usize>)], l: usize, edges: &mut Vec<(usize, usize)>, n: usize) -> bool {
    if l == layers.len() {
        return connected(n, edges);
    }
    let (outs, ins) = &layers[l];
    let mut perm = ins.clone();
    perm.sort_unstable();
    loop {
        let before = edges.len();
        edges.extend(outs.iter().copied().zip(perm.iter().copied()));
        if pairings(layers, l + 1, edges, n) {
            return true;
        }
        edges.truncate(before);
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(a) = stack.pop() {
        for &b in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
