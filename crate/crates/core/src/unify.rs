//! Bounded abstract unification: parallel (`mgu_p`) and sequential (`mgu_ω`).
//!
//! The exact operators can produce infinitely many groups, so every
//! operation takes a [`Bound`] on the cardinality of result groups. Below the
//! bound the result is exact: a group `B` with `|B| ≤ c` is returned iff some
//! sharing graph has resultant `B`. Node labels are non-empty, so such a graph
//! has at most `c` nodes and the search is finite.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::domain::ShLinElement;
use crate::graph::{Edge, EdgeId, NodeId, ParallelSharingGraph, UnionFind};
use crate::group::SharingGroup;
use crate::term::{SubstError, Substitution, Term, Var};

/// Maximum cardinality of the groups an abstract unification reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("the cardinality bound must be at least 1")]
pub struct ZeroBound;

impl Bound {
    pub fn new(max_cardinality: u64) -> Result<Self, ZeroBound> {
        if max_cardinality == 0 {
            Err(ZeroBound)
        } else {
            Ok(Bound(max_cardinality))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-layer degrees a group imposes on a node: out = `χ(B, x_i)`, in = `χ(B, t_i)`.
#[derive(Clone, Debug)]
struct Degrees {
    out: Vec<u32>,
    inn: Vec<u32>,
}

impl Degrees {
    fn of(group: &SharingGroup, theta: &Substitution) -> Self {
        let (out, inn) = theta
            .bindings()
            .map(|(x, t)| (group.get(x), group.chi(t) as u32))
            .unzip();
        Degrees { out, inn }
    }

    fn is_isolated(&self) -> bool {
        self.out.iter().chain(&self.inn).all(|&d| d == 0)
    }
}

/// Whether some sharing graph for `θ` has exactly one node per entry of
/// `nodes`, labeled by that entry.
pub fn realizable(nodes: &[SharingGroup], theta: &Substitution) -> bool {
    realize(nodes, theta).is_some()
}

/// A sharing graph whose node labels are exactly `nodes`, if one exists.
///
/// Node `i` of the returned graph carries `nodes[i]`; edges are numbered
/// consecutively across layers.
pub fn realize(nodes: &[SharingGroup], theta: &Substitution) -> Option<ParallelSharingGraph> {
    let degrees: Vec<Degrees> = nodes.iter().map(|g| Degrees::of(g, theta)).collect();
    let edges = search_pairing(&degrees, theta.len())?;
    let labels: BTreeMap<NodeId, SharingGroup> = nodes
        .iter()
        .enumerate()
        .map(|(i, g)| (NodeId(i as u32), g.clone()))
        .collect();
    let mut layers: Vec<Vec<(EdgeId, Edge)>> = vec![Vec::new(); theta.len()];
    for (id, (layer, src, tgt)) in edges.into_iter().enumerate() {
        layers[layer].push((
            EdgeId(id as u32),
            Edge {
                src: NodeId(src as u32),
                tgt: NodeId(tgt as u32),
            },
        ));
    }
    Some(ParallelSharingGraph::new(labels, layers).expect("search only produces well-formed graphs"))
}

/// Finds per-layer pairings of out-stubs with in-stubs whose union connects
/// all nodes. Returns the chosen edges as `(layer, src, tgt)`.
fn search_pairing(degrees: &[Degrees], layer_count: usize) -> Option<Vec<(usize, usize, usize)>> {
    let n = degrees.len();
    if n == 0 {
        return None;
    }
    let mut total_edges = 0u64;
    for l in 0..layer_count {
        let out: u64 = degrees.iter().map(|d| u64::from(d.out[l])).sum();
        let inn: u64 = degrees.iter().map(|d| u64::from(d.inn[l])).sum();
        if out != inn {
            return None;
        }
        total_edges += out;
    }
    if n > 1 && (degrees.iter().any(Degrees::is_isolated) || total_edges < (n as u64 - 1)) {
        return None;
    }

    let out_stubs: Vec<Vec<usize>> = (0..layer_count)
        .map(|l| {
            (0..n)
                .flat_map(|i| std::iter::repeat_n(i, degrees[i].out[l] as usize))
                .collect()
        })
        .collect();
    let in_degrees: Vec<Vec<u32>> = (0..layer_count)
        .map(|l| degrees.iter().map(|d| d.inn[l]).collect())
        .collect();
    // later[l][i]: whether node i has any stub in a layer after l
    let mut later = vec![vec![false; n]; layer_count];
    let mut later_edges = vec![0usize; layer_count];
    for l in (0..layer_count.saturating_sub(1)).rev() {
        for i in 0..n {
            later[l][i] = later[l + 1][i] || degrees[i].out[l + 1] > 0 || degrees[i].inn[l + 1] > 0;
        }
        later_edges[l] = later_edges[l + 1] + out_stubs[l + 1].len();
    }

    let mut search = PairingSearch {
        n,
        out_stubs,
        in_degrees,
        later,
        later_edges,
        failed: HashSet::new(),
        edges: Vec::new(),
    };
    let uf = UnionFind::new(n);
    if layer_count == 0 {
        return (n == 1).then(Vec::new);
    }
    let mut cap = search.in_degrees[0].clone();
    if search.dfs(0, 0, 0, &mut cap, &uf) {
        Some(search.edges)
    } else {
        None
    }
}

struct PairingSearch {
    n: usize,
    out_stubs: Vec<Vec<usize>>,
    in_degrees: Vec<Vec<u32>>,
    later: Vec<Vec<bool>>,
    later_edges: Vec<usize>,
    failed: HashSet<Vec<u16>>,
    edges: Vec<(usize, usize, usize)>,
}

impl PairingSearch {
    fn dfs(&mut self, layer: usize, k: usize, prev: usize, cap: &mut Vec<u32>, uf: &UnionFind) -> bool {
        let stubs = self.out_stubs[layer].len();
        if k == stubs {
            debug_assert!(cap.iter().all(|&c| c == 0));
            if layer + 1 == self.out_stubs.len() {
                return uf.components() == 1;
            }
            let mut next_cap = self.in_degrees[layer + 1].clone();
            return self.dfs(layer + 1, 0, 0, &mut next_cap, uf);
        }

        let src = self.out_stubs[layer][k];
        let min_target = if k > 0 && self.out_stubs[layer][k - 1] == src {
            prev
        } else {
            0
        };

        let mut uf = uf.clone();
        if uf.components() > 1 && !self.can_still_connect(layer, k, cap, &mut uf) {
            return false;
        }
        let key = self.state_key(layer, k, min_target, cap, &mut uf);
        if self.failed.contains(&key) {
            return false;
        }

        let src_root = uf.find(src);
        let mut targets: Vec<usize> = (min_target..self.n).filter(|&b| cap[b] > 0).collect();
        // joining two components first tends to reach a connected pairing sooner
        targets.sort_by_key(|&b| uf.find(b) == src_root);
        for b in targets {
            cap[b] -= 1;
            let mut next = uf.clone();
            next.union(src, b);
            self.edges.push((layer, src, b));
            if self.dfs(layer, k + 1, b, cap, &next) {
                return true;
            }
            self.edges.pop();
            cap[b] += 1;
        }
        self.failed.insert(key);
        false
    }

    /// Necessary conditions for the remaining stubs to connect the current components.
    fn can_still_connect(&self, layer: usize, k: usize, cap: &[u32], uf: &mut UnionFind) -> bool {
        let remaining = self.out_stubs[layer].len() - k + self.later_edges[layer];
        if uf.components() - 1 > remaining {
            return false;
        }
        let mut has_stub = vec![false; self.n];
        for &i in &self.out_stubs[layer][k..] {
            has_stub[i] = true;
        }
        for i in 0..self.n {
            has_stub[i] |= cap[i] > 0 || self.later[layer][i];
        }
        let mut root_ok = vec![false; uf.len()];
        for (i, &ok) in has_stub.iter().enumerate() {
            if ok {
                root_ok[uf.find(i)] = true;
            }
        }
        (0..self.n).all(|i| {
            let r = uf.find(i);
            root_ok[r]
        })
    }

    fn state_key(&self, layer: usize, k: usize, min_target: usize, cap: &[u32], uf: &mut UnionFind) -> Vec<u16> {
        let mut key = Vec::with_capacity(3 + 2 * self.n);
        key.push(layer as u16);
        key.push(k as u16);
        key.push(min_target as u16);
        key.extend(cap.iter().map(|&c| c as u16));
        let mut relabel: Vec<Option<u16>> = vec![None; self.n];
        let mut next = 0u16;
        for i in 0..self.n {
            let r = uf.find(i);
            let label = *relabel[r].get_or_insert_with(|| {
                next += 1;
                next - 1
            });
            key.push(label);
        }
        key
    }
}

/// All resultants of sharing graphs for `groups` and `θ` up to the bound,
/// each with one witnessing graph. The empty group maps to `None`.
///
/// Candidate node multisets are visited by total cardinality and then
/// lexicographically, and a resultant already found is not searched again.
pub fn mgu_p_graphs(
    groups: &BTreeSet<SharingGroup>,
    theta: &Substitution,
    bound: Bound,
) -> Result<BTreeMap<SharingGroup, Option<ParallelSharingGraph>>, SubstError> {
    theta.require_idempotent()?;
    let c = bound.get();
    let mut found: BTreeMap<SharingGroup, Option<ParallelSharingGraph>> = BTreeMap::new();
    found.insert(SharingGroup::empty(), None);

    let mut active: Vec<(SharingGroup, u64)> = Vec::new();
    for g in groups {
        if g.is_empty() || g.cardinality() > c {
            continue;
        }
        let d = Degrees::of(g, theta);
        if d.is_isolated() {
            // zero degrees everywhere: only the one-node graph, without edges
            let graph = realize(std::slice::from_ref(g), theta);
            found.insert(g.clone(), graph);
        } else {
            active.push((g.clone(), g.cardinality()));
        }
    }

    for (_, multiset) in node_multisets(&active, c) {
        let nodes: Vec<SharingGroup> = multiset.iter().map(|&i| active[i].0.clone()).collect();
        let resultant = nodes.iter().fold(SharingGroup::empty(), |acc, g| acc.msum(g));
        if found.contains_key(&resultant) {
            continue;
        }
        if let Some(graph) = realize(&nodes, theta) {
            found.insert(resultant, Some(graph));
        }
    }
    Ok(found)
}

/// Non-empty multisets of candidate indices with total cardinality at most
/// `max`, ordered by (cardinality, sorted index list).
fn node_multisets(candidates: &[(SharingGroup, u64)], max: u64) -> Vec<(u64, Vec<usize>)> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn go(
        candidates: &[(SharingGroup, u64)],
        start: usize,
        budget: u64,
        used: u64,
        current: &mut Vec<usize>,
        out: &mut Vec<(u64, Vec<usize>)>,
    ) {
        for i in start..candidates.len() {
            let card = candidates[i].1;
            if card <= budget {
                current.push(i);
                out.push((used + card, current.clone()));
                go(candidates, i, budget - card, used + card, current, out);
                current.pop();
            }
        }
    }
    go(candidates, 0, max, 0, &mut current, &mut out);
    out.sort();
    out
}

/// `mgu_p(S, θ)` restricted to groups of cardinality at most the bound.
/// Always contains the empty group.
pub fn mgu_p_groups(
    groups: &BTreeSet<SharingGroup>,
    theta: &Substitution,
    bound: Bound,
) -> Result<BTreeSet<SharingGroup>, SubstError> {
    Ok(mgu_p_graphs(groups, theta, bound)?.into_keys().collect())
}

/// Sequential unification: one single-binding `mgu_p` step per binding, in
/// increasing order of the bound variable. Truncating intermediate results
/// at the bound loses nothing below it, since every intermediate group is a
/// sub-sum of some final resultant.
pub fn mgu_omega_groups(
    groups: &BTreeSet<SharingGroup>,
    theta: &Substitution,
    bound: Bound,
) -> Result<BTreeSet<SharingGroup>, SubstError> {
    theta.require_idempotent()?;
    let order: Vec<(Var, Term)> = theta.bindings().map(|(x, t)| (x.clone(), t.clone())).collect();
    mgu_omega_groups_in_order(groups, &order, bound)
}

/// Sequential unification processing the bindings in the given order, which
/// must form an idempotent substitution.
pub fn mgu_omega_groups_in_order(
    groups: &BTreeSet<SharingGroup>,
    bindings: &[(Var, Term)],
    bound: Bound,
) -> Result<BTreeSet<SharingGroup>, SubstError> {
    Substitution::from_bindings(bindings.iter().cloned())?.require_idempotent()?;
    let mut current: BTreeSet<SharingGroup> = groups
        .iter()
        .filter(|g| g.cardinality() <= bound.get())
        .cloned()
        .collect();
    current.insert(SharingGroup::empty());
    for (x, t) in bindings {
        let step = Substitution::singleton(x.clone(), t.clone());
        current = mgu_p_groups(&current, &step, bound)?;
    }
    Ok(current)
}

fn lift(
    a: &ShLinElement,
    theta: &Substitution,
    op: impl FnOnce(&BTreeSet<SharingGroup>) -> Result<BTreeSet<SharingGroup>, SubstError>,
) -> Result<ShLinElement, SubstError> {
    theta.require_idempotent()?;
    let extended = a.extend_universe(&theta.vars());
    if a.is_bottom() {
        return Ok(ShLinElement::bottom(extended.universe().clone()));
    }
    let groups = op(extended.groups())?;
    Ok(ShLinElement::new(extended.universe().clone(), groups).expect("result groups stay inside U ∪ vars(θ)"))
}

/// `mgu_p([S]_U, θ)`: extend the universe to `U ∪ vars(θ)` with singleton
/// groups for the new variables, then unify.
pub fn mgu_p(a: &ShLinElement, theta: &Substitution, bound: Bound) -> Result<ShLinElement, SubstError> {
    lift(a, theta, |s| mgu_p_groups(s, theta, bound))
}

/// `mgu_ω([S]_U, θ)`, lifted like [`mgu_p`].
pub fn mgu_omega(a: &ShLinElement, theta: &Substitution, bound: Bound) -> Result<ShLinElement, SubstError> {
    lift(a, theta, |s| mgu_omega_groups(s, theta, bound))
}
