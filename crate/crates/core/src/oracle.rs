//! Executable correctness checks for the abstract operators.
//!
//! * [`witness_substitution`] turns a sharing graph into a concrete
//!   substitution whose unification with `θ` produces the graph's resultant.
//! * [`check_optimality`] runs that construction for every enumerated group.
//! * [`check_soundness`] unifies random concrete substitutions described by
//!   an abstract element and checks their groups were all predicted.
//! * [`check_coincidence`] compares parallel and sequential unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{alpha_omega, approximates, ShLinElement};
use crate::graph::{EdgeId, NodeId, ParallelSharingGraph, Violation};
use crate::group::{sorted_for_display, SharingGroup};
use crate::term::{
    mgu_existential, ExistentialSubstitution, FreshVars, Position, SubstError, Substitution, Term, Var, VarSetDisplay,
};
use crate::unify::{mgu_omega_groups, mgu_p, mgu_p_graphs, mgu_p_groups, Bound};

/// Name of the `k`-ary symbol used to collect fresh variables in witnesses.
pub fn collector_symbol(arity: usize) -> String {
    format!("r_{arity}")
}

fn collect(args: Vec<Term>) -> Term {
    Term::app(collector_symbol(args.len()), args)
}

/// One fresh variable per node, disjoint from the universe and from `θ`.
pub type FreshVarMap = BTreeMap<NodeId, Var>;

/// Per layer, the edge each fresh-variable occurrence in `δ(t_i)` is sent to.
pub type EdgeAssignment = Vec<BTreeMap<Position, EdgeId>>;

#[derive(Clone, Debug)]
pub struct Witness {
    pub delta: Substitution,
    pub fresh: FreshVarMap,
    pub assignment: EdgeAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("variables of the substitution outside the universe: {0}")]
    UniverseTooSmall(String),
    #[error("the graph has an empty resultant; the empty substitution witnesses it")]
    EmptyResultant,
    #[error("invalid sharing graph: {0}")]
    InvalidGraph(Violation),
    #[error("substitution: {0}")]
    Subst(#[from] SubstError),
    #[error("witness guarantee failed: {0}")]
    GuaranteeFailed(String),
}

/// Builds the concrete witness `δ` of a valid sharing graph over `universe`.
///
/// Each node `n` gets a fresh variable `w_n`. A variable `y` outside the
/// domain of `θ` is bound to `r_k(w_n, …)` with `w_n` repeated `l(n)(y)`
/// times, nodes in increasing order. For a binding `x_i/t_i`, each occurrence
/// of `w_n` in `δ(t_i)` (in position order) is assigned the next unused edge of
/// layer `i` targeting `n` (in edge order) and replaced by the variable of
/// that edge's source. Both correctness guarantees are checked before
/// returning.
pub fn witness_substitution(
    graph: &ParallelSharingGraph,
    universe: &BTreeSet<Var>,
    theta: &Substitution,
) -> Result<Witness, WitnessError> {
    theta.require_idempotent()?;
    let theta_vars = theta.vars();
    if !theta_vars.is_subset(universe) {
        let missing: BTreeSet<Var> = theta_vars.difference(universe).cloned().collect();
        return Err(WitnessError::UniverseTooSmall(VarSetDisplay(&missing).to_string()));
    }
    let labels: BTreeSet<SharingGroup> = graph.labels().values().cloned().collect();
    graph.validate(&labels, theta).map_err(WitnessError::InvalidGraph)?;
    let resultant = graph.resultant();
    if resultant.is_empty() {
        return Err(WitnessError::EmptyResultant);
    }
    if !resultant.support().is_subset(universe) {
        return Err(WitnessError::GuaranteeFailed(format!(
            "resultant {resultant} leaves the universe"
        )));
    }

    let mut avoid = universe.clone();
    avoid.extend(theta_vars);
    let mut gen = FreshVars::avoiding(avoid);
    let fresh: FreshVarMap = graph.node_ids().map(|n| (n, gen.next_var())).collect();
    let owner: BTreeMap<&Var, NodeId> = fresh.iter().map(|(&n, w)| (w, n)).collect();

    let mut base = BTreeMap::new();
    for y in universe.iter().filter(|y| theta.get(y).is_none()) {
        let args = graph
            .labels()
            .iter()
            .flat_map(|(n, label)| std::iter::repeat_n(Term::Var(fresh[n].clone()), label.get(y) as usize))
            .collect();
        base.insert(y.clone(), collect(args));
    }
    let base = Substitution::from_bindings(base)?;

    let mut bindings = base
        .bindings()
        .map(|(v, t)| (v.clone(), t.clone()))
        .collect::<BTreeMap<_, _>>();
    let mut assignment = EdgeAssignment::new();
    for (i, (x, t)) in theta.bindings().enumerate() {
        let image = base.apply(t);
        let mut incoming: BTreeMap<NodeId, Vec<(EdgeId, NodeId)>> = BTreeMap::new();
        for (&id, e) in graph.layer_edges(i) {
            incoming.entry(e.tgt).or_default().push((id, e.src));
        }
        for edges in incoming.values_mut() {
            edges.reverse(); // pop from the back in edge order
        }
        let mut layer = BTreeMap::new();
        let mut replacement = BTreeMap::new();
        for (pos, w) in image.var_positions() {
            let node = owner[w];
            let (edge, src) = incoming
                .get_mut(&node)
                .and_then(Vec::pop)
                .ok_or_else(|| WitnessError::GuaranteeFailed(format!("too few edges into {node} in layer {i}")))?;
            layer.insert(pos.clone(), edge);
            replacement.insert(pos, fresh[&src].clone());
        }
        if incoming.values().any(|rest| !rest.is_empty()) {
            return Err(WitnessError::GuaranteeFailed(format!("unassigned edges in layer {i}")));
        }
        bindings.insert(x.clone(), replace_at(&image, &replacement, &mut Vec::new()));
        assignment.push(layer);
    }
    let delta = Substitution::from_bindings(bindings)?;

    check_bookkeeping(graph, theta, &delta, &fresh)?;
    let class = ExistentialSubstitution::new(delta.clone(), universe.clone())?;
    let described = ShLinElement::new(universe.clone(), labels).expect("labels lie inside the universe");
    if !approximates(&described, &class) {
        return Err(WitnessError::GuaranteeFailed(
            "the labels do not approximate the witness".into(),
        ));
    }
    let unified = mgu_existential(&class, theta)
        .map_err(|e| WitnessError::GuaranteeFailed(format!("witness does not unify: {e}")))?;
    if !alpha_omega(&unified).contains(&resultant) {
        return Err(WitnessError::GuaranteeFailed(format!(
            "{resultant} does not arise from the witness"
        )));
    }
    Ok(Witness {
        delta,
        fresh,
        assignment,
    })
}

fn replace_at(t: &Term, replacement: &BTreeMap<Position, Var>, path: &mut Vec<usize>) -> Term {
    match t {
        Term::Var(v) => match replacement.get(&Position::new(path.clone())) {
            Some(w) => Term::Var(w.clone()),
            None => Term::Var(v.clone()),
        },
        Term::App(f, args) => {
            let mut out = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                path.push(i + 1);
                out.push(replace_at(a, replacement, path));
                path.pop();
            }
            Term::App(f.clone(), out)
        }
    }
}

/// `occ(w_n, δ(t_i)) = χ(l(n), t_i)` and `occ(w_n, δ(x_i)) = l(n)(x_i)`.
fn check_bookkeeping(
    graph: &ParallelSharingGraph,
    theta: &Substitution,
    delta: &Substitution,
    fresh: &FreshVarMap,
) -> Result<(), WitnessError> {
    for (x, t) in theta.bindings() {
        let image = delta.apply(t);
        let bound = delta.image(x);
        for (n, label) in graph.labels() {
            let w = &fresh[n];
            if image.occ(w) as u64 != label.chi(t) || bound.occ(w) != label.get(x) as usize {
                return Err(WitnessError::GuaranteeFailed(format!(
                    "occurrence count of {w} for node {n} in binding {x}"
                )));
            }
        }
    }
    Ok(())
}

/// Outcome of one of the checkers, printable as text or JSON.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Report {
    pub check: &'static str,
    pub instance: String,
    pub passed: bool,
    pub checked: Vec<CheckedItem>,
    pub violations: Vec<String>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CheckedItem {
    pub item: String,
    pub passed: bool,
}

impl Report {
    fn new(check: &'static str, instance: String, seed: Option<u64>) -> Self {
        Report {
            check,
            instance,
            passed: true,
            checked: Vec::new(),
            violations: Vec::new(),
            seed,
        }
    }

    fn record(&mut self, item: String, outcome: Result<(), String>) {
        let passed = outcome.is_ok();
        if let Err(why) = outcome {
            self.violations.push(format!("{item}: {why}"));
            self.passed = false;
        }
        self.checked.push(CheckedItem { item, passed });
    }

    fn violation(&mut self, message: String) {
        self.violations.push(message);
        self.passed = false;
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("reports serialize")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.check, self.instance)?;
        if let Some(seed) = self.seed {
            writeln!(f, "seed: {seed}")?;
        }
        for c in &self.checked {
            writeln!(f, "  {} {}", if c.passed { "ok  " } else { "FAIL" }, c.item)?;
        }
        for v in &self.violations {
            writeln!(f, "  violation: {v}")?;
        }
        write!(
            f,
            "{} ({} checked, {} violations)",
            if self.passed { "passed" } else { "FAILED" },
            self.checked.len(),
            self.violations.len()
        )
    }
}

fn groups_text<'a>(groups: impl IntoIterator<Item = &'a SharingGroup>) -> String {
    let shown: Vec<String> = sorted_for_display(groups).iter().map(|g| g.to_string()).collect();
    if shown.is_empty() {
        "{}".into()
    } else {
        shown.join(" | ")
    }
}

/// Verifies that every non-empty group of `mgu_p(a, θ, c)` is produced by the
/// concrete unification of its witness with `θ`.
///
/// When `θ` mentions variables outside the universe of `a`, witnesses are
/// built over the extended universe and then read back over the original one.
pub fn check_optimality(a: &ShLinElement, theta: &Substitution, bound: Bound) -> Result<Report, SubstError> {
    let mut report = Report::new("optimality", format!("{a} with {theta}, bound {bound}"), None);
    let extended = a.extend_universe(&theta.vars());
    if a.is_bottom() {
        mgu_p_graphs(&BTreeSet::new(), theta, bound)?;
        return Ok(report);
    }
    let graphs = mgu_p_graphs(extended.groups(), theta, bound)?;
    for (group, graph) in &graphs {
        let Some(graph) = graph else { continue };
        let outcome = witness_substitution(graph, extended.universe(), theta)
            .map_err(|e| e.to_string())
            .and_then(|w| {
                let class =
                    ExistentialSubstitution::new(w.delta.clone(), a.universe().clone()).map_err(|e| e.to_string())?;
                if !approximates(a, &class) {
                    return Err(format!("{a} does not approximate witness {}", w.delta));
                }
                let unified = mgu_existential(&class, theta).map_err(|e| e.to_string())?;
                if alpha_omega(&unified).contains(group) {
                    Ok(())
                } else {
                    Err(format!("witness {} does not produce it", w.delta))
                }
            });
        report.record(group.to_string(), outcome);
    }
    Ok(report)
}

/// A random concrete substitution described by `a`: non-empty groups are
/// picked (1 to 4 of them, repetition allowed), each pick gets a fresh
/// variable, and every `y ∈ U` is bound to `r_k` applied to each pick's
/// variable repeated by the pick's multiplicity of `y`.
///
/// Returns `None` for the element without groups, which describes nothing.
pub fn random_concrete(a: &ShLinElement, seed: u64) -> Option<ExistentialSubstitution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = pick_groups(a, &mut rng)?;
    let mut gen = FreshVars::avoiding(a.universe().clone());
    let vars: Vec<Var> = picks.iter().map(|_| gen.next_var()).collect();
    let bindings = a.universe().iter().map(|y| {
        let args = picks
            .iter()
            .zip(&vars)
            .flat_map(|(g, w)| std::iter::repeat_n(Term::Var(w.clone()), g.get(y) as usize))
            .collect();
        (y.clone(), collect(args))
    });
    let delta = Substitution::from_bindings(bindings).expect("one binding per variable");
    let class = ExistentialSubstitution::new(delta, a.universe().clone()).expect("ranges are fresh");
    assert!(approximates(a, &class), "random_concrete must stay inside the element");
    Some(class)
}

fn pick_groups(a: &ShLinElement, rng: &mut ChaCha8Rng) -> Option<Vec<SharingGroup>> {
    if a.is_bottom() {
        return None;
    }
    let nonempty: Vec<&SharingGroup> = a.groups().iter().filter(|g| !g.is_empty()).collect();
    if nonempty.is_empty() {
        return Some(Vec::new());
    }
    let count = rng.gen_range(1..=4);
    Some(
        (0..count)
            .map(|_| (*nonempty.choose(rng).expect("non-empty")).clone())
            .collect(),
    )
}

/// Like [`random_concrete`], but each binding scatters its variable
/// occurrences over a random tree built from `symbols` and ground leaves, so
/// that unification with `θ` exercises decomposition and clashes.
fn shaped_concrete(
    a: &ShLinElement,
    symbols: &[(String, usize)],
    rng: &mut ChaCha8Rng,
) -> Option<ExistentialSubstitution> {
    let picks = pick_groups(a, rng)?;
    let mut gen = FreshVars::avoiding(a.universe().clone());
    let vars: Vec<Var> = picks.iter().map(|_| gen.next_var()).collect();
    let mut bindings = Vec::new();
    for y in a.universe() {
        let mut leaves: Vec<Term> = picks
            .iter()
            .zip(&vars)
            .flat_map(|(g, w)| std::iter::repeat_n(Term::Var(w.clone()), g.get(y) as usize))
            .collect();
        leaves.shuffle(rng);
        bindings.push((y.clone(), random_tree(leaves, symbols, rng, 0)));
    }
    let delta = Substitution::from_bindings(bindings).expect("one binding per variable");
    let class = ExistentialSubstitution::new(delta, a.universe().clone()).expect("ranges are fresh");
    assert!(
        approximates(a, &class),
        "generated substitution must stay inside the element"
    );
    Some(class)
}

/// A term whose variable occurrences are exactly `leaves`, in order.
fn random_tree(leaves: Vec<Term>, symbols: &[(String, usize)], rng: &mut ChaCha8Rng, depth: usize) -> Term {
    const CONSTANTS: [&str; 2] = ["a", "b"];
    if leaves.len() == 1 && (depth > 0 && rng.gen_bool(0.5) || depth >= 3) {
        return leaves.into_iter().next().expect("one leaf");
    }
    if leaves.is_empty() && (depth >= 3 || rng.gen_bool(0.6)) {
        return Term::constant(CONSTANTS[rng.gen_range(0..CONSTANTS.len())]);
    }
    if depth >= 3 {
        return collect(leaves);
    }
    let usable: Vec<&(String, usize)> = symbols.iter().filter(|(_, k)| *k > 0).collect();
    let (name, arity) = match usable.choose(rng) {
        Some(&(name, arity)) if rng.gen_bool(0.7) => (name.clone(), *arity),
        _ => {
            let arity = leaves.len().max(1);
            (collector_symbol(arity), arity)
        }
    };
    // split the leaves into `arity` consecutive (possibly empty) chunks
    let mut cuts: Vec<usize> = (0..arity - 1).map(|_| rng.gen_range(0..=leaves.len())).collect();
    cuts.sort_unstable();
    cuts.push(leaves.len());
    let mut args = Vec::with_capacity(arity);
    let mut rest = leaves.into_iter();
    let mut start = 0;
    for cut in cuts {
        let chunk: Vec<Term> = rest.by_ref().take(cut - start).collect();
        start = cut;
        args.push(random_tree(chunk, symbols, rng, depth + 1));
    }
    Term::app(name, args)
}

/// A concrete substitution that unifies with `θ` by construction.
///
/// Picks groups (over `U ∪ vars(θ)`) whose degrees balance in every layer,
/// binds each variable outside `dom(θ)` to a random tree over the picks'
/// variables, and builds `δ(x_i)` from `δ(t_i)` by sending its occurrences to
/// a random permutation of the out-stubs of layer `i` — a witness for a
/// random, possibly disconnected, sharing graph.
fn paired_concrete(
    a: &ShLinElement,
    theta: &Substitution,
    symbols: &[(String, usize)],
    rng: &mut ChaCha8Rng,
) -> Option<ExistentialSubstitution> {
    let extended = a.extend_universe(&theta.vars());
    let nonempty: Vec<&SharingGroup> = extended.groups().iter().filter(|g| !g.is_empty()).collect();
    if nonempty.is_empty() {
        return None;
    }
    let balanced = |picks: &[SharingGroup]| {
        theta.bindings().all(|(x, t)| {
            let out: u64 = picks.iter().map(|g| u64::from(g.get(x))).sum();
            let inn: u64 = picks.iter().map(|g| g.chi(t)).sum();
            out == inn
        })
    };
    let picks = (0..64).find_map(|_| {
        let count = rng.gen_range(1..=5);
        let picks: Vec<SharingGroup> = (0..count)
            .map(|_| (*nonempty.choose(rng).expect("non-empty")).clone())
            .collect();
        balanced(&picks).then_some(picks)
    })?;

    let mut gen = FreshVars::avoiding(extended.universe().clone());
    let vars: Vec<Var> = picks.iter().map(|_| gen.next_var()).collect();
    let mut base = Vec::new();
    for y in extended.universe().iter().filter(|y| theta.get(y).is_none()) {
        let mut leaves: Vec<Term> = picks
            .iter()
            .zip(&vars)
            .flat_map(|(g, w)| std::iter::repeat_n(Term::Var(w.clone()), g.get(y) as usize))
            .collect();
        leaves.shuffle(rng);
        base.push((y.clone(), random_tree(leaves, symbols, rng, 0)));
    }
    let base = Substitution::from_bindings(base).expect("one binding per variable");
    let mut bindings: Vec<(Var, Term)> = base.bindings().map(|(v, t)| (v.clone(), t.clone())).collect();
    for (x, t) in theta.bindings() {
        let image = base.apply(t);
        let mut stubs: Vec<&Var> = picks
            .iter()
            .zip(&vars)
            .flat_map(|(g, w)| std::iter::repeat_n(w, g.get(x) as usize))
            .collect();
        stubs.shuffle(rng);
        let replacement: BTreeMap<Position, Var> = image
            .var_positions()
            .into_iter()
            .zip(stubs)
            .map(|((pos, _), w)| (pos, w.clone()))
            .collect();
        bindings.push((x.clone(), replace_at(&image, &replacement, &mut Vec::new())));
    }
    let delta = Substitution::from_bindings(bindings).expect("one binding per variable");
    let class = ExistentialSubstitution::new(delta, a.universe().clone()).expect("ranges are fresh");
    assert!(
        approximates(a, &class),
        "generated substitution must stay inside the element"
    );
    Some(class)
}

fn theta_symbols(theta: &Substitution) -> Vec<(String, usize)> {
    fn walk(t: &Term, out: &mut BTreeSet<(String, usize)>) {
        if let Term::App(f, args) = t {
            out.insert((f.to_string(), args.len()));
            args.iter().for_each(|a| walk(a, out));
        }
    }
    let mut out = BTreeSet::new();
    for (_, t) in theta.bindings() {
        walk(t, &mut out);
    }
    out.into_iter().collect()
}

/// Unifies `trials` random concrete substitutions described by `a` with `θ`
/// and reports every resulting group of cardinality at most the bound that
/// `mgu_p(a, θ, c)` misses.
///
/// Trial `k` depends only on `(seed, k)`. Trials cycle through three
/// generators: [`random_concrete`]; substitutions built from balanced group
/// picks so that they always unify with `θ` (half of the trials); and random
/// term shapes that mostly exercise clashes. When no balanced picks are
/// found, [`random_concrete`] is used instead.
pub fn check_soundness(
    a: &ShLinElement,
    theta: &Substitution,
    bound: Bound,
    trials: u32,
    seed: u64,
) -> Result<Report, SubstError> {
    let mut report = Report::new(
        "soundness",
        format!("{a} with {theta}, bound {bound}, {trials} trials"),
        Some(seed),
    );
    let predicted = mgu_p(a, theta, bound)?;
    let symbols = theta_symbols(theta);
    for k in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(k));
        let delta = match k % 4 {
            0 => random_concrete(a, rng.gen()),
            2 => shaped_concrete(a, &symbols, &mut rng),
            _ => paired_concrete(a, theta, &symbols, &mut rng).or_else(|| random_concrete(a, rng.gen())),
        };
        let Some(delta) = delta else { break };
        let Ok(unified) = mgu_existential(&delta, theta) else {
            report.checked.push(CheckedItem {
                item: format!("trial {k}: {delta} does not unify"),
                passed: true,
            });
            continue;
        };
        let produced = alpha_omega(&unified);
        let missing: Vec<&SharingGroup> = produced
            .groups()
            .iter()
            .filter(|g| g.cardinality() <= bound.get() && !predicted.contains(g))
            .collect();
        let outcome = if missing.is_empty() {
            Ok(())
        } else {
            Err(format!("unpredicted groups {}", groups_text(missing)))
        };
        report.record(format!("trial {k}: {delta}"), outcome);
    }
    Ok(report)
}

/// Compares the bounded parallel and sequential operators on `S` and `θ`.
pub fn check_coincidence(
    groups: &BTreeSet<SharingGroup>,
    theta: &Substitution,
    bound: Bound,
) -> Result<Report, SubstError> {
    let mut report = Report::new(
        "coincidence",
        format!("{} with {theta}, bound {bound}", groups_text(groups)),
        None,
    );
    let parallel = mgu_p_groups(groups, theta, bound)?;
    let sequential = mgu_omega_groups(groups, theta, bound)?;
    for g in sorted_for_display(parallel.union(&sequential)) {
        let outcome = match (parallel.contains(g), sequential.contains(g)) {
            (true, true) => Ok(()),
            (true, false) => Err("parallel only".to_string()),
            _ => Err("sequential only".to_string()),
        };
        report.record(g.to_string(), outcome);
    }
    if parallel != sequential && report.passed {
        report.violation("the two results differ".into());
    }
    Ok(report)
}
