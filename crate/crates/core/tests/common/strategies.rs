//! proptest strategies for terms, substitutions, groups and small instances.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::sample::select;
use shlin_core::{Bound, ParallelSharingGraph, SharingGroup, Substitution, Term, Var};

pub const NAMES: [&str; 6] = ["u", "v", "w", "x", "y", "z"];

pub fn var() -> impl Strategy<Value = Var> {
    select(NAMES.to_vec()).prop_map(Var::new)
}

pub fn var_from(pool: Vec<Var>) -> BoxedStrategy<Var> {
    select(pool).boxed()
}

pub fn term_over(pool: Vec<Var>, depth: u32) -> BoxedStrategy<Term> {
    let constant = select(vec!["a", "b"]).prop_map(Term::constant);
    let leaf = if pool.is_empty() {
        constant.boxed()
    } else {
        prop_oneof![3 => var_from(pool).prop_map(Term::Var), 1 => constant].boxed()
    };
    leaf.prop_recursive(depth, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app("g", vec![a, b])),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| Term::app("h", vec![a, b, c])),
        ]
    })
    .boxed()
}

pub fn term() -> BoxedStrategy<Term> {
    term_over(NAMES.iter().map(Var::new).collect(), 3)
}

pub fn group() -> impl Strategy<Value = SharingGroup> {
    prop::collection::vec((var(), 1u32..4), 0..4).prop_map(SharingGroup::from_counts)
}

pub fn group_over(pool: Vec<Var>) -> impl Strategy<Value = SharingGroup> {
    prop::collection::vec(var_from(pool), 1..=3).prop_map(SharingGroup::from_iter)
}

/// An idempotent substitution: the domain is a random subset of the names and
/// terms only use the remaining ones.
pub fn idempotent_subst(max_bindings: usize, depth: u32) -> BoxedStrategy<Substitution> {
    Just(NAMES.iter().map(Var::new).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_flat_map(move |names| {
            (0..=max_bindings.min(names.len())).prop_flat_map(move |k| {
                let (dom, rest) = names.split_at(k);
                let dom = dom.to_vec();
                let terms = prop::collection::vec(term_over(rest.to_vec(), depth), k);
                terms.prop_map(move |ts| {
                    Substitution::from_bindings(dom.iter().cloned().zip(ts)).expect("distinct domain")
                })
            })
        })
        .boxed()
}

/// Any substitution, not necessarily idempotent.
pub fn subst() -> impl Strategy<Value = Substitution> {
    prop::collection::btree_map(var(), term(), 0..4)
        .prop_map(|m: BTreeMap<Var, Term>| Substitution::from_bindings(m).expect("map keys are distinct"))
}

/// A small abstract unification instance over a universe of up to 4 variables.
#[derive(Clone, Debug)]
pub struct Small {
    pub universe: BTreeSet<Var>,
    pub groups: BTreeSet<SharingGroup>,
    pub theta: Substitution,
    pub bound: Bound,
}

pub fn small_instance(max_bound: u64) -> BoxedStrategy<Small> {
    Just(NAMES.iter().map(Var::new).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_flat_map(move |names| {
            (1usize..=4).prop_flat_map(move |size| {
                let universe: Vec<Var> = names[..size].to_vec();
                let groups = prop::collection::btree_set(group_over(universe.clone()), 1..=4);
                let theta = (0..=2usize.min(size)).prop_flat_map({
                    let universe = universe.clone();
                    move |k| {
                        let (dom, rest) = universe.split_at(k);
                        let dom = dom.to_vec();
                        prop::collection::vec(term_over(rest.to_vec(), 2), k).prop_map(move |ts| {
                            Substitution::from_bindings(dom.iter().cloned().zip(ts)).expect("distinct domain")
                        })
                    }
                });
                (Just(universe), groups, theta, 1..=max_bound).prop_map(|(u, groups, theta, c)| Small {
                    universe: u.into_iter().collect(),
                    groups,
                    theta,
                    bound: Bound::new(c).expect("positive"),
                })
            })
        })
        .boxed()
}

/// A valid sharing graph, found by the library for a small instance.
pub fn valid_graph() -> BoxedStrategy<(ParallelSharingGraph, Substitution, BTreeSet<Var>)> {
    (small_instance(6), any::<prop::sample::Index>())
        .prop_filter_map("no non-trivial graph", |(inst, pick)| {
            let graphs = shlin_core::mgu_p_graphs(&inst.groups, &inst.theta, inst.bound).ok()?;
            let graphs: Vec<ParallelSharingGraph> = graphs.into_values().flatten().collect();
            if graphs.is_empty() {
                return None;
            }
            Some((pick.get(&graphs).clone(), inst.theta, inst.universe))
        })
        .boxed()
}
