//! Property suites, each run for a fixed number of random cases.
//!
//! Every property is a plain function so that both the `properties` test
//! target and the acceptance summary can run it.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::sample::{subsequence, Index};
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use shlin_core::syntax::{
    graph_to_json, parse_element, parse_existential, parse_graph_json, parse_group, parse_substitution, parse_term,
};
use shlin_core::{
    alpha_omega, approximates, equiv_mod_renaming, mgu_existential, mgu_omega_groups, mgu_omega_groups_in_order, mgu_p,
    mgu_p_groups, unify, witness_substitution, Bound, Edge, EdgeId, EquationSet, ExistentialSubstitution, NodeId,
    ParallelSharingGraph, Position, ShLinElement, SharingGroup, Substitution, Term, Var,
};

use super::strategies::*;

pub const CASES: u32 = 1000;

pub type Property = (&'static str, fn() -> Result<u32, String>);

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<u32, String> {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        max_global_rejects: 1_000_000,
        ..Config::default()
    };
    let mut runner = TestRunner::new(config);
    runner.run(&strategy, test).map(|()| CASES).map_err(|e| e.to_string())
}

fn subset_of_names() -> impl Strategy<Value = BTreeSet<Var>> {
    subsequence(NAMES.to_vec(), 0..=NAMES.len()).prop_map(|v| v.into_iter().map(Var::new).collect())
}

/// `{v/ρ(θ(v)) | v ∈ U}` where ρ sends every variable outside `U` to `prefix_i`.
fn rename_outside(theta: &Substitution, universe: &BTreeSet<Var>, prefix: &str) -> Substitution {
    let mut fresh: BTreeMap<Var, Var> = BTreeMap::new();
    let mut map = Vec::new();
    for v in universe {
        let t = theta.image(v).map_vars(&mut |w| {
            if universe.contains(w) {
                Term::Var(w.clone())
            } else {
                let n = fresh.len();
                Term::Var(
                    fresh
                        .entry(w.clone())
                        .or_insert_with(|| Var::new(format!("{prefix}{n}")))
                        .clone(),
                )
            }
        });
        map.push((v.clone(), t));
    }
    Substitution::from_bindings(map).expect("one binding per variable")
}

/// `{v/ρ(θ(v)) | v ∈ U}` for ρ renaming every variable to `prefix_i`.
fn rename_all(theta: &Substitution, universe: &BTreeSet<Var>, prefix: &str) -> Substitution {
    let mut fresh: BTreeMap<Var, Var> = BTreeMap::new();
    let map = universe.iter().map(|v| {
        let t = theta.image(v).map_vars(&mut |w| {
            let n = fresh.len();
            Term::Var(
                fresh
                    .entry(w.clone())
                    .or_insert_with(|| Var::new(format!("{prefix}{n}")))
                    .clone(),
            )
        });
        (v.clone(), t)
    });
    Substitution::from_bindings(map.collect::<Vec<_>>()).expect("one binding per variable")
}

fn positions(t: &Term) -> Vec<Position> {
    fn go(t: &Term, path: &mut Vec<usize>, out: &mut Vec<Position>) {
        out.push(Position::new(path.clone()));
        if let Term::App(_, args) = t {
            for (i, a) in args.iter().enumerate() {
                path.push(i + 1);
                go(a, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

// ---- terms and substitutions ----

pub fn unify_solves_equations() -> Result<u32, String> {
    let pairs = prop::collection::vec((term(), term()), 1..4);
    run(pairs, |pairs| {
        let eqs: EquationSet = pairs.iter().cloned().collect();
        if let Ok(sigma) = unify(&eqs) {
            prop_assert!(sigma.is_idempotent());
            for (l, r) in &pairs {
                prop_assert_eq!(sigma.apply(l), sigma.apply(r));
            }
        }
        Ok(())
    })
}

pub fn unify_recovers_idempotent_substitutions() -> Result<u32, String> {
    run(idempotent_subst(3, 2), |theta| {
        let sigma = unify(&theta.equations()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(equiv_mod_renaming(&sigma, &theta, &theta.vars()));
        Ok(())
    })
}

pub fn composition_is_a_monoid() -> Result<u32, String> {
    run((subst(), subst(), subst()), |(a, b, c)| {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        prop_assert_eq!(a.compose(&Substitution::empty()), a.clone());
        prop_assert_eq!(Substitution::empty().compose(&a), a);
        Ok(())
    })
}

pub fn renaming_equivalence_is_an_equivalence() -> Result<u32, String> {
    let triple = (
        idempotent_subst(3, 2),
        idempotent_subst(3, 2),
        idempotent_subst(3, 2),
        subset_of_names(),
    );
    run(triple, |(a, b, c, u)| {
        prop_assert!(equiv_mod_renaming(&a, &a, &u));
        let a1 = rename_all(&a, &u, "p");
        let a2 = rename_all(&a1, &u, "q");
        prop_assert!(equiv_mod_renaming(&a, &a1, &u));
        prop_assert!(equiv_mod_renaming(&a1, &a, &u));
        prop_assert!(equiv_mod_renaming(&a1, &a2, &u));
        prop_assert!(equiv_mod_renaming(&a, &a2, &u));
        prop_assert_eq!(equiv_mod_renaming(&a, &b, &u), equiv_mod_renaming(&b, &a, &u));
        if equiv_mod_renaming(&a, &b, &u) && equiv_mod_renaming(&b, &c, &u) {
            prop_assert!(equiv_mod_renaming(&a, &c, &u));
        }
        Ok(())
    })
}

pub fn existential_unification_ignores_the_representative() -> Result<u32, String> {
    run(
        (idempotent_subst(3, 2), idempotent_subst(2, 2), subset_of_names()),
        |(delta, theta, u)| {
            let d1 = ExistentialSubstitution::new(delta.clone(), u.clone()).expect("idempotent");
            let renamed = rename_outside(&delta, &u, "q");
            let d2 = ExistentialSubstitution::new(renamed, u.clone()).expect("fresh ranges");
            prop_assert_eq!(&d1, &d2);
            match (mgu_existential(&d1, &theta), mgu_existential(&d2, &theta)) {
                (Ok(r1), Ok(r2)) => prop_assert_eq!(r1, r2),
                (Err(_), Err(_)) => {}
                (r1, r2) => return Err(TestCaseError::fail(format!("{r1:?} vs {r2:?}"))),
            }
            Ok(())
        },
    )
}

pub fn application_commutes_with_subterms() -> Result<u32, String> {
    run((term(), subst(), any::<Index>()), |(t, theta, pick)| {
        let all = positions(&t);
        let pos = pick.get(&all);
        let sub = t.subterm_at(pos).expect("listed position");
        let applied = theta.apply(&t);
        prop_assert_eq!(applied.subterm_at(pos), Some(&theta.apply(sub)));
        Ok(())
    })
}

// ---- groups ----

pub fn multiset_sum_laws() -> Result<u32, String> {
    run((group(), group(), group()), |(a, b, c)| {
        prop_assert_eq!(a.msum(&b), b.msum(&a));
        prop_assert_eq!(a.msum(&b).msum(&c), a.msum(&b.msum(&c)));
        prop_assert_eq!(a.msum(&SharingGroup::empty()), a.clone());
        prop_assert_eq!(a.msum(&b).cardinality(), a.cardinality() + b.cardinality());
        Ok(())
    })
}

pub fn restriction_distributes_over_sum() -> Result<u32, String> {
    run((group(), group(), subset_of_names()), |(a, b, x)| {
        prop_assert_eq!(a.msum(&b).restrict(&x), a.restrict(&x).msum(&b.restrict(&x)));
        Ok(())
    })
}

pub fn chi_is_linear() -> Result<u32, String> {
    run((group(), group(), term(), var()), |(a, b, t, x)| {
        prop_assert_eq!(a.msum(&b).chi(&t), a.chi(&t) + b.chi(&t));
        prop_assert_eq!(a.chi(&Term::Var(x.clone())), u64::from(a.get(&x)));
        prop_assert_eq!(SharingGroup::empty().chi(&t), 0);
        Ok(())
    })
}

// ---- sharing graphs ----

type Layers = Vec<Vec<(EdgeId, Edge)>>;

fn random_graph() -> impl Strategy<Value = (BTreeMap<NodeId, SharingGroup>, Layers)> {
    (1u32..=5).prop_flat_map(|n| {
        let labels = prop::collection::vec(group(), n as usize);
        let edge = (0..n, 0..n);
        let layers = prop::collection::vec(prop::collection::vec(edge, 0..4), 0..4);
        (labels, layers).prop_map(|(labels, layers)| {
            let labels = labels
                .into_iter()
                .enumerate()
                .map(|(i, g)| (NodeId(i as u32), g))
                .collect();
            let mut next = 0;
            let layers = layers
                .into_iter()
                .map(|l| {
                    l.into_iter()
                        .map(|(s, t)| {
                            next += 1;
                            (
                                EdgeId(next),
                                Edge {
                                    src: NodeId(s),
                                    tgt: NodeId(t),
                                },
                            )
                        })
                        .collect()
                })
                .collect();
            (labels, layers)
        })
    })
}

fn layers_of(g: &ParallelSharingGraph) -> Layers {
    (0..g.layer_count())
        .map(|i| g.layer_edges(i).iter().map(|(&id, &e)| (id, e)).collect())
        .collect()
}

pub fn flattening_preserves_structure() -> Result<u32, String> {
    run((random_graph(), any::<u64>()), |((labels, layers), seed)| {
        let g = ParallelSharingGraph::new(labels.clone(), layers.clone()).expect("well-formed");
        let flat = g.flatten();
        prop_assert_eq!(flat.nodes().len(), labels.len());
        prop_assert_eq!(flat.edges().len(), layers.iter().map(Vec::len).sum::<usize>());
        let mut permuted = layers;
        let k = (seed as usize) % permuted.len().max(1);
        permuted.rotate_left(k);
        if permuted.len() > 1 && seed % 2 == 0 {
            permuted.swap(0, 1);
        }
        let h = ParallelSharingGraph::new(labels, permuted).expect("well-formed");
        prop_assert_eq!(h.flatten().is_connected(), flat.is_connected());
        Ok(())
    })
}

pub fn resultant_is_isomorphism_invariant() -> Result<u32, String> {
    run((valid_graph(), any::<u64>()), |((g, theta, _), seed)| {
        let n = g.labels().len() as u32;
        // node i becomes 10 + ((i + shift) mod n); edge ids are reversed and offset
        let shift = (seed % u64::from(n)) as u32;
        let node = |id: NodeId| NodeId(10 + (id.0 + shift) % n);
        let labels = g.labels().iter().map(|(&id, l)| (node(id), l.clone())).collect();
        let layers: Layers = layers_of(&g)
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .map(|(id, e)| {
                        (
                            EdgeId(1000 - id.0),
                            Edge {
                                src: node(e.src),
                                tgt: node(e.tgt),
                            },
                        )
                    })
                    .collect()
            })
            .collect();
        let h = ParallelSharingGraph::new(labels, layers).expect("well-formed");
        prop_assert_eq!(h.resultant(), g.resultant());
        let groups: BTreeSet<SharingGroup> = g.labels().values().cloned().collect();
        prop_assert_eq!(h.validate(&groups, &theta).is_ok(), g.validate(&groups, &theta).is_ok());
        Ok(())
    })
}

pub fn valid_graphs_balance_degrees() -> Result<u32, String> {
    run(valid_graph(), |(g, theta, _)| {
        let groups: BTreeSet<SharingGroup> = g.labels().values().cloned().collect();
        prop_assert!(g.validate(&groups, &theta).is_ok());
        for (i, (x, t)) in theta.bindings().enumerate() {
            let out: u64 = g.labels().values().map(|l| l.chi(&Term::Var(x.clone()))).sum();
            let inn: u64 = g.labels().values().map(|l| l.chi(t)).sum();
            prop_assert_eq!(out, inn);
            prop_assert_eq!(out as usize, g.layer_edges(i).len());
        }
        Ok(())
    })
}

// ---- the abstract domain ----

pub fn abstraction_ignores_the_representative() -> Result<u32, String> {
    run((idempotent_subst(3, 2), subset_of_names()), |(theta, u)| {
        let d1 = ExistentialSubstitution::new(theta.clone(), u.clone()).expect("idempotent");
        let d2 = ExistentialSubstitution::new(rename_outside(&theta, &u, "q"), u).expect("fresh ranges");
        prop_assert_eq!(alpha_omega(&d1), alpha_omega(&d2));
        Ok(())
    })
}

pub fn abstraction_is_least_and_approximation_monotone() -> Result<u32, String> {
    let input = (
        idempotent_subst(3, 2),
        subset_of_names(),
        prop::collection::vec(group(), 0..3),
        any::<Index>(),
    );
    run(input, |(theta, u, extra, pick)| {
        let d = ExistentialSubstitution::new(theta, u.clone()).expect("idempotent");
        let best = alpha_omega(&d);
        prop_assert!(approximates(&best, &d));
        prop_assert!(best.contains(&SharingGroup::empty()));
        // anything above approximates too
        let more: Vec<SharingGroup> = extra.into_iter().map(|g| g.restrict(&u)).collect();
        let bigger = ShLinElement::new(u.clone(), best.groups().iter().cloned().chain(more)).expect("inside U");
        prop_assert!(best.leq(&bigger));
        prop_assert!(approximates(&bigger, &d));
        // and nothing strictly below does
        let nonempty: Vec<&SharingGroup> = best.groups().iter().filter(|g| !g.is_empty()).collect();
        if !nonempty.is_empty() {
            let drop = *pick.get(&nonempty);
            let smaller = ShLinElement::new(u, best.groups().iter().filter(|g| *g != drop).cloned()).expect("inside U");
            prop_assert!(!approximates(&smaller, &d));
        }
        Ok(())
    })
}

// ---- abstract unification ----

pub fn sequential_order_is_irrelevant() -> Result<u32, String> {
    run(small_instance(6), |inst| {
        let mut order: Vec<(Var, Term)> = inst.theta.bindings().map(|(x, t)| (x.clone(), t.clone())).collect();
        let sorted = mgu_omega_groups(&inst.groups, &inst.theta, inst.bound).expect("idempotent");
        order.reverse();
        let reversed = mgu_omega_groups_in_order(&inst.groups, &order, inst.bound).expect("idempotent");
        prop_assert_eq!(sorted, reversed);
        Ok(())
    })
}

pub fn bound_is_monotone_and_exact() -> Result<u32, String> {
    run((small_instance(5), 0u64..3), |(inst, extra)| {
        let small = mgu_p_groups(&inst.groups, &inst.theta, inst.bound).expect("idempotent");
        let larger = Bound::new(inst.bound.get() + extra).expect("positive");
        let big = mgu_p_groups(&inst.groups, &inst.theta, larger).expect("idempotent");
        prop_assert!(small.is_subset(&big));
        let cut: BTreeSet<SharingGroup> = big
            .into_iter()
            .filter(|g| g.cardinality() <= inst.bound.get())
            .collect();
        prop_assert_eq!(small, cut);
        Ok(())
    })
}

pub fn outputs_are_well_formed() -> Result<u32, String> {
    run(small_instance(6), |inst| {
        let a = ShLinElement::new(inst.universe.clone(), inst.groups.clone()).expect("inside U");
        let out = mgu_p(&a, &inst.theta, inst.bound).expect("idempotent");
        let mut universe = inst.universe.clone();
        universe.extend(inst.theta.vars());
        prop_assert_eq!(out.universe(), &universe);
        prop_assert!(out.contains(&SharingGroup::empty()));
        for g in out.groups() {
            prop_assert!(g.support().is_subset(&universe));
            prop_assert!(g.cardinality() <= inst.bound.get());
        }
        prop_assert!(a.extend_universe(&universe).contains(&SharingGroup::empty()));
        Ok(())
    })
}

pub fn parallel_and_sequential_coincide() -> Result<u32, String> {
    run(small_instance(6), |inst| {
        let p = mgu_p_groups(&inst.groups, &inst.theta, inst.bound).expect("idempotent");
        let o = mgu_omega_groups(&inst.groups, &inst.theta, inst.bound).expect("idempotent");
        prop_assert_eq!(p, o);
        Ok(())
    })
}

// ---- witnesses ----

pub fn witnesses_keep_their_promises() -> Result<u32, String> {
    run(valid_graph(), |(g, theta, universe)| {
        let w = witness_substitution(&g, &universe, &theta).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(w.delta.is_idempotent());
        for (x, t) in theta.bindings() {
            for (n, label) in g.labels() {
                let fresh = &w.fresh[n];
                prop_assert_eq!(w.delta.apply(t).occ(fresh) as u64, label.chi(t));
                prop_assert_eq!(w.delta.image(x).occ(fresh), label.get(x) as usize);
            }
        }
        let d = ExistentialSubstitution::new(w.delta, universe).expect("idempotent");
        let unified = mgu_existential(&d, &theta).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(alpha_omega(&unified).contains(&g.resultant()));
        Ok(())
    })
}

// ---- text forms ----

pub fn printed_forms_parse_back() -> Result<u32, String> {
    let input = (
        term(),
        subst(),
        group(),
        idempotent_subst(3, 2),
        subset_of_names(),
        valid_graph(),
    );
    run(input, |(t, s, g, theta, u, (graph, _, _))| {
        let vars: BTreeSet<Var> = NAMES.iter().map(Var::new).collect();
        prop_assert_eq!(parse_term(&t.to_string(), &vars).expect("term"), t);
        prop_assert_eq!(parse_substitution(&s.to_string(), &vars).expect("substitution"), s);
        prop_assert_eq!(parse_group(&g.to_string(), &vars).expect("group"), g);
        let d = ExistentialSubstitution::new(theta, u.clone()).expect("idempotent");
        prop_assert_eq!(parse_existential(&d.to_string(), &vars).expect("class"), d.clone());
        let a = alpha_omega(&d);
        prop_assert_eq!(parse_element(&a.to_string()).expect("element"), a);
        let json = graph_to_json(&graph).to_string();
        prop_assert_eq!(parse_graph_json(&json, &vars).expect("graph"), graph);
        Ok(())
    })
}

pub fn all() -> Vec<Property> {
    vec![
        ("unify solves its equations", unify_solves_equations),
        (
            "unify recovers idempotent substitutions",
            unify_recovers_idempotent_substitutions,
        ),
        ("composition is associative with identity", composition_is_a_monoid),
        (
            "renaming equivalence is an equivalence",
            renaming_equivalence_is_an_equivalence,
        ),
        (
            "existential unification ignores the representative",
            existential_unification_ignores_the_representative,
        ),
        ("application commutes with subterms", application_commutes_with_subterms),
        ("multiset sum laws", multiset_sum_laws),
        ("restriction distributes over sum", restriction_distributes_over_sum),
        ("chi is linear", chi_is_linear),
        ("flattening preserves structure", flattening_preserves_structure),
        ("resultant is isomorphism invariant", resultant_is_isomorphism_invariant),
        ("valid graphs balance degrees", valid_graphs_balance_degrees),
        (
            "abstraction ignores the representative",
            abstraction_ignores_the_representative,
        ),
        (
            "abstraction is least; approximation is monotone",
            abstraction_is_least_and_approximation_monotone,
        ),
        ("sequential order is irrelevant", sequential_order_is_irrelevant),
        ("bound is monotone and exact", bound_is_monotone_and_exact),
        ("outputs are well formed", outputs_are_well_formed),
        ("parallel and sequential coincide", parallel_and_sequential_coincide),
        ("witnesses keep their promises", witnesses_keep_their_promises),
        ("printed forms parse back", printed_forms_parse_back),
    ]
}
