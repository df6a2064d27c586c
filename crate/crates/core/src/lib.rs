//! Sharing and linearity analysis for logic programs with ω-sharing groups.
//!
//! The crate provides concrete unification over existential substitutions,
//! the abstraction `α_ω` into sets of ω-sharing groups, and bounded parallel
//! and sequential abstract unification computed through sharing graphs.
//! The [`oracle`] module turns the correctness results for these operators
//! into executable checks.

pub mod domain;
pub mod graph;
pub mod group;
pub mod oracle;
pub mod syntax;
pub mod term;
pub mod unify;

pub use domain::{alpha_omega, approximates, inverse_image, DomainError, ShLinElement};
pub use graph::{Edge, EdgeId, GraphError, Multigraph, NodeId, ParallelSharingGraph, Violation};
pub use group::SharingGroup;
pub use oracle::{check_coincidence, check_optimality, check_soundness, random_concrete, witness_substitution, Report};
pub use syntax::ParseError;
pub use term::{
    equiv_mod_renaming, mgu_existential, rename_apart, unify, EquationSet, ExistentialSubstitution, Position,
    SubstError, Substitution, Term, UnifyError, Var,
};
pub use unify::{
    mgu_omega, mgu_omega_groups, mgu_omega_groups_in_order, mgu_p, mgu_p_graphs, mgu_p_groups, realizable, realize,
    Bound,
};
