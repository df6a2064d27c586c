//! The abstract domain of ω-sharing groups over a set of interest.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::group::{sorted_for_display, SharingGroup};
use crate::term::{ExistentialSubstitution, FreshVars, Substitution, Var, VarSetDisplay};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("group {group} mentions variables outside the universe {universe}")]
    OutsideUniverse { group: SharingGroup, universe: String },
}

/// An element `[S]_U`: a set of ω-sharing groups over the universe `U`.
///
/// Whenever `S` is non-empty it contains the empty group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShLinElement {
    universe: BTreeSet<Var>,
    groups: BTreeSet<SharingGroup>,
}

impl ShLinElement {
    /// Builds `[S]_U`, adding the empty group when `S` is non-empty.
    pub fn new<I>(universe: BTreeSet<Var>, groups: I) -> Result<Self, DomainError>
    where
        I: IntoIterator<Item = SharingGroup>,
    {
        let mut set = BTreeSet::new();
        for group in groups {
            if !group.support().is_subset(&universe) {
                return Err(DomainError::OutsideUniverse {
                    group,
                    universe: VarSetDisplay(&universe).to_string(),
                });
            }
            set.insert(group);
        }
        if !set.is_empty() {
            set.insert(SharingGroup::empty());
        }
        Ok(ShLinElement { universe, groups: set })
    }

    /// The element with no groups at all, approximating nothing.
    pub fn bottom(universe: BTreeSet<Var>) -> Self {
        ShLinElement {
            universe,
            groups: BTreeSet::new(),
        }
    }

    pub fn universe(&self) -> &BTreeSet<Var> {
        &self.universe
    }

    pub fn groups(&self) -> &BTreeSet<SharingGroup> {
        &self.groups
    }

    pub fn contains(&self, group: &SharingGroup) -> bool {
        self.groups.contains(group)
    }

    pub fn is_bottom(&self) -> bool {
        self.groups.is_empty()
    }

    /// `[S1]_U1 ≤ [S2]_U2` iff `U1 = U2` and `S1 ⊆ S2`.
    pub fn leq(&self, other: &ShLinElement) -> bool {
        self.universe == other.universe && self.groups.is_subset(&other.groups)
    }

    /// Adds `vars` to the universe, with a singleton group for each new variable.
    pub fn extend_universe(&self, vars: &BTreeSet<Var>) -> ShLinElement {
        let mut universe = self.universe.clone();
        let mut groups = self.groups.clone();
        for v in vars {
            if universe.insert(v.clone()) {
                groups.insert(SharingGroup::singleton(v.clone()));
            }
        }
        if !groups.is_empty() {
            groups.insert(SharingGroup::empty());
        }
        ShLinElement { universe, groups }
    }

    /// Keeps only groups of cardinality at most `max`.
    pub fn truncate(&self, max: u64) -> ShLinElement {
        ShLinElement {
            universe: self.universe.clone(),
            groups: self.groups.iter().filter(|g| g.cardinality() <= max).cloned().collect(),
        }
    }

    /// Non-empty groups in display order.
    pub fn display_groups(&self) -> Vec<&SharingGroup> {
        sorted_for_display(self.groups.iter().filter(|g| !g.is_empty()))
    }
}

/// `[B1, ..., Bn] @ {U}` with the empty group left implicit; the element
/// without any group prints as `bottom @ {U}`.
impl fmt::Display for ShLinElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.groups.is_empty() {
            return write!(f, "bottom @ {}", VarSetDisplay(&self.universe));
        }
        f.write_str("[")?;
        for (i, g) in self.display_groups().into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, "] @ {}", VarSetDisplay(&self.universe))
    }
}

/// `θ⁻¹(v)`: maps each `w` to `occ(v, θ(w))`.
pub fn inverse_image(theta: &Substitution, v: &Var) -> SharingGroup {
    let mut counts: Vec<(Var, u32)> = theta.bindings().map(|(w, t)| (w.clone(), t.occ(v) as u32)).collect();
    if theta.get(v).is_none() {
        counts.push((v.clone(), 1));
    }
    SharingGroup::from_counts(counts)
}

/// The variables over which `∀v ∈ 𝒱` needs to range: every other variable
/// produces either the empty group or a duplicate.
fn relevant_vars(theta: &Substitution, universe: &BTreeSet<Var>) -> BTreeSet<Var> {
    let mut vars = theta.vars();
    vars.extend(universe.iter().cloned());
    let fresh = FreshVars::avoiding(vars.clone()).next_var();
    vars.insert(fresh);
    vars
}

/// The best correct abstraction `α_ω([θ]_U)`.
pub fn alpha_omega(d: &ExistentialSubstitution) -> ShLinElement {
    let theta = d.representative();
    let universe = d.universe();
    let groups: BTreeSet<SharingGroup> = relevant_vars(theta, universe)
        .iter()
        .map(|v| inverse_image(theta, v).restrict(universe))
        .collect();
    ShLinElement {
        universe: universe.clone(),
        groups,
    }
}

/// `[S]_U ⊳ [θ]_W`: the universes coincide and every restricted inverse image lies in `S`.
pub fn approximates(a: &ShLinElement, d: &ExistentialSubstitution) -> bool {
    if a.universe() != d.universe() {
        return false;
    }
    let theta = d.representative();
    relevant_vars(theta, d.universe())
        .iter()
        .all(|v| a.contains(&inverse_image(theta, v).restrict(d.universe())))
}
