//! ω-sharing groups: finite-support multisets of variables.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Add;

use crate::term::{Term, Var};

/// A multiset of variables. Absent variables have multiplicity zero; stored
/// multiplicities are always positive, so equality is map equality.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SharingGroup {
    counts: BTreeMap<Var, u32>,
}

impl SharingGroup {
    /// The empty multiset.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(v: Var) -> Self {
        SharingGroup {
            counts: BTreeMap::from([(v, 1)]),
        }
    }

    /// Builds a group from `(variable, multiplicity)` pairs. Repeated
    /// variables add up and zero multiplicities vanish.
    pub fn from_counts<I: IntoIterator<Item = (Var, u32)>>(counts: I) -> Self {
        let mut map = BTreeMap::new();
        for (v, k) in counts {
            if k > 0 {
                *map.entry(v).or_insert(0) += k;
            }
        }
        SharingGroup { counts: map }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `A(v)`.
    pub fn get(&self, v: &Var) -> u32 {
        self.counts.get(v).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, u32)> {
        self.counts.iter().map(|(v, &k)| (v, k))
    }

    /// Multiset sum `A ⊎ B`.
    pub fn msum(&self, other: &SharingGroup) -> SharingGroup {
        let mut counts = self.counts.clone();
        for (v, &k) in &other.counts {
            *counts.entry(v.clone()).or_insert(0) += k;
        }
        SharingGroup { counts }
    }

    /// `A|_X`, with `X` allowed to exceed the support.
    pub fn restrict(&self, vars: &BTreeSet<Var>) -> SharingGroup {
        SharingGroup {
            counts: self
                .counts
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, &k)| (v.clone(), k))
                .collect(),
        }
    }

    pub fn support(&self) -> BTreeSet<Var> {
        self.counts.keys().cloned().collect()
    }

    /// Total number of elements, `Σ_v A(v)`.
    pub fn cardinality(&self) -> u64 {
        self.counts.values().map(|&k| u64::from(k)).sum()
    }

    /// Multiplicity of the group in a term: `Σ_v B(v)·occ(v,t)`.
    pub fn chi(&self, t: &Term) -> u64 {
        t.var_occurrences().into_iter().map(|v| u64::from(self.get(v))).sum()
    }

    /// Ordering used for printed output: cardinality first, then text.
    pub fn display_cmp(&self, other: &SharingGroup) -> Ordering {
        self.cardinality()
            .cmp(&other.cardinality())
            .then_with(|| self.to_string().cmp(&other.to_string()))
    }
}

impl Add for &SharingGroup {
    type Output = SharingGroup;

    fn add(self, rhs: &SharingGroup) -> SharingGroup {
        self.msum(rhs)
    }
}

impl FromIterator<Var> for SharingGroup {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> Self {
        SharingGroup::from_counts(iter.into_iter().map(|v| (v, 1)))
    }
}

/// Polynomial notation: `u^2 z`, or `0` for the empty group.
impl fmt::Display for SharingGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.counts.is_empty() {
            return f.write_str("0");
        }
        for (i, (v, k)) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if *k == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{k}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SharingGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Groups sorted by [`SharingGroup::display_cmp`].
pub fn sorted_for_display<'a, I: IntoIterator<Item = &'a SharingGroup>>(groups: I) -> Vec<&'a SharingGroup> {
    let mut out: Vec<_> = groups.into_iter().collect();
    out.sort_by(|a, b| a.display_cmp(b));
    out
}
