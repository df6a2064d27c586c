//! First-order terms, positions, idempotent substitutions, syntactic
//! unification and existential (renaming-quotiented) substitutions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Prefix of the reserved namespace used for generated variables.
pub const FRESH_PREFIX: &str = "_f";

/// A logic variable, identified by its name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Var(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// True for names of the form `_f<digits>`, which only the library generates.
    pub fn is_reserved(&self) -> bool {
        is_reserved_name(&self.0)
    }
}

pub fn is_reserved_name(name: &str) -> bool {
    name.strip_prefix(FRESH_PREFIX)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A function symbol. Symbols with the same name but different arity are distinct.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermSymbol {
    pub name: Arc<str>,
    pub arity: usize,
}

/// A finite first-order term.
///
/// The arity of an application is the length of its argument list, so the
/// `(name, arity)` identity of a symbol is carried by construction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    App(Arc<str>, Vec<Term>),
}

impl Term {
    pub fn var(name: impl AsRef<str>) -> Self {
        Term::Var(Var::new(name))
    }

    pub fn app(name: impl AsRef<str>, args: Vec<Term>) -> Self {
        Term::App(Arc::from(name.as_ref()), args)
    }

    pub fn constant(name: impl AsRef<str>) -> Self {
        Term::app(name, Vec::new())
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::App(..) => None,
        }
    }

    pub fn symbol(&self) -> Option<TermSymbol> {
        match self {
            Term::Var(_) => None,
            Term::App(name, args) => Some(TermSymbol {
                name: name.clone(),
                arity: args.len(),
            }),
        }
    }

    /// Number of occurrences of `v` in the term.
    pub fn occ(&self, v: &Var) -> usize {
        match self {
            Term::Var(w) => usize::from(w == v),
            Term::App(_, args) => args.iter().map(|a| a.occ(v)).sum(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variables in left-to-right (pre-order) occurrence order, with repetitions.
    pub fn var_occurrences(&self) -> Vec<&Var> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a Term, out: &mut Vec<&'a Var>) {
            match t {
                Term::Var(v) => out.push(v),
                Term::App(_, args) => args.iter().for_each(|a| go(a, out)),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    /// The subterm at `pos`, or `None` when the position is not valid for this term.
    pub fn subterm_at(&self, pos: &Position) -> Option<&Term> {
        let mut cur = self;
        for &i in pos.indices() {
            match cur {
                Term::App(_, args) if i >= 1 && i <= args.len() => cur = &args[i - 1],
                _ => return None,
            }
        }
        Some(cur)
    }

    /// Positions of all variable occurrences, in lexicographic order.
    pub fn var_positions(&self) -> Vec<(Position, &Var)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        fn go<'a>(t: &'a Term, path: &mut Vec<usize>, out: &mut Vec<(Position, &'a Var)>) {
            match t {
                Term::Var(v) => out.push((Position(path.clone()), v)),
                Term::App(_, args) => {
                    for (i, a) in args.iter().enumerate() {
                        path.push(i + 1);
                        go(a, path, out);
                        path.pop();
                    }
                }
            }
        }
        go(self, &mut path, &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// Replaces variables through `f`, leaving the skeleton intact.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::App(name, args) => Term::App(name.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A sequence of 1-based argument indices. The empty position denotes the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn new(indices: Vec<usize>) -> Self {
        Position(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn child(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("variable {0} is bound twice")]
    DuplicateBinding(Var),
    #[error("domains overlap at {0}")]
    DomainOverlap(Var),
    #[error("substitution {0} is not idempotent")]
    NotIdempotent(Substitution),
}

/// A finite map from variables to terms with `θ(x) ≠ x` for every bound `x`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    /// The empty substitution ε.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a substitution, dropping trivial `x/x` bindings.
    pub fn from_bindings<I>(bindings: I) -> Result<Self, SubstError>
    where
        I: IntoIterator<Item = (Var, Term)>,
    {
        let mut map = BTreeMap::new();
        for (v, t) in bindings {
            if map.contains_key(&v) {
                return Err(SubstError::DuplicateBinding(v));
            }
            map.insert(v, t);
        }
        map.retain(|v, t| t.as_var() != Some(v));
        Ok(Substitution { bindings: map })
    }

    /// Like [`Substitution::from_bindings`] for callers that know the domain is duplicate-free.
    pub(crate) fn from_map(mut map: BTreeMap<Var, Term>) -> Self {
        map.retain(|v, t| t.as_var() != Some(v));
        Substitution { bindings: map }
    }

    pub fn singleton(v: Var, t: Term) -> Self {
        Self::from_map(BTreeMap::from([(v, t)]))
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.bindings.get(v)
    }

    /// `θ(v)`, which is `v` itself outside the domain.
    pub fn image(&self, v: &Var) -> Term {
        self.bindings.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone()))
    }

    /// Bindings in increasing order of the domain variable.
    pub fn bindings(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn dom(&self) -> BTreeSet<Var> {
        self.bindings.keys().cloned().collect()
    }

    pub fn rng(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for t in self.bindings.values() {
            t.collect_vars(&mut out);
        }
        out
    }

    /// `dom(θ) ∪ rng(θ)`.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.dom();
        for t in self.bindings.values() {
            t.collect_vars(&mut out);
        }
        out
    }

    /// Occurrences of `v` across all right-hand sides.
    pub fn occ(&self, v: &Var) -> usize {
        self.bindings.values().map(|t| t.occ(v)).sum()
    }

    /// Simultaneous replacement of every variable by its image.
    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| self.image(v))
    }

    /// `(self ∘ other)(x) = other(self(x))`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut map: BTreeMap<Var, Term> = self.bindings.iter().map(|(v, t)| (v.clone(), other.apply(t))).collect();
        for (v, t) in &other.bindings {
            map.entry(v.clone()).or_insert_with(|| t.clone());
        }
        Self::from_map(map)
    }

    /// Restriction of the map to the variables in `vars`.
    pub fn project(&self, vars: &BTreeSet<Var>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }

    /// Union of two substitutions with disjoint domains.
    pub fn union_disjoint(&self, other: &Substitution) -> Result<Substitution, SubstError> {
        let mut map = self.bindings.clone();
        for (v, t) in &other.bindings {
            if map.insert(v.clone(), t.clone()).is_some() {
                return Err(SubstError::DomainOverlap(v.clone()));
            }
        }
        Ok(Substitution { bindings: map })
    }

    pub fn is_idempotent(&self) -> bool {
        self.bindings
            .values()
            .all(|t| t.var_occurrences().iter().all(|v| !self.bindings.contains_key(*v)))
    }

    /// `Eq(θ)`: one equation `x = θ(x)` per domain variable.
    pub fn equations(&self) -> EquationSet {
        self.bindings
            .iter()
            .map(|(v, t)| (Term::Var(v.clone()), t.clone()))
            .collect()
    }

    pub(crate) fn require_idempotent(&self) -> Result<(), SubstError> {
        if self.is_idempotent() {
            Ok(())
        } else {
            Err(SubstError::NotIdempotent(self.clone()))
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}/{t}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An unordered set of equations. `s = t` and `t = s` are the same equation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquationSet(BTreeSet<(Term, Term)>);

impl EquationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lhs: Term, rhs: Term) {
        if lhs <= rhs {
            self.0.insert((lhs, rhs));
        } else {
            self.0.insert((rhs, lhs));
        }
    }

    pub fn union(mut self, other: EquationSet) -> EquationSet {
        self.0.extend(other.0);
        self
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &(Term, Term)> {
        self.0.iter()
    }
}

impl FromIterator<(Term, Term)> for EquationSet {
    fn from_iter<I: IntoIterator<Item = (Term, Term)>>(iter: I) -> Self {
        let mut out = EquationSet::new();
        for (l, r) in iter {
            out.insert(l, r);
        }
        out
    }
}

impl fmt::Display for EquationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, r)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{l} = {r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("symbol clash between {0} and {1}")]
    Clash(Term, Term),
    #[error("occurs check: {0} occurs in {1}")]
    Occurs(Var, Term),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

/// Syntactic unification with occurs check.
///
/// Equations are processed in their canonical sorted order and the solved
/// form is kept fully applied, so the result is idempotent.
pub fn unify(equations: &EquationSet) -> Result<Substitution, UnifyError> {
    let mut solved: BTreeMap<Var, Term> = BTreeMap::new();
    let mut pending: Vec<(Term, Term)> = equations.iter().rev().cloned().collect();

    while let Some((lhs, rhs)) = pending.pop() {
        let lhs = apply_map(&solved, &lhs);
        let rhs = apply_map(&solved, &rhs);
        if lhs == rhs {
            continue;
        }
        match (lhs, rhs) {
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.contains_var(&x) {
                    return Err(UnifyError::Occurs(x, t));
                }
                let single = BTreeMap::from([(x.clone(), t.clone())]);
                for bound in solved.values_mut() {
                    if bound.contains_var(&x) {
                        *bound = apply_map(&single, bound);
                    }
                }
                solved.insert(x, t);
            }
            (Term::App(f, fargs), Term::App(g, gargs)) => {
                if f != g || fargs.len() != gargs.len() {
                    return Err(UnifyError::Clash(Term::App(f, fargs), Term::App(g, gargs)));
                }
                pending.extend(fargs.into_iter().zip(gargs).rev());
            }
        }
    }
    Ok(Substitution::from_map(solved))
}

fn apply_map(map: &BTreeMap<Var, Term>, t: &Term) -> Term {
    t.map_vars(&mut |v| map.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
}

/// Decides `θ1 ~_U θ2`: some renaming ρ has `θ1(v) = ρ(θ2(v))` for every `v ∈ U`.
///
/// The renaming is built by matching `θ2(v)` against `θ1(v)` for all `v` at
/// once; any injective partial map on variables extends to a bijection.
pub fn equiv_mod_renaming(theta1: &Substitution, theta2: &Substitution, universe: &BTreeSet<Var>) -> bool {
    let mut forward: BTreeMap<Var, Var> = BTreeMap::new();
    let mut backward: BTreeMap<Var, Var> = BTreeMap::new();

    fn matches(
        target: &Term,
        pattern: &Term,
        forward: &mut BTreeMap<Var, Var>,
        backward: &mut BTreeMap<Var, Var>,
    ) -> bool {
        match (target, pattern) {
            (Term::Var(a), Term::Var(b)) => {
                match (forward.get(b), backward.get(a)) {
                    (Some(x), _) if x != a => return false,
                    (_, Some(y)) if y != b => return false,
                    _ => {}
                }
                forward.insert(b.clone(), a.clone());
                backward.insert(a.clone(), b.clone());
                true
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(x, y)| matches(x, y, forward, backward))
            }
            _ => false,
        }
    }

    universe
        .iter()
        .all(|v| matches(&theta1.image(v), &theta2.image(v), &mut forward, &mut backward))
}

/// Deterministic supply of variables from the reserved namespace.
#[derive(Debug, Clone)]
pub struct FreshVars {
    avoid: BTreeSet<Var>,
    next: usize,
}

impl FreshVars {
    pub fn avoiding(avoid: BTreeSet<Var>) -> Self {
        FreshVars { avoid, next: 0 }
    }

    pub fn next_var(&mut self) -> Var {
        loop {
            let v = Var::new(format!("{FRESH_PREFIX}{}", self.next));
            self.next += 1;
            if !self.avoid.contains(&v) {
                self.avoid.insert(v.clone());
                return v;
            }
        }
    }
}

/// Returns `δ'` with `δ' ~_U δ` whose variables outside `U` avoid `avoid`.
///
/// Only the bindings of `U` are kept; range variables outside `U` that lie in
/// `avoid` are replaced by fresh ones.
pub fn rename_apart(delta: &Substitution, universe: &BTreeSet<Var>, avoid: &BTreeSet<Var>) -> Substitution {
    let mut used = delta.vars();
    used.extend(universe.iter().cloned());
    used.extend(avoid.iter().cloned());
    let mut fresh = FreshVars::avoiding(used);
    let mut renaming: BTreeMap<Var, Var> = BTreeMap::new();

    let mut map = BTreeMap::new();
    for v in universe {
        let Some(t) = delta.get(v) else { continue };
        let renamed = t.map_vars(&mut |w| {
            if universe.contains(w) || !avoid.contains(w) {
                Term::Var(w.clone())
            } else {
                Term::Var(renaming.entry(w.clone()).or_insert_with(|| fresh.next_var()).clone())
            }
        });
        map.insert(v.clone(), renamed);
    }
    Substitution::from_map(map)
}

/// The class `[θ]_U` of an idempotent substitution modulo renaming outside `U`.
#[derive(Clone)]
pub struct ExistentialSubstitution {
    representative: Substitution,
    universe: BTreeSet<Var>,
}

impl ExistentialSubstitution {
    pub fn new(representative: Substitution, universe: BTreeSet<Var>) -> Result<Self, SubstError> {
        representative.require_idempotent()?;
        Ok(ExistentialSubstitution {
            representative,
            universe,
        })
    }

    pub fn representative(&self) -> &Substitution {
        &self.representative
    }

    pub fn universe(&self) -> &BTreeSet<Var> {
        &self.universe
    }

    /// Representative with every variable relabeled in first-occurrence order
    /// over the sorted universe; equal classes share the same canonical form.
    pub fn canonical(&self) -> Substitution {
        let mut names: BTreeMap<Var, Var> = BTreeMap::new();
        let mut counter = 0usize;
        let mut map = BTreeMap::new();
        for v in &self.universe {
            let t = self.representative.image(v).map_vars(&mut |w| {
                let n = names.entry(w.clone()).or_insert_with(|| {
                    let name = Var::new(format!("{FRESH_PREFIX}{counter}"));
                    counter += 1;
                    name
                });
                Term::Var(n.clone())
            });
            map.insert(v.clone(), t);
        }
        Substitution::from_map(map)
    }
}

impl PartialEq for ExistentialSubstitution {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe
            && equiv_mod_renaming(&self.representative, &other.representative, &self.universe)
    }
}

impl Eq for ExistentialSubstitution {}

impl fmt::Display for ExistentialSubstitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.canonical(), VarSetDisplay(&self.universe))
    }
}

impl fmt::Debug for ExistentialSubstitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]_{}", self.representative, VarSetDisplay(&self.universe))
    }
}

/// Formats a variable set as `{a,b,c}`.
pub struct VarSetDisplay<'a>(pub &'a BTreeSet<Var>);

impl fmt::Display for VarSetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

/// `mgu([δ]_U, θ)`: rename the representative apart from θ, unify, and
/// quotient over `U ∪ vars(θ)`.
pub fn mgu_existential(
    delta: &ExistentialSubstitution,
    theta: &Substitution,
) -> Result<ExistentialSubstitution, UnifyError> {
    theta.require_idempotent()?;
    let theta_vars = theta.vars();
    let renamed = rename_apart(&delta.representative, &delta.universe, &theta_vars);
    let eta = unify(&renamed.equations().union(theta.equations()))?;
    let mut universe = delta.universe.clone();
    universe.extend(theta_vars);
    Ok(ExistentialSubstitution {
        representative: eta,
        universe,
    })
}
