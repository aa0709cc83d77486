//! Formula AST, propositions, valuations, and boolean traces.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::TlError;

/// An atomic proposition: a normalized identifier plus the natural-language
/// phrase it came from.
///
/// The `id` is what formulas and trace files refer to; the `display` phrase is
/// what perception clients are queried with.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Proposition {
    id: String,
    display: String,
}

impl Proposition {
    /// Builds a proposition from a natural-language phrase by normalizing it.
    pub fn new(phrase: &str) -> Result<Self, TlError> {
        let display = phrase.trim().to_string();
        let id = normalize_id(phrase);
        if id.is_empty() {
            return Err(TlError::EmptyProposition {
                phrase: phrase.to_string(),
            });
        }
        Ok(Proposition { id, display })
    }

    /// Builds a proposition whose display phrase is the id itself.
    /// Used when loading trace files, which store bare identifiers.
    pub fn from_id(id: &str) -> Result<Self, TlError> {
        Self::new(id)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn display(&self) -> &str {
        &self.display
    }
}

/// Normalization rule: lowercase, every run of characters outside `[a-z0-9]`
/// collapses to a single underscore, leading/trailing underscores stripped.
fn normalize_id(phrase: &str) -> String {
    let mut out = String::with_capacity(phrase.len());
    for ch in phrase.to_lowercase().chars() {
        if ch.is_ascii_lowercase() || ch.is_ascii_digit() {
            out.push(ch);
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

/// Normalizes a natural-language phrase into a [`Proposition`].
pub fn normalize_proposition(phrase: &str) -> Result<Proposition, TlError> {
    Proposition::new(phrase)
}

/// An ordered set of propositions. The position of a proposition defines the
/// bit index used by [`Valuation`]s and by the automaton transition product.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropositionSet {
    items: Vec<Proposition>,
}

impl PropositionSet {
    pub fn new(items: Vec<Proposition>) -> Result<Self, TlError> {
        let mut set = PropositionSet::default();
        for item in items {
            set.push(item)?;
        }
        Ok(set)
    }

    pub fn empty() -> Self {
        PropositionSet::default()
    }

    /// Appends a proposition, rejecting duplicate ids.
    pub fn push(&mut self, prop: Proposition) -> Result<(), TlError> {
        if self.index_of(prop.id()).is_some() {
            return Err(TlError::DuplicateProposition {
                id: prop.id().to_string(),
            });
        }
        self.items.push(prop);
        Ok(())
    }

    /// Appends a proposition unless one with the same id is already present.
    pub fn push_dedup(&mut self, prop: Proposition) {
        if self.index_of(prop.id()).is_none() {
            self.items.push(prop);
        }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|p| p.id() == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index_of(id).is_some()
    }

    pub fn get(&self, index: usize) -> Option<&Proposition> {
        self.items.get(index)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Proposition> {
        self.items.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|p| p.id())
    }
}

/// A finite-trace temporal-logic formula.
///
/// Atoms carry proposition ids; the surrounding [`PropositionSet`] maps them
/// to valuation bit indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// G f: f holds at every remaining position.
    Always(Box<Formula>),
    /// F f: f holds at some remaining position.
    Eventually(Box<Formula>),
    /// X f (strong): there is a next position and f holds there.
    Next(Box<Formula>),
    /// f U g (strong): g eventually holds, and f holds at every position before.
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(id: impl Into<String>) -> Self {
        Formula::Atom(id.into())
    }

    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Self) -> Self {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn always(self) -> Self {
        Formula::Always(Box::new(self))
    }

    pub fn eventually(self) -> Self {
        Formula::Eventually(Box::new(self))
    }

    pub fn next(self) -> Self {
        Formula::Next(Box::new(self))
    }

    pub fn until(self, other: Self) -> Self {
        Formula::Until(Box::new(self), Box::new(other))
    }

    /// Collects atom ids in first-appearance (textual) order, deduplicated.
    pub fn collect_atoms(&self) -> PropositionSet {
        let mut set = PropositionSet::empty();
        self.visit_atoms(&mut set);
        set
    }

    fn visit_atoms(&self, set: &mut PropositionSet) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(id) => {
                // Atom ids are normalized by construction, so this cannot fail
                // for formulas produced by the parser; fall back to skipping
                // anything unrepresentable.
                if let Ok(prop) = Proposition::from_id(id) {
                    set.push_dedup(prop);
                }
            }
            Formula::Not(f) | Formula::Always(f) | Formula::Eventually(f) | Formula::Next(f) => {
                f.visit_atoms(set)
            }
            Formula::And(f, g)
            | Formula::Or(f, g)
            | Formula::Implies(f, g)
            | Formula::Until(f, g) => {
                f.visit_atoms(set);
                g.visit_atoms(set);
            }
        }
    }
}

/// Collects the atoms of a formula into a [`PropositionSet`].
pub fn collect_atoms(phi: &Formula) -> PropositionSet {
    phi.collect_atoms()
}

impl fmt::Display for Formula {
    /// Word-operator concrete syntax with full parenthesization of binary
    /// operators. `parse_formula` on this output reproduces the AST.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "TRUE"),
            Formula::False => write!(f, "FALSE"),
            Formula::Atom(id) => write!(f, "\"{id}\""),
            Formula::Not(inner) => write!(f, "NOT {inner}"),
            Formula::Always(inner) => write!(f, "ALWAYS {inner}"),
            Formula::Eventually(inner) => write!(f, "EVENTUALLY {inner}"),
            Formula::Next(inner) => write!(f, "NEXT {inner}"),
            Formula::And(a, b) => write!(f, "({a} AND {b})"),
            Formula::Or(a, b) => write!(f, "({a} OR {b})"),
            Formula::Implies(a, b) => write!(f, "({a} IMPLIES {b})"),
            Formula::Until(a, b) => write!(f, "({a} UNTIL {b})"),
        }
    }
}

/// A boolean assignment to all propositions at one trace position, indexed by
/// [`PropositionSet`] order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation {
    bits: Vec<bool>,
}

impl Valuation {
    pub fn new(bits: Vec<bool>) -> Self {
        Valuation { bits }
    }

    /// Decodes bit `i` of `mask` as the truth value of proposition `i`.
    pub fn from_mask(mask: u64, width: usize) -> Self {
        let bits = (0..width).map(|i| mask >> i & 1 == 1).collect();
        Valuation { bits }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, index: usize) -> Option<bool> {
        self.bits.get(index).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A finite sequence of valuations sharing one width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanTrace {
    steps: Vec<Valuation>,
}

impl BooleanTrace {
    pub fn new(steps: Vec<Valuation>) -> Result<Self, TlError> {
        let first = match steps.first() {
            Some(v) => v.width(),
            None => return Err(TlError::EmptyTrace),
        };
        if let Some(v) = steps.iter().find(|v| v.width() != first) {
            return Err(TlError::MixedWidths {
                first,
                other: v.width(),
            });
        }
        Ok(BooleanTrace { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn width(&self) -> usize {
        self.steps[0].width()
    }

    pub fn step(&self, pos: usize) -> Option<&Valuation> {
        self.steps.get(pos)
    }

    pub fn steps(&self) -> &[Valuation] {
        &self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_plain_sentence() {
        let p = normalize_proposition("The boat is sailing leisurely").unwrap();
        assert_eq!(p.id(), "the_boat_is_sailing_leisurely");
        assert_eq!(p.display(), "The boat is sailing leisurely");
    }

    #[test]
    fn normalize_is_identity_on_normalized_ids() {
        let p = normalize_proposition("snow_falls").unwrap();
        assert_eq!(p.id(), "snow_falls");
    }

    #[test]
    fn normalize_collapses_punctuation_and_trims() {
        let p = normalize_proposition("  Cyclist  turns! ").unwrap();
        assert_eq!(p.id(), "cyclist_turns");
        assert_eq!(p.display(), "Cyclist  turns!");
    }

    #[test]
    fn normalize_is_idempotent() {
        for phrase in ["A car, driving!", "snow_falls", "  A   B  ", "Frame 10"] {
            let once = normalize_proposition(phrase).unwrap();
            let twice = normalize_proposition(once.id()).unwrap();
            assert_eq!(once.id(), twice.id());
        }
    }

    #[test]
    fn normalize_rejects_empty() {
        assert!(matches!(
            normalize_proposition("  !!! "),
            Err(TlError::EmptyProposition { .. })
        ));
    }

    #[test]
    fn proposition_set_rejects_duplicates() {
        let a = Proposition::from_id("a").unwrap();
        let a2 = Proposition::new("A!").unwrap();
        let err = PropositionSet::new(vec![a, a2]).unwrap_err();
        assert!(matches!(err, TlError::DuplicateProposition { id } if id == "a"));
    }

    #[test]
    fn collect_atoms_dedups_in_first_appearance_order() {
        let phi = Formula::atom("a").and(Formula::atom("a").not());
        let atoms = phi.collect_atoms();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms.get(0).unwrap().id(), "a");

        let atoms = Formula::True.collect_atoms();
        assert!(atoms.is_empty());
    }

    #[test]
    fn trace_requires_uniform_width() {
        let err = BooleanTrace::new(vec![
            Valuation::new(vec![true]),
            Valuation::new(vec![true, false]),
        ])
        .unwrap_err();
        assert!(matches!(err, TlError::MixedWidths { first: 1, other: 2 }));
        assert!(matches!(
            BooleanTrace::new(vec![]),
            Err(TlError::EmptyTrace)
        ));
    }
}
