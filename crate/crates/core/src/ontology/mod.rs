//! EL++ fragment: concept expressions, axioms, and the line-oriented document
//! format used for TBoxes, ABoxes and constraint files.

mod normalize;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use crate::entailment::Name;

pub use normalize::{normalize_tbox, Basic, NormalRule, NormalizedTBox};
pub use parser::parse_ontology;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ConceptExpr {
    Top,
    Bottom,
    Atomic(Name),
    /// Always at least two members, sorted and deduplicated; build through
    /// [`ConceptExpr::and`].
    Conjunction(Vec<ConceptExpr>),
    Existential(Name, Box<ConceptExpr>),
    Nominal(Name),
}

impl ConceptExpr {
    pub fn atomic(name: impl Into<Name>) -> Self {
        ConceptExpr::Atomic(name.into())
    }

    pub fn nominal(ind: impl Into<Name>) -> Self {
        ConceptExpr::Nominal(ind.into())
    }

    pub fn some(role: impl Into<Name>, filler: ConceptExpr) -> Self {
        ConceptExpr::Existential(role.into(), Box::new(filler))
    }

    /// Canonical conjunction: nested conjunctions are flattened, members sorted
    /// and deduplicated. A single surviving member is returned unwrapped.
    pub fn and(members: impl IntoIterator<Item = ConceptExpr>) -> Self {
        let mut flat = Vec::new();
        for m in members {
            match m {
                ConceptExpr::Conjunction(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        match flat.len() {
            0 => ConceptExpr::Top,
            1 => flat.pop().unwrap(),
            _ => ConceptExpr::Conjunction(flat),
        }
    }

    pub(crate) fn visit_names(&self, f: &mut impl FnMut(NameKind, &Name)) {
        match self {
            ConceptExpr::Top | ConceptExpr::Bottom => {}
            ConceptExpr::Atomic(a) => f(NameKind::Concept, a),
            ConceptExpr::Conjunction(ms) => ms.iter().for_each(|m| m.visit_names(f)),
            ConceptExpr::Existential(r, c) => {
                f(NameKind::Role, r);
                c.visit_names(f);
            }
            ConceptExpr::Nominal(a) => f(NameKind::Individual, a),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TBoxAxiom {
    Gci { lhs: ConceptExpr, rhs: ConceptExpr },
    RoleInclusion { sub: Name, sup: Name },
    RoleChain { first: Name, second: Name, sup: Name },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ABoxAxiom {
    ClassAssertion { concept: ConceptExpr, individual: Name },
    RoleAssertion { role: Name, subject: Name, object: Name },
    Equality(Name, Name),
    Inequality(Name, Name),
}

impl ABoxAxiom {
    pub fn class(concept: impl Into<Name>, individual: impl Into<Name>) -> Self {
        ABoxAxiom::ClassAssertion {
            concept: ConceptExpr::Atomic(concept.into()),
            individual: individual.into(),
        }
    }

    pub fn role(role: impl Into<Name>, subject: impl Into<Name>, object: impl Into<Name>) -> Self {
        ABoxAxiom::RoleAssertion {
            role: role.into(),
            subject: subject.into(),
            object: object.into(),
        }
    }

    pub fn individuals(&self) -> Vec<&Name> {
        match self {
            ABoxAxiom::ClassAssertion { concept, individual } => {
                let mut out = vec![individual];
                let mut nominals = Vec::new();
                collect_nominals(concept, &mut nominals);
                out.extend(nominals);
                out
            }
            ABoxAxiom::RoleAssertion { subject, object, .. } => vec![subject, object],
            ABoxAxiom::Equality(a, b) | ABoxAxiom::Inequality(a, b) => vec![a, b],
        }
    }
}

fn collect_nominals<'a>(c: &'a ConceptExpr, out: &mut Vec<&'a Name>) {
    match c {
        ConceptExpr::Nominal(a) => out.push(a),
        ConceptExpr::Conjunction(ms) => ms.iter().for_each(|m| collect_nominals(m, out)),
        ConceptExpr::Existential(_, f) => collect_nominals(f, out),
        _ => {}
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum NameKind {
    Concept,
    Role,
    Individual,
}

impl NameKind {
    pub(crate) fn label(self) -> &'static str {
        match self {
            NameKind::Concept => "a concept",
            NameKind::Role => "a role",
            NameKind::Individual => "an individual",
        }
    }
}

/// Three disjoint name sets.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Signature {
    pub concepts: BTreeSet<Name>,
    pub roles: BTreeSet<Name>,
    pub individuals: BTreeSet<Name>,
}

impl Signature {
    pub(crate) fn kind_of(&self, name: &str) -> Option<NameKind> {
        if self.concepts.contains(name) {
            Some(NameKind::Concept)
        } else if self.roles.contains(name) {
            Some(NameKind::Role)
        } else if self.individuals.contains(name) {
            Some(NameKind::Individual)
        } else {
            None
        }
    }

    /// Adds every name of `other`, failing on the first name held under a
    /// different kind.
    pub fn merge(&mut self, other: &Signature) -> crate::Result<()> {
        let parts = [
            (NameKind::Concept, &other.concepts),
            (NameKind::Role, &other.roles),
            (NameKind::Individual, &other.individuals),
        ];
        for (kind, names) in parts {
            for n in names {
                self.insert(kind, n).map_err(|held| crate::Error::SignatureConflict {
                    name: n.to_string(),
                    first: held.label(),
                    second: kind.label(),
                })?;
            }
        }
        Ok(())
    }

    /// Adds `name` under `kind`; on conflict returns the kind already held.
    pub(crate) fn insert(&mut self, kind: NameKind, name: &Name) -> Result<(), NameKind> {
        match self.kind_of(name) {
            Some(k) if k != kind => Err(k),
            Some(_) => Ok(()),
            None => {
                match kind {
                    NameKind::Concept => self.concepts.insert(name.clone()),
                    NameKind::Role => self.roles.insert(name.clone()),
                    NameKind::Individual => self.individuals.insert(name.clone()),
                };
                Ok(())
            }
        }
    }
}

#[derive(Clone, Default, Debug)]
pub struct Ontology {
    pub tbox: Vec<TBoxAxiom>,
    pub abox: Vec<ABoxAxiom>,
    pub signature: Signature,
}

impl Ontology {
    /// Set equality of both axiom lists, ignoring order and repetition.
    pub fn axiom_set_eq(&self, other: &Ontology) -> bool {
        let t1: BTreeSet<_> = self.tbox.iter().collect();
        let t2: BTreeSet<_> = other.tbox.iter().collect();
        let a1: BTreeSet<_> = self.abox.iter().collect();
        let a2: BTreeSet<_> = other.abox.iter().collect();
        t1 == t2 && a1 == a2
    }
}

impl fmt::Display for ConceptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConceptExpr::Top => f.write_str("Top"),
            ConceptExpr::Bottom => f.write_str("Bottom"),
            ConceptExpr::Atomic(a) => f.write_str(a),
            ConceptExpr::Conjunction(ms) => {
                f.write_str("And(")?;
                for (i, m) in ms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str(")")
            }
            ConceptExpr::Existential(r, c) => write!(f, "Some({r} {c})"),
            ConceptExpr::Nominal(a) => write!(f, "Nom({a})"),
        }
    }
}

impl fmt::Display for TBoxAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TBoxAxiom::Gci { lhs, rhs } => write!(f, "SubClassOf({lhs} {rhs})"),
            TBoxAxiom::RoleInclusion { sub, sup } => write!(f, "SubRole({sub} {sup})"),
            TBoxAxiom::RoleChain { first, second, sup } => {
                write!(f, "RoleChain({first} {second} {sup})")
            }
        }
    }
}

impl fmt::Display for ABoxAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ABoxAxiom::ClassAssertion { concept, individual } => write!(f, "ClassAssert({concept} {individual})"),
            ABoxAxiom::RoleAssertion { role, subject, object } => write!(f, "RoleAssert({role} {subject} {object})"),
            ABoxAxiom::Equality(a, b) => write!(f, "SameInd({a} {b})"),
            ABoxAxiom::Inequality(a, b) => write!(f, "DiffInd({a} {b})"),
        }
    }
}

impl fmt::Display for Ontology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ax in &self.tbox {
            writeln!(f, "{ax}")?;
        }
        for ax in &self.abox {
            writeln!(f, "{ax}")?;
        }
        Ok(())
    }
}

impl serde::Serialize for ABoxAxiom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
