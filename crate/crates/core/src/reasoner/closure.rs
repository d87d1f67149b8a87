use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::entailment::{Entailment, Name};
use crate::ontology::ABoxAxiom;

/// Counters from one fixpoint run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MaterializeStats {
    /// Semi-naive generations until no new fact appeared.
    pub rounds: usize,
    /// Upper bound on the number of distinct facts, hence on `rounds`.
    pub fact_bound: usize,
    pub witnesses: usize,
    pub facts: usize,
}

/// Named ABox entailments of one ontology, over canonical individuals.
///
/// Every member of a `SameInd` class is represented by its lexicographically
/// least name; atoms never mention the other members.
#[derive(Clone, Debug, Default)]
pub struct EntailmentClosure {
    pub(crate) atoms: BTreeSet<Entailment>,
    pub(crate) aliases: BTreeMap<Name, Name>,
    pub(crate) individuals: BTreeSet<Name>,
    pub(crate) inconsistent: bool,
    pub(crate) stats: MaterializeStats,
}

impl EntailmentClosure {
    pub fn atoms(&self) -> &BTreeSet<Entailment> {
        &self.atoms
    }

    pub fn into_atoms(self) -> BTreeSet<Entailment> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_inconsistent(&self) -> bool {
        self.inconsistent
    }

    pub fn stats(&self) -> MaterializeStats {
        self.stats
    }

    /// Canonical individuals mentioned by the ontology.
    pub fn individuals(&self) -> &BTreeSet<Name> {
        &self.individuals
    }

    /// Non-canonical individual names mapped to their representatives.
    pub fn aliases(&self) -> &BTreeMap<Name, Name> {
        &self.aliases
    }

    pub fn representative<'a>(&'a self, ind: &'a Name) -> &'a Name {
        self.aliases.get(ind).unwrap_or(ind)
    }

    pub fn same_individual(&self, a: &Name, b: &Name) -> bool {
        self.representative(a) == self.representative(b)
    }

    pub fn canonicalize(&self, g: &Entailment) -> Entailment {
        match g {
            Entailment::Class { concept, individual } => {
                Entailment::class(concept.clone(), self.representative(individual).clone())
            }
            Entailment::Role { role, subject, object } => Entailment::role(
                role.clone(),
                self.representative(subject).clone(),
                self.representative(object).clone(),
            ),
        }
    }

    /// Whether `g`, after canonicalizing its individuals, holds. `Top(x)`
    /// holds for every mentioned `x`.
    pub fn entails(&self, g: &Entailment) -> bool {
        if let Entailment::Class { concept, individual } = g {
            if &**concept == "Top" {
                return self.individuals.contains(self.representative(individual));
            }
        }
        self.atoms.contains(&self.canonicalize(g))
    }

    /// Sorted atom list, one per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for a in &self.atoms {
            let _ = writeln!(out, "{a}");
        }
        out
    }

    /// The closure as an ABox: every atom plus the equalities that fold
    /// aliases into representatives.
    pub fn to_abox(&self) -> Vec<ABoxAxiom> {
        let mut out: Vec<ABoxAxiom> = self
            .atoms
            .iter()
            .map(|a| match a {
                Entailment::Class { concept, individual } => ABoxAxiom::class(concept.clone(), individual.clone()),
                Entailment::Role { role, subject, object } => {
                    ABoxAxiom::role(role.clone(), subject.clone(), object.clone())
                }
            })
            .collect();
        out.extend(
            self.aliases
                .iter()
                .map(|(a, rep)| ABoxAxiom::Equality(a.clone(), rep.clone())),
        );
        out
    }
}

impl PartialEq for EntailmentClosure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.aliases == other.aliases && self.inconsistent == other.inconsistent
    }
}
