//! Ground atoms over named individuals.
//!
//! An [`Entailment`] is the unit every later stage works with: closures are
//! sets of entailments, vocabularies are sorted lists of them, and evidence is
//! a set of them. The total order is the lexicographic order of the rendered
//! form (`C(a)` / `r(a,b)`), which is what every sorted artifact uses.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::Error;

/// Interned-by-sharing symbol name.
pub type Name = Arc<str>;

/// Prefix reserved for concept names introduced by normalization.
pub const FRESH_PREFIX: &str = "_N";

pub fn is_fresh(name: &str) -> bool {
    name.starts_with(FRESH_PREFIX)
}

pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'/' | b':' | b'-'))
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Entailment {
    Class { concept: Name, individual: Name },
    Role { role: Name, subject: Name, object: Name },
}

impl Entailment {
    pub fn class(concept: impl Into<Name>, individual: impl Into<Name>) -> Self {
        Entailment::Class {
            concept: concept.into(),
            individual: individual.into(),
        }
    }

    pub fn role(role: impl Into<Name>, subject: impl Into<Name>, object: impl Into<Name>) -> Self {
        Entailment::Role {
            role: role.into(),
            subject: subject.into(),
            object: object.into(),
        }
    }

    /// Concept or role name.
    pub fn predicate(&self) -> &Name {
        match self {
            Entailment::Class { concept, .. } => concept,
            Entailment::Role { role, .. } => role,
        }
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Name> {
        let (a, b) = match self {
            Entailment::Class { individual, .. } => (individual, None),
            Entailment::Role { subject, object, .. } => (subject, Some(object)),
        };
        std::iter::once(a).chain(b)
    }

    pub fn is_class(&self) -> bool {
        matches!(self, Entailment::Class { .. })
    }

    fn key(&self) -> (&str, &str, Option<&str>) {
        match self {
            Entailment::Class { concept, individual } => (concept, individual, None),
            Entailment::Role { role, subject, object } => (role, subject, Some(object)),
        }
    }
}

// Names never contain '(' ',' or ')', and all name characters sort after them,
// so comparing the (predicate, first, second) tuple agrees with comparing the
// rendered strings.
impl Ord for Entailment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Entailment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Entailment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entailment::Class { concept, individual } => write!(f, "{concept}({individual})"),
            Entailment::Role { role, subject, object } => write!(f, "{role}({subject},{object})"),
        }
    }
}

impl FromStr for Entailment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| Error::malformed("entailment", s.to_string(), msg.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| bad("expected `(`"))?;
        let inner = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| bad("expected trailing `)`"))?;
        let pred = &s[..open];
        if !is_valid_name(pred) {
            return Err(bad("invalid predicate name"));
        }
        let args: Vec<&str> = inner.split(',').map(str::trim).collect();
        if args.iter().any(|a| !is_valid_name(a)) {
            return Err(bad("invalid individual name"));
        }
        match args.as_slice() {
            [a] => Ok(Entailment::class(pred, *a)),
            [a, b] => Ok(Entailment::role(pred, *a, *b)),
            _ => Err(bad("expected one or two arguments")),
        }
    }
}

impl serde::Serialize for Entailment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
