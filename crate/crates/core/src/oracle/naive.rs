//! Apply-every-axiom-until-nothing-changes evaluation of an unnormalized
//! ontology. Slow and obviously correct relative to its own rules; shares no
//! code with the completion engine.

use std::collections::{BTreeMap, BTreeSet};

use crate::entailment::{is_fresh, Entailment, Name};
use crate::ontology::{ABoxAxiom, ConceptExpr, TBoxAxiom};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveClosure {
    pub atoms: BTreeSet<Entailment>,
    pub aliases: BTreeMap<Name, Name>,
    pub inconsistent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Named(Name),
    Witness(ConceptExpr),
}

struct World {
    keys: Vec<Key>,
    parent: Vec<usize>,
    types: Vec<BTreeSet<Name>>,
    bottom: Vec<bool>,
    edges: BTreeSet<(Name, usize, usize)>,
    named: BTreeMap<Name, usize>,
    witness: BTreeMap<ConceptExpr, usize>,
    changed: bool,
}

impl World {
    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn node(&mut self, key: Key) -> usize {
        self.keys.push(key);
        self.parent.push(self.parent.len());
        self.types.push(BTreeSet::new());
        self.bottom.push(false);
        self.changed = true;
        self.parent.len() - 1
    }

    fn merge(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        let a_wins = match (&self.keys[a], &self.keys[b]) {
            (Key::Named(x), Key::Named(y)) => x < y,
            (Key::Named(_), Key::Witness(_)) => true,
            (Key::Witness(_), Key::Named(_)) => false,
            (Key::Witness(x), Key::Witness(y)) => x < y,
        };
        let (root, loser) = if a_wins { (a, b) } else { (b, a) };
        self.parent[loser] = root;
        let moved = std::mem::take(&mut self.types[loser]);
        self.types[root].extend(moved);
        self.bottom[root] |= self.bottom[loser];
        let edges = std::mem::take(&mut self.edges);
        self.edges = edges
            .into_iter()
            .map(|(r, x, y)| (r, self.find(x), self.find(y)))
            .collect();
        self.changed = true;
    }

    fn holds(&self, c: &ConceptExpr, x: usize) -> bool {
        match c {
            ConceptExpr::Top => true,
            ConceptExpr::Bottom => self.bottom[x],
            ConceptExpr::Atomic(a) => self.types[x].contains(a),
            ConceptExpr::Conjunction(ms) => ms.iter().all(|m| self.holds(m, x)),
            ConceptExpr::Existential(r, f) => self
                .edges
                .iter()
                .any(|(s, a, b)| s == r && *a == x && self.holds(f, *b)),
            ConceptExpr::Nominal(a) => self.find(self.named[a]) == x,
        }
    }

    fn add_edge(&mut self, r: &Name, x: usize, y: usize) {
        let t = (r.clone(), self.find(x), self.find(y));
        if self.edges.insert(t) {
            self.changed = true;
        }
    }

    fn assert(&mut self, c: &ConceptExpr, x: usize) {
        let x = self.find(x);
        match c {
            ConceptExpr::Top => {}
            ConceptExpr::Bottom => {
                if !self.bottom[x] {
                    self.bottom[x] = true;
                    self.changed = true;
                }
            }
            ConceptExpr::Atomic(a) => {
                if self.types[x].insert(a.clone()) {
                    self.changed = true;
                }
            }
            ConceptExpr::Conjunction(ms) => {
                for m in ms {
                    let x = self.find(x);
                    self.assert(m, x);
                }
            }
            ConceptExpr::Existential(r, f) => {
                let y = match &**f {
                    ConceptExpr::Nominal(b) => self.named[b],
                    other => match self.witness.get(other) {
                        Some(&w) => w,
                        None => {
                            let w = self.node(Key::Witness(other.clone()));
                            self.witness.insert(other.clone(), w);
                            self.assert(other, w);
                            w
                        }
                    },
                };
                self.add_edge(r, x, y);
            }
            ConceptExpr::Nominal(b) => {
                let y = self.named[b];
                self.merge(x, y);
            }
        }
    }

    fn roots(&self) -> Vec<usize> {
        (0..self.parent.len()).filter(|&x| self.parent[x] == x).collect()
    }
}

fn nominals(c: &ConceptExpr, out: &mut Vec<Name>) {
    match c {
        ConceptExpr::Nominal(a) => out.push(a.clone()),
        ConceptExpr::Conjunction(ms) => ms.iter().for_each(|m| nominals(m, out)),
        ConceptExpr::Existential(_, f) => nominals(f, out),
        _ => {}
    }
}

pub fn naive_materialize(tbox: &[TBoxAxiom], abox: &[ABoxAxiom]) -> NaiveClosure {
    let mut inds = Vec::new();
    for ax in tbox {
        if let TBoxAxiom::Gci { lhs, rhs } = ax {
            nominals(lhs, &mut inds);
            nominals(rhs, &mut inds);
        }
    }
    for ax in abox {
        inds.extend(ax.individuals().into_iter().cloned());
    }
    inds.sort();
    inds.dedup();

    let mut w = World {
        keys: Vec::new(),
        parent: Vec::new(),
        types: Vec::new(),
        bottom: Vec::new(),
        edges: BTreeSet::new(),
        named: BTreeMap::new(),
        witness: BTreeMap::new(),
        changed: false,
    };
    for a in &inds {
        let id = w.node(Key::Named(a.clone()));
        w.named.insert(a.clone(), id);
    }
    let mut different = Vec::new();
    for ax in abox {
        match ax {
            ABoxAxiom::ClassAssertion { concept, individual } => {
                let x = w.named[individual];
                w.assert(concept, x);
            }
            ABoxAxiom::RoleAssertion { role, subject, object } => {
                let (x, y) = (w.named[subject], w.named[object]);
                w.add_edge(role, x, y);
            }
            ABoxAxiom::Equality(a, b) => {
                let (x, y) = (w.named[a], w.named[b]);
                w.merge(x, y);
            }
            ABoxAxiom::Inequality(a, b) => different.push((a.clone(), b.clone())),
        }
    }

    w.changed = true;
    while w.changed {
        w.changed = false;
        for ax in tbox {
            match ax {
                TBoxAxiom::Gci { lhs, rhs } => {
                    for x in w.roots() {
                        if w.parent[x] == x && w.holds(lhs, x) {
                            w.assert(rhs, x);
                        }
                    }
                }
                TBoxAxiom::RoleInclusion { sub, sup } => {
                    let hits: Vec<_> = w
                        .edges
                        .iter()
                        .filter(|(r, _, _)| r == sub)
                        .map(|&(_, x, y)| (x, y))
                        .collect();
                    for (x, y) in hits {
                        w.add_edge(sup, x, y);
                    }
                }
                TBoxAxiom::RoleChain { first, second, sup } => {
                    let mut hits = Vec::new();
                    for (r1, x, y) in &w.edges {
                        if r1 != first {
                            continue;
                        }
                        for (r2, y2, z) in &w.edges {
                            if r2 == second && y2 == y {
                                hits.push((*x, *z));
                            }
                        }
                    }
                    for (x, z) in hits {
                        w.add_edge(sup, x, z);
                    }
                }
            }
        }
        let back: Vec<usize> = w
            .edges
            .iter()
            .filter(|(_, x, y)| w.bottom[*y] && !w.bottom[*x])
            .map(|&(_, x, _)| x)
            .collect();
        for x in back {
            w.assert(&ConceptExpr::Bottom, x);
        }
    }

    let mut out = NaiveClosure {
        atoms: BTreeSet::new(),
        aliases: BTreeMap::new(),
        inconsistent: false,
    };
    let mut rep = BTreeMap::new();
    for (a, &id) in &w.named {
        let root = w.find(id);
        let Key::Named(r) = &w.keys[root] else { unreachable!() };
        if r != a {
            out.aliases.insert(a.clone(), r.clone());
        }
        rep.insert(root, r.clone());
        if w.bottom[root] {
            out.inconsistent = true;
        }
    }
    for (a, b) in &different {
        if w.find(w.named[a]) == w.find(w.named[b]) {
            out.inconsistent = true;
        }
    }
    for (&root, name) in &rep {
        for t in &w.types[root] {
            if !is_fresh(t) {
                out.atoms.insert(Entailment::class(t.clone(), name.clone()));
            }
        }
    }
    for (r, x, y) in &w.edges {
        if let (Some(a), Some(b)) = (rep.get(x), rep.get(y)) {
            out.atoms.insert(Entailment::role(r.clone(), a.clone(), b.clone()));
        }
    }
    out
}
