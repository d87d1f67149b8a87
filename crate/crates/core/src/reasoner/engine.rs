//! Delta-driven completion over named individuals plus one shared witness
//! node per existential filler.
//!
//! A witness stands for "some instance of B" and is reached only through
//! `A ⊑ ∃r.B` rules. It carries whatever B implies, so chains such as
//! `A ⊑ ∃r.B, ∃r.B ⊑ C` fire on named individuals, but witnesses never appear
//! in the reported closure.

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;

use crate::entailment::{is_fresh, Entailment, Name};
use crate::ontology::{ABoxAxiom, Basic, ConceptExpr, NormalRule, NormalizedTBox, TBoxAxiom};

use super::closure::{EntailmentClosure, MaterializeStats};
use super::union_find::UnionFind;

type Id = u32;

#[derive(Clone, Debug, Default)]
struct Symbols {
    concepts: Vec<Basic>,
    concept_ids: HashMap<Basic, Id>,
    roles: Vec<Name>,
    role_ids: HashMap<Name, Id>,
}

impl Symbols {
    fn concept(&mut self, b: &Basic) -> Id {
        if let Some(&id) = self.concept_ids.get(b) {
            return id;
        }
        let id = self.concepts.len() as Id;
        self.concepts.push(b.clone());
        self.concept_ids.insert(b.clone(), id);
        id
    }

    fn role(&mut self, r: &Name) -> Id {
        if let Some(&id) = self.role_ids.get(r) {
            return id;
        }
        let id = self.roles.len() as Id;
        self.roles.push(r.clone());
        self.role_ids.insert(r.clone(), id);
        id
    }
}

/// Rule indices keyed by the fact that triggers them.
#[derive(Clone, Debug, Default)]
struct Compiled {
    symbols: Symbols,
    individuals: Vec<Name>,
    sub: Vec<Vec<Id>>,
    conj: Vec<Vec<(Id, Id)>>,
    exists_by_filler: Vec<Vec<(Id, Id)>>,
    exists_by_role: Vec<Vec<(Id, Id)>>,
    sub_exists: Vec<Vec<(Id, Id)>>,
    role_sup: Vec<Vec<Id>>,
    chain_first: Vec<Vec<(Id, Id)>>,
    chain_second: Vec<Vec<(Id, Id)>>,
}

const TOP: Id = 0;
const BOTTOM: Id = 1;

fn grow<T: Default + Clone>(v: &mut Vec<T>, idx: Id) -> &mut T {
    if v.len() <= idx as usize {
        v.resize(idx as usize + 1, T::default());
    }
    &mut v[idx as usize]
}

fn slot<T>(v: &[Vec<T>], idx: Id) -> &[T] {
    v.get(idx as usize).map(Vec::as_slice).unwrap_or(&[])
}

impl Compiled {
    fn new(tbox: &NormalizedTBox) -> Self {
        let mut c = Compiled {
            individuals: tbox.individuals.iter().cloned().collect(),
            ..Default::default()
        };
        assert_eq!(c.symbols.concept(&Basic::Top), TOP);
        assert_eq!(c.symbols.concept(&Basic::Bottom), BOTTOM);
        for rule in &tbox.rules {
            let s = &mut c.symbols;
            match rule {
                NormalRule::Sub { sub, sup } => {
                    let (a, b) = (s.concept(sub), s.concept(sup));
                    grow(&mut c.sub, a).push(b);
                }
                NormalRule::Conj { left, right, sup } => {
                    let (a1, a2, b) = (s.concept(left), s.concept(right), s.concept(sup));
                    grow(&mut c.conj, a1).push((a2, b));
                    grow(&mut c.conj, a2).push((a1, b));
                }
                NormalRule::ExistsSub { role, filler, sup } => {
                    let (r, a, b) = (s.role(role), s.concept(filler), s.concept(sup));
                    grow(&mut c.exists_by_filler, a).push((r, b));
                    grow(&mut c.exists_by_role, r).push((a, b));
                }
                NormalRule::SubExists { sub, role, filler } => {
                    let (a, r, b) = (s.concept(sub), s.role(role), s.concept(filler));
                    grow(&mut c.sub_exists, a).push((r, b));
                }
                NormalRule::RoleSub { sub, sup } => {
                    let (r, t) = (s.role(sub), s.role(sup));
                    grow(&mut c.role_sup, r).push(t);
                }
                NormalRule::RoleChain { first, second, sup } => {
                    let (r1, r2, t) = (s.role(first), s.role(second), s.role(sup));
                    grow(&mut c.chain_first, r1).push((r2, t));
                    grow(&mut c.chain_second, r2).push((r1, t));
                }
            }
        }
        c
    }
}

/// A compiled TBox ready to materialize many ABoxes.
///
/// Compiling once and sharing the reasoner across threads is the intended
/// pattern for domains with many samples.
#[derive(Clone, Debug)]
pub struct Reasoner {
    tbox: NormalizedTBox,
    compiled: Compiled,
}

impl Reasoner {
    pub fn new(tbox: &NormalizedTBox) -> Self {
        Reasoner {
            tbox: tbox.clone(),
            compiled: Compiled::new(tbox),
        }
    }

    /// Reasoner over the TBox extended with constraint axioms, for
    /// consistency checks only.
    pub fn with_constraints(tbox: &NormalizedTBox, constraints: &[TBoxAxiom]) -> Self {
        Reasoner::new(&tbox.extended(constraints))
    }

    pub fn tbox(&self) -> &NormalizedTBox {
        &self.tbox
    }

    pub fn materialize<'a>(&self, abox: impl IntoIterator<Item = &'a ABoxAxiom>) -> EntailmentClosure {
        self.run(abox, false)
    }

    /// Like [`Reasoner::materialize`] but returns as soon as a clash on a
    /// named individual is found.
    pub fn is_consistent<'a>(&self, abox: impl IntoIterator<Item = &'a ABoxAxiom>) -> bool {
        !self.run(abox, true).inconsistent
    }

    fn run<'a>(&self, abox: impl IntoIterator<Item = &'a ABoxAxiom>, stop_on_clash: bool) -> EntailmentClosure {
        let abox: Vec<&ABoxAxiom> = abox.into_iter().collect();
        let complex = abox.iter().any(|ax| {
            matches!(ax, ABoxAxiom::ClassAssertion { concept, .. }
                if !matches!(concept, ConceptExpr::Atomic(_) | ConceptExpr::Nominal(_)
                    | ConceptExpr::Top | ConceptExpr::Bottom))
        });
        if !complex {
            return State::new(&self.compiled, &abox, &HashMap::new()).run(stop_on_clash);
        }
        // Complex assertions are named by fresh concepts in a private copy of
        // the TBox; the shared compiled rules stay untouched.
        let mut tbox = self.tbox.clone();
        let mut named = HashMap::new();
        for ax in &abox {
            if let ABoxAxiom::ClassAssertion { concept, .. } = ax {
                if !named.contains_key(concept) {
                    let b = tbox.name_assertion(concept);
                    named.insert(concept.clone(), b);
                }
            }
        }
        let compiled = Compiled::new(&tbox);
        State::new(&compiled, &abox, &named).run(stop_on_clash)
    }
}

pub fn materialize<'a>(tbox: &NormalizedTBox, abox: impl IntoIterator<Item = &'a ABoxAxiom>) -> EntailmentClosure {
    Reasoner::new(tbox).materialize(abox)
}

pub fn is_consistent<'a>(
    tbox: &NormalizedTBox,
    abox: impl IntoIterator<Item = &'a ABoxAxiom>,
    constraints: &[TBoxAxiom],
) -> bool {
    Reasoner::with_constraints(tbox, constraints).is_consistent(abox)
}

pub fn entails(closure: &EntailmentClosure, g: &Entailment) -> bool {
    closure.entails(g)
}

#[derive(Clone, Debug)]
enum NodeKey {
    Named(Name),
    Witness(Id),
}

#[derive(Clone, Debug)]
struct Node {
    key: NodeKey,
    types: FixedBitSet,
    out: HashMap<Id, Vec<Id>>,
    inc: HashMap<Id, Vec<Id>>,
}

#[derive(Clone, Copy, Debug)]
enum Fact {
    Type(Id, Id),
    Edge(Id, Id, Id),
}

struct State<'c> {
    rules: &'c Compiled,
    symbols: Symbols,
    // concept id -> node for nominal pseudo-concepts
    nominal_node: Vec<Option<Id>>,
    nodes: Vec<Node>,
    uf: UnionFind,
    edges: HashSet<(Id, Id, Id)>,
    witness: HashMap<Id, Id>,
    named: HashMap<Name, Id>,
    different: Vec<(Id, Id)>,
    next: Vec<Fact>,
    facts: usize,
}

impl<'c> State<'c> {
    fn new(rules: &'c Compiled, abox: &[&ABoxAxiom], complex: &HashMap<ConceptExpr, Basic>) -> Self {
        let mut symbols = rules.symbols.clone();
        let mut individuals: Vec<Name> = rules.individuals.clone();
        for ax in abox {
            individuals.extend(ax.individuals().into_iter().cloned());
        }
        individuals.sort();
        individuals.dedup();
        for a in &individuals {
            symbols.concept(&Basic::Nominal(a.clone()));
        }
        let basic_of = |c: &ConceptExpr| -> Basic {
            match c {
                ConceptExpr::Top => Basic::Top,
                ConceptExpr::Bottom => Basic::Bottom,
                ConceptExpr::Atomic(a) => Basic::Atomic(a.clone()),
                ConceptExpr::Nominal(a) => Basic::Nominal(a.clone()),
                other => complex[other].clone(),
            }
        };
        let mut asserted_types = Vec::new();
        for ax in abox {
            match ax {
                ABoxAxiom::ClassAssertion { concept, .. } => {
                    asserted_types.push(symbols.concept(&basic_of(concept)));
                }
                ABoxAxiom::RoleAssertion { role, .. } => {
                    symbols.role(role);
                }
                _ => {}
            }
        }

        let width = symbols.concepts.len();
        let mut nominal_node = vec![None; width];
        let mut st = State {
            rules,
            symbols,
            nominal_node: Vec::new(),
            nodes: Vec::with_capacity(individuals.len()),
            uf: UnionFind::default(),
            edges: HashSet::new(),
            witness: HashMap::new(),
            named: HashMap::new(),
            different: Vec::new(),
            next: Vec::new(),
            facts: 0,
        };
        for a in &individuals {
            let id = st.add_node(NodeKey::Named(a.clone()));
            st.named.insert(a.clone(), id);
            let nom = st.symbols.concept_ids[&Basic::Nominal(a.clone())];
            nominal_node[nom as usize] = Some(id);
        }
        st.nominal_node = nominal_node;
        for a in &individuals {
            let id = st.named[a];
            let nom = st.symbols.concept_ids[&Basic::Nominal(a.clone())];
            st.add_type(id, TOP);
            st.add_type(id, nom);
        }

        let mut types = asserted_types.into_iter();
        for ax in abox {
            match ax {
                ABoxAxiom::ClassAssertion { individual, .. } => {
                    let c = types.next().expect("one id per class assertion");
                    let x = st.named[individual];
                    st.add_type(x, c);
                }
                ABoxAxiom::RoleAssertion { role, subject, object } => {
                    let r = st.symbols.role_ids[role];
                    let (x, y) = (st.named[subject], st.named[object]);
                    st.add_edge(r, x, y);
                }
                ABoxAxiom::Equality(a, b) => {
                    let (x, y) = (st.named[a], st.named[b]);
                    st.merge(x, y);
                }
                ABoxAxiom::Inequality(a, b) => {
                    st.different.push((st.named[a], st.named[b]));
                }
            }
        }
        st
    }

    fn add_node(&mut self, key: NodeKey) -> Id {
        let id = self.uf.push();
        self.nodes.push(Node {
            key,
            types: FixedBitSet::with_capacity(self.symbols.concepts.len()),
            out: HashMap::new(),
            inc: HashMap::new(),
        });
        id
    }

    fn has(&self, x: Id, c: Id) -> bool {
        self.nodes[x as usize].types.contains(c as usize)
    }

    fn add_type(&mut self, x: Id, c: Id) {
        let x = self.uf.find(x);
        if !self.nodes[x as usize].types.put(c as usize) {
            self.facts += 1;
            self.next.push(Fact::Type(x, c));
        }
    }

    fn add_edge(&mut self, r: Id, x: Id, y: Id) {
        let x = self.uf.find(x);
        let y = self.uf.find(y);
        if self.edges.insert((r, x, y)) {
            self.facts += 1;
            self.nodes[x as usize].out.entry(r).or_default().push(y);
            self.nodes[y as usize].inc.entry(r).or_default().push(x);
            self.next.push(Fact::Edge(r, x, y));
        }
    }

    fn witness_for(&mut self, filler: Id) -> Id {
        if let Some(&w) = self.witness.get(&filler) {
            return self.uf.find(w);
        }
        let w = self.add_node(NodeKey::Witness(filler));
        self.witness.insert(filler, w);
        self.add_type(w, TOP);
        self.add_type(w, filler);
        w
    }

    /// Whether `a` should represent a class containing `b`: named nodes beat
    /// witnesses, and among named nodes the least name wins.
    fn wins(&self, a: Id, b: Id) -> bool {
        match (&self.nodes[a as usize].key, &self.nodes[b as usize].key) {
            (NodeKey::Named(x), NodeKey::Named(y)) => x < y,
            (NodeKey::Named(_), NodeKey::Witness(_)) => true,
            (NodeKey::Witness(_), NodeKey::Named(_)) => false,
            (NodeKey::Witness(x), NodeKey::Witness(y)) => x < y,
        }
    }

    fn merge(&mut self, a: Id, b: Id) {
        let a = self.uf.find(a);
        let b = self.uf.find(b);
        if a == b {
            return;
        }
        let (root, loser) = if self.wins(a, b) { (a, b) } else { (b, a) };
        self.uf.attach(loser, root);
        let node = &mut self.nodes[loser as usize];
        let types = std::mem::take(&mut node.types);
        let out = std::mem::take(&mut node.out);
        let inc = std::mem::take(&mut node.inc);
        for c in types.ones() {
            self.add_type(root, c as Id);
        }
        for (r, ys) in out {
            for y in ys {
                self.add_edge(r, root, y);
            }
        }
        for (r, xs) in inc {
            for x in xs {
                self.add_edge(r, x, root);
            }
        }
    }

    fn successors(&mut self, x: Id, r: Id) -> Vec<Id> {
        let ys = self.nodes[x as usize].out.get(&r).cloned().unwrap_or_default();
        ys.into_iter().map(|y| self.uf.find(y)).collect()
    }

    fn predecessors(&mut self, y: Id, r: Id) -> Vec<Id> {
        let xs = self.nodes[y as usize].inc.get(&r).cloned().unwrap_or_default();
        xs.into_iter().map(|x| self.uf.find(x)).collect()
    }

    fn process_type(&mut self, x: Id, c: Id) {
        let rules = self.rules;
        let mut x = self.uf.find(x);
        if let Some(Some(b)) = self.nominal_node.get(c as usize).copied() {
            if self.uf.find(b) != x {
                self.merge(x, b);
                x = self.uf.find(x);
            }
        }
        for &b in slot(&rules.sub, c) {
            self.add_type(x, b);
        }
        for &(other, b) in slot(&rules.conj, c) {
            if self.has(x, other) {
                self.add_type(x, b);
            }
        }
        for &(r, b) in slot(&rules.exists_by_filler, c) {
            for p in self.predecessors(x, r) {
                self.add_type(p, b);
            }
        }
        for &(r, filler) in slot(&rules.sub_exists, c) {
            let target = match self.nominal_node.get(filler as usize).copied().flatten() {
                Some(b) => b,
                None => self.witness_for(filler),
            };
            self.add_edge(r, x, target);
        }
        if c == BOTTOM {
            let roles: Vec<Id> = self.nodes[x as usize].inc.keys().copied().collect();
            for r in roles {
                for p in self.predecessors(x, r) {
                    self.add_type(p, BOTTOM);
                }
            }
        }
    }

    fn process_edge(&mut self, r: Id, x: Id, y: Id) {
        let rules = self.rules;
        let x = self.uf.find(x);
        let y = self.uf.find(y);
        for &(filler, b) in slot(&rules.exists_by_role, r) {
            if self.has(y, filler) {
                self.add_type(x, b);
            }
        }
        if self.has(y, BOTTOM) {
            self.add_type(x, BOTTOM);
        }
        for &s in slot(&rules.role_sup, r) {
            self.add_edge(s, x, y);
        }
        for &(r2, s) in slot(&rules.chain_first, r) {
            for z in self.successors(y, r2) {
                self.add_edge(s, x, z);
            }
        }
        for &(r1, s) in slot(&rules.chain_second, r) {
            for p in self.predecessors(x, r1) {
                self.add_edge(s, p, y);
            }
        }
    }

    fn named_clash(&mut self) -> bool {
        let named: Vec<Id> = self.named.values().copied().collect();
        named.into_iter().any(|x| {
            let x = self.uf.find(x);
            self.has(x, BOTTOM)
        }) || self.different_merged()
    }

    fn different_merged(&mut self) -> bool {
        let pairs = self.different.clone();
        pairs.into_iter().any(|(a, b)| self.uf.find(a) == self.uf.find(b))
    }

    fn run(mut self, stop_on_clash: bool) -> EntailmentClosure {
        let mut rounds = 0;
        while !self.next.is_empty() {
            if stop_on_clash && self.named_clash() {
                break;
            }
            rounds += 1;
            let delta = std::mem::take(&mut self.next);
            for fact in delta {
                match fact {
                    Fact::Type(x, c) => self.process_type(x, c),
                    Fact::Edge(r, x, y) => self.process_edge(r, x, y),
                }
            }
        }
        let n = self.nodes.len();
        let stats = MaterializeStats {
            rounds,
            fact_bound: self.symbols.concepts.len() * n + self.symbols.roles.len() * n * n,
            witnesses: self.witness.len(),
            facts: self.facts,
        };
        self.into_closure(stats)
    }

    fn into_closure(mut self, stats: MaterializeStats) -> EntailmentClosure {
        let inconsistent = self.named_clash();
        let mut closure = EntailmentClosure {
            inconsistent,
            stats,
            ..Default::default()
        };
        let mut names: Vec<(Name, Id)> = self.named.iter().map(|(n, &i)| (n.clone(), i)).collect();
        names.sort();
        let mut rep_name: HashMap<Id, Name> = HashMap::new();
        for (name, id) in &names {
            let root = self.uf.find(*id);
            let NodeKey::Named(rep) = &self.nodes[root as usize].key else {
                unreachable!("named nodes never lose to witnesses");
            };
            if rep != name {
                closure.aliases.insert(name.clone(), rep.clone());
            }
            rep_name.insert(root, rep.clone());
        }
        for (&root, name) in &rep_name {
            closure.individuals.insert(name.clone());
            for c in self.nodes[root as usize].types.ones() {
                if let Basic::Atomic(a) = &self.symbols.concepts[c] {
                    if !is_fresh(a) {
                        closure.atoms.insert(Entailment::class(a.clone(), name.clone()));
                    }
                }
            }
        }
        for &(r, x, y) in &self.edges {
            if !(self.uf.is_root(x) && self.uf.is_root(y)) {
                continue;
            }
            if let (Some(a), Some(b)) = (rep_name.get(&x), rep_name.get(&y)) {
                let role = self.symbols.roles[r as usize].clone();
                closure.atoms.insert(Entailment::role(role, a.clone(), b.clone()));
            }
        }
        closure
    }
}
