//! TBox normalization into the rule shapes the completion engine consumes.
//!
//! Every GCI is rewritten into rules whose operands are basic concepts
//! (atomic, `Top`, `Bottom` or a nominal); composite subexpressions get fresh
//! `_N<k>` names. The rewrite is a conservative extension: over the original
//! signature it entails exactly what the input did.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::entailment::{Name, FRESH_PREFIX};

use super::{ConceptExpr, NameKind, TBoxAxiom};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Basic {
    Top,
    Bottom,
    Atomic(Name),
    Nominal(Name),
}

impl Basic {
    fn from_expr(c: &ConceptExpr) -> Option<Basic> {
        match c {
            ConceptExpr::Top => Some(Basic::Top),
            ConceptExpr::Bottom => Some(Basic::Bottom),
            ConceptExpr::Atomic(a) => Some(Basic::Atomic(a.clone())),
            ConceptExpr::Nominal(a) => Some(Basic::Nominal(a.clone())),
            _ => None,
        }
    }

    pub fn to_expr(&self) -> ConceptExpr {
        match self {
            Basic::Top => ConceptExpr::Top,
            Basic::Bottom => ConceptExpr::Bottom,
            Basic::Atomic(a) => ConceptExpr::Atomic(a.clone()),
            Basic::Nominal(a) => ConceptExpr::Nominal(a.clone()),
        }
    }
}

impl fmt::Display for Basic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_expr().fmt(f)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum NormalRule {
    /// `A ⊑ B`; with a nominal on the right this is equality-generating.
    Sub {
        sub: Basic,
        sup: Basic,
    },
    /// `A1 ⊓ A2 ⊑ B`
    Conj {
        left: Basic,
        right: Basic,
        sup: Basic,
    },
    /// `∃r.A ⊑ B`
    ExistsSub {
        role: Name,
        filler: Basic,
        sup: Basic,
    },
    /// `A ⊑ ∃r.B`
    SubExists {
        sub: Basic,
        role: Name,
        filler: Basic,
    },
    RoleSub {
        sub: Name,
        sup: Name,
    },
    RoleChain {
        first: Name,
        second: Name,
        sup: Name,
    },
}

impl NormalRule {
    pub fn to_axiom(&self) -> TBoxAxiom {
        match self {
            NormalRule::Sub { sub, sup } => TBoxAxiom::Gci {
                lhs: sub.to_expr(),
                rhs: sup.to_expr(),
            },
            NormalRule::Conj { left, right, sup } => TBoxAxiom::Gci {
                lhs: ConceptExpr::and([left.to_expr(), right.to_expr()]),
                rhs: sup.to_expr(),
            },
            NormalRule::ExistsSub { role, filler, sup } => TBoxAxiom::Gci {
                lhs: ConceptExpr::some(role.clone(), filler.to_expr()),
                rhs: sup.to_expr(),
            },
            NormalRule::SubExists { sub, role, filler } => TBoxAxiom::Gci {
                lhs: sub.to_expr(),
                rhs: ConceptExpr::some(role.clone(), filler.to_expr()),
            },
            NormalRule::RoleSub { sub, sup } => TBoxAxiom::RoleInclusion {
                sub: sub.clone(),
                sup: sup.clone(),
            },
            NormalRule::RoleChain { first, second, sup } => TBoxAxiom::RoleChain {
                first: first.clone(),
                second: second.clone(),
                sup: sup.clone(),
            },
        }
    }
}

impl fmt::Display for NormalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_axiom().fmt(f)
    }
}

#[derive(Clone, Default, Debug)]
pub struct NormalizedTBox {
    pub rules: BTreeSet<NormalRule>,
    /// Individuals named by nominals, including those in axioms that
    /// normalized away; they are part of every ABox's domain.
    pub individuals: BTreeSet<Name>,
    next_fresh: usize,
    // Fresh names already introduced, keyed by (expression, defined-from-below).
    // Sharing them keeps repeated subexpressions from multiplying rules.
    memo: HashMap<(ConceptExpr, bool), Name>,
}

impl NormalizedTBox {
    pub fn fresh_count(&self) -> usize {
        self.next_fresh
    }

    /// Normalizes more axioms into this rule set, continuing the fresh-name
    /// counter so names never collide.
    pub fn extend<'a>(&mut self, axioms: impl IntoIterator<Item = &'a TBoxAxiom>) {
        for ax in axioms {
            self.add_axiom(ax);
        }
    }

    pub fn extended<'a>(&self, axioms: impl IntoIterator<Item = &'a TBoxAxiom>) -> Self {
        let mut out = self.clone();
        out.extend(axioms);
        out
    }

    /// Returns a fresh concept `X` with `X ⊑ concept`, so that asserting `X(a)`
    /// has the effect of asserting `concept(a)`.
    pub fn name_assertion(&mut self, concept: &ConceptExpr) -> Basic {
        if let Some(b) = Basic::from_expr(concept) {
            return b;
        }
        Basic::Atomic(self.define_above(concept))
    }

    /// Rules rendered back as plain GCIs and role axioms.
    pub fn to_axioms(&self) -> Vec<TBoxAxiom> {
        self.rules.iter().map(NormalRule::to_axiom).collect()
    }

    fn fresh(&mut self) -> Name {
        self.next_fresh += 1;
        format!("{FRESH_PREFIX}{}", self.next_fresh).into()
    }

    fn add_axiom(&mut self, ax: &TBoxAxiom) {
        match ax {
            TBoxAxiom::Gci { lhs, rhs } => {
                for c in [lhs, rhs] {
                    c.visit_names(&mut |kind, name| {
                        if kind == NameKind::Individual {
                            self.individuals.insert(name.clone());
                        }
                    });
                }
                self.add_gci(lhs, rhs)
            }
            TBoxAxiom::RoleInclusion { sub, sup } => {
                if sub != sup {
                    self.rules.insert(NormalRule::RoleSub {
                        sub: sub.clone(),
                        sup: sup.clone(),
                    });
                }
            }
            TBoxAxiom::RoleChain { first, second, sup } => {
                self.rules.insert(NormalRule::RoleChain {
                    first: first.clone(),
                    second: second.clone(),
                    sup: sup.clone(),
                });
            }
        }
    }

    fn add_gci(&mut self, lhs: &ConceptExpr, rhs: &ConceptExpr) {
        if matches!(lhs, ConceptExpr::Bottom) || matches!(rhs, ConceptExpr::Top) {
            return;
        }
        if let ConceptExpr::Conjunction(ms) = rhs {
            for m in ms {
                self.add_gci(lhs, m);
            }
            return;
        }
        let left = self.lhs_form(lhs);
        let right = self.rhs_form(rhs);
        match (left, right) {
            (LhsForm::Empty, _) => {}
            (LhsForm::Basic(sub), RhsForm::Basic(sup)) => {
                if sub != sup {
                    self.rules.insert(NormalRule::Sub { sub, sup });
                }
            }
            (LhsForm::Basic(sub), RhsForm::Exists(role, filler)) => {
                self.rules.insert(NormalRule::SubExists { sub, role, filler });
            }
            (complex, RhsForm::Basic(sup)) => self.emit_lhs(complex, sup),
            (complex, RhsForm::Exists(role, filler)) => {
                let mid = self.fresh();
                self.emit_lhs(complex, Basic::Atomic(mid.clone()));
                self.rules.insert(NormalRule::SubExists {
                    sub: Basic::Atomic(mid),
                    role,
                    filler,
                });
            }
        }
    }

    fn emit_lhs(&mut self, form: LhsForm, sup: Basic) {
        match form {
            LhsForm::Empty => {}
            LhsForm::Basic(sub) => {
                if sub != sup {
                    self.rules.insert(NormalRule::Sub { sub, sup });
                }
            }
            LhsForm::Conj(left, right) => {
                self.rules.insert(NormalRule::Conj { left, right, sup });
            }
            LhsForm::Exists(role, filler) => {
                self.rules.insert(NormalRule::ExistsSub { role, filler, sup });
            }
        }
    }

    fn lhs_form(&mut self, c: &ConceptExpr) -> LhsForm {
        if let Some(b) = Basic::from_expr(c) {
            return if b == Basic::Bottom {
                LhsForm::Empty
            } else {
                LhsForm::Basic(b)
            };
        }
        match c {
            ConceptExpr::Conjunction(ms) => {
                if ms.iter().any(|m| matches!(m, ConceptExpr::Bottom)) {
                    return LhsForm::Empty;
                }
                let mut parts: Vec<Basic> = ms
                    .iter()
                    .filter(|m| !matches!(m, ConceptExpr::Top))
                    .map(|m| self.basic_below(m))
                    .collect();
                parts.dedup();
                match parts.len() {
                    0 => LhsForm::Basic(Basic::Top),
                    1 => LhsForm::Basic(parts.pop().unwrap()),
                    _ => {
                        // Left fold into binary conjunctions: ((p0 ⊓ p1) ⊓ p2) ...
                        let last = parts.pop().unwrap();
                        let mut acc = parts[0].clone();
                        for p in &parts[1..] {
                            let x = Basic::Atomic(self.fresh());
                            self.rules.insert(NormalRule::Conj {
                                left: acc,
                                right: p.clone(),
                                sup: x.clone(),
                            });
                            acc = x;
                        }
                        LhsForm::Conj(acc, last)
                    }
                }
            }
            ConceptExpr::Existential(r, filler) => {
                if matches!(**filler, ConceptExpr::Bottom) {
                    return LhsForm::Empty;
                }
                let b = self.basic_below(filler);
                LhsForm::Exists(r.clone(), b)
            }
            _ => unreachable!("basic handled above"),
        }
    }

    fn rhs_form(&mut self, c: &ConceptExpr) -> RhsForm {
        if let Some(b) = Basic::from_expr(c) {
            return RhsForm::Basic(b);
        }
        match c {
            ConceptExpr::Existential(r, filler) => {
                let b = match Basic::from_expr(filler) {
                    Some(b) => b,
                    None => Basic::Atomic(self.define_above(filler)),
                };
                RhsForm::Exists(r.clone(), b)
            }
            ConceptExpr::Conjunction(_) => {
                // Only reachable from nested positions; split through a name.
                RhsForm::Basic(Basic::Atomic(self.define_above(c)))
            }
            _ => unreachable!("basic handled above"),
        }
    }

    /// Basic concept `X` with `c ⊑ X` (used on the left-hand side).
    fn basic_below(&mut self, c: &ConceptExpr) -> Basic {
        if let Some(b) = Basic::from_expr(c) {
            return b;
        }
        let key = (c.clone(), true);
        if let Some(n) = self.memo.get(&key) {
            return Basic::Atomic(n.clone());
        }
        let x = self.fresh();
        self.memo.insert(key, x.clone());
        self.add_gci(c, &ConceptExpr::Atomic(x.clone()));
        Basic::Atomic(x)
    }

    /// Fresh atomic `X` with `X ⊑ c` (used on the right-hand side).
    fn define_above(&mut self, c: &ConceptExpr) -> Name {
        let key = (c.clone(), false);
        if let Some(n) = self.memo.get(&key) {
            return n.clone();
        }
        let x = self.fresh();
        self.memo.insert(key, x.clone());
        self.add_gci(&ConceptExpr::Atomic(x.clone()), c);
        x
    }
}

enum LhsForm {
    Empty,
    Basic(Basic),
    Conj(Basic, Basic),
    Exists(Name, Basic),
}

enum RhsForm {
    Basic(Basic),
    Exists(Name, Basic),
}

pub fn normalize_tbox<'a>(tbox: impl IntoIterator<Item = &'a TBoxAxiom>) -> NormalizedTBox {
    let mut out = NormalizedTBox::default();
    out.extend(tbox);
    out
}
