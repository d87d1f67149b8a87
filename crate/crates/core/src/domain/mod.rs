//! Learning samples, learning domains and their bag-of-entailments encoding.

mod corpus;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::entailment::Entailment;
use crate::error::{Error, Result};
use crate::ontology::{ABoxAxiom, NormalizedTBox};
use crate::reasoner::{EntailmentClosure, Reasoner};

pub use corpus::{load_corpus, parse_lso, parse_manifest, write_lso, Corpus, DomainManifest};

/// Annotation key added to every domain annotation for the target entailment.
pub const TARGET_KEY: &str = "t_e";
/// Annotation key used for chronological splits.
pub const DATE_KEY: &str = "dat";

/// One learning sample: an annotated ABox with optional numeric data values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lso {
    pub id: String,
    pub annotations: BTreeMap<String, String>,
    pub abox: Vec<ABoxAxiom>,
    pub values: BTreeMap<String, f64>,
}

/// LSOs sharing a TBox and a target entailment.
///
/// Closures are computed by [`LearningDomain::materialize`] over each LSO's
/// ABox together with the domain's imported external axioms.
#[derive(Clone, Debug)]
pub struct LearningDomain {
    pub id: String,
    pub target: Entailment,
    pub lsos: Vec<Lso>,
    reasoner: Arc<Reasoner>,
    external: Vec<ABoxAxiom>,
    closures: Vec<EntailmentClosure>,
    domain_closure: BTreeSet<Entailment>,
}

impl LearningDomain {
    pub fn new(id: impl Into<String>, reasoner: Arc<Reasoner>, target: Entailment, lsos: Vec<Lso>) -> Self {
        LearningDomain {
            id: id.into(),
            target,
            lsos,
            reasoner,
            external: Vec::new(),
            closures: Vec::new(),
            domain_closure: BTreeSet::new(),
        }
    }

    pub fn reasoner(&self) -> &Arc<Reasoner> {
        &self.reasoner
    }

    pub fn tbox(&self) -> &NormalizedTBox {
        self.reasoner.tbox()
    }

    pub fn external_axioms(&self) -> &[ABoxAxiom] {
        &self.external
    }

    /// Replaces the imported axioms and recomputes every closure.
    pub fn set_external_axioms(&mut self, axioms: Vec<ABoxAxiom>) {
        self.external = axioms;
        self.materialize();
    }

    pub fn is_materialized(&self) -> bool {
        self.closures.len() == self.lsos.len() && !self.lsos.is_empty()
    }

    /// Computes all LSO closures in parallel and the domain closure, the union
    /// of the consistent ones.
    pub fn materialize(&mut self) {
        let reasoner = &self.reasoner;
        let external = &self.external;
        self.closures = self
            .lsos
            .par_iter()
            .map(|o| reasoner.materialize(o.abox.iter().chain(external)))
            .collect();
        self.domain_closure = BTreeSet::new();
        for (o, c) in self.lsos.iter().zip(&self.closures) {
            if c.is_inconsistent() {
                log::warn!("domain {}: sample {} is inconsistent and left out", self.id, o.id);
                continue;
            }
            self.domain_closure.extend(c.atoms().iter().cloned());
        }
    }

    fn assert_materialized(&self) {
        assert!(
            self.closures.len() == self.lsos.len(),
            "domain {} used before materialize()",
            self.id
        );
    }

    pub fn closures(&self) -> &[EntailmentClosure] {
        self.assert_materialized();
        &self.closures
    }

    /// Union of the consistent LSO closures.
    pub fn domain_closure(&self) -> &BTreeSet<Entailment> {
        self.assert_materialized();
        &self.domain_closure
    }

    /// Shared annotation pairs plus the target pair.
    pub fn annotation(&self) -> BTreeMap<String, String> {
        let mut iter = self.lsos.iter();
        let mut shared = iter.next().map(|o| o.annotations.clone()).unwrap_or_default();
        for o in iter {
            shared.retain(|k, v| o.annotations.get(k) == Some(v));
        }
        shared.insert(TARGET_KEY.to_string(), self.target.to_string());
        shared
    }

    /// Sorted entailments appearing in at least one closure, without the target.
    pub fn vocabulary(&self) -> Vec<Entailment> {
        let target = self.canonical_target_set();
        self.domain_closure()
            .iter()
            .filter(|g| !target.contains(*g))
            .cloned()
            .collect()
    }

    // The target as it appears in closures; aliases can differ per LSO.
    pub(crate) fn canonical_target_set(&self) -> BTreeSet<Entailment> {
        let mut out: BTreeSet<Entailment> = self.closures().iter().map(|c| c.canonicalize(&self.target)).collect();
        out.insert(self.target.clone());
        out
    }

    /// Sorted data properties present in at least one LSO.
    pub fn value_properties(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.lsos.iter().flat_map(|o| o.values.keys()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.closures().iter().map(|c| c.entails(&self.target)).collect()
    }

    /// Encodes every LSO; fails on the first inconsistent one.
    pub fn encode(&self, vocab: &[Entailment], value_order: &[String]) -> Result<Vec<FeatureVector>> {
        self.lsos
            .iter()
            .zip(self.closures())
            .map(|(o, c)| {
                if c.is_inconsistent() {
                    return Err(Error::InconsistentSample {
                        domain: self.id.clone(),
                        lso: o.id.clone(),
                    });
                }
                Ok(boe_encode(c, &o.values, vocab, value_order, &self.target))
            })
            .collect()
    }
}

pub fn domain_annotation(d: &LearningDomain) -> BTreeMap<String, String> {
    d.annotation()
}

pub fn build_vocabulary(d: &LearningDomain) -> Vec<Entailment> {
    d.vocabulary()
}

/// Sorted union of the vocabularies of `domains`, with every domain's target
/// left out, so all of them encode to the same width.
pub fn union_vocabulary(domains: &[LearningDomain]) -> Vec<Entailment> {
    let mut all = BTreeSet::new();
    let mut targets = BTreeSet::new();
    for d in domains {
        all.extend(d.domain_closure().iter().cloned());
        targets.extend(d.canonical_target_set());
    }
    all.difference(&targets).cloned().collect()
}

pub fn union_value_properties(domains: &[LearningDomain]) -> Vec<String> {
    let set: BTreeSet<String> = domains.iter().flat_map(|d| d.value_properties()).collect();
    set.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub boe: FixedBitSet,
    pub values: Vec<f64>,
    pub label: bool,
}

impl FeatureVector {
    /// `x = [e, v]` as reals.
    pub fn combined(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.boe.len())
            .map(|i| if self.boe.contains(i) { 1.0 } else { 0.0 })
            .collect();
        x.extend_from_slice(&self.values);
        x
    }

    pub fn width(&self) -> usize {
        self.boe.len() + self.values.len()
    }
}

/// Bit `i` is set iff `vocab[i]` holds in the closure; missing data values
/// are encoded as 0.
pub fn boe_encode(
    closure: &EntailmentClosure,
    values: &BTreeMap<String, f64>,
    vocab: &[Entailment],
    value_order: &[String],
    target: &Entailment,
) -> FeatureVector {
    let mut boe = FixedBitSet::with_capacity(vocab.len());
    for (i, g) in vocab.iter().enumerate() {
        if closure.atoms().contains(g) {
            boe.insert(i);
        }
    }
    FeatureVector {
        boe,
        values: value_order
            .iter()
            .map(|k| values.get(k).copied().unwrap_or(0.0))
            .collect(),
        label: closure.entails(target),
    }
}

/// Train/test partition of LSO indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Chronological split on the `dat` annotation when every LSO has one,
/// otherwise a seeded shuffle. `train_fraction` of the samples (rounded, and
/// at least one on each side when possible) go to training.
pub fn split_indices(lsos: &[Lso], train_fraction: f64, seed: u64) -> Split {
    let n = lsos.len();
    let mut order: Vec<usize> = (0..n).collect();
    if n > 0 && lsos.iter().all(|o| o.annotations.contains_key(DATE_KEY)) {
        order.sort_by(|&a, &b| {
            let ka = date_key(&lsos[a].annotations[DATE_KEY]);
            let kb = date_key(&lsos[b].annotations[DATE_KEY]);
            ka.cmp(&kb).then_with(|| lsos[a].id.cmp(&lsos[b].id))
        });
    } else {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut k = (train_fraction * n as f64).round() as usize;
    if n >= 2 {
        k = k.clamp(1, n - 1);
    }
    let test = order.split_off(k.min(n));
    Split { train: order, test }
}

/// Sort key for dates written `YYYY-MM-DD` or `MM/DD/YYYY`; anything else
/// sorts by its text.
fn date_key(s: &str) -> (u32, u32, u32, String) {
    let nums: Vec<u32> = s
        .split(['-', '/'])
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .unwrap_or_default();
    match nums.as_slice() {
        [y, m, d] if s.contains('-') => (*y, *m, *d, String::new()),
        [m, d, y] if s.contains('/') => (*y, *m, *d, String::new()),
        _ => (u32::MAX, 0, 0, s.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{normalize_tbox, parse_ontology};

    fn lso(id: &str, ann: &[(&str, &str)], doc: &str) -> Lso {
        Lso {
            id: id.into(),
            annotations: ann.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            abox: parse_ontology(doc).unwrap().abox,
            values: BTreeMap::new(),
        }
    }

    fn domain(tbox: &str, lsos: Vec<Lso>) -> LearningDomain {
        let t = normalize_tbox(&parse_ontology(tbox).unwrap().tbox);
        let mut d = LearningDomain::new(
            "d0",
            Arc::new(Reasoner::new(&t)),
            "DelayedDep(d)".parse().unwrap(),
            lsos,
        );
        d.materialize();
        d
    }

    #[test]
    fn annotation_intersection() {
        let base = [("car", "DL"), ("ori", "LAX"), ("des", "JFK")];
        let mut a = base.to_vec();
        a.push(("dat", "2018-01-01"));
        let mut b = base.to_vec();
        b.push(("dat", "2018-01-02"));
        let d = domain("", vec![lso("1", &a, ""), lso("2", &b, "")]);
        let ann = d.annotation();
        assert_eq!(ann.len(), 4);
        assert_eq!(ann["t_e"], "DelayedDep(d)");
        assert_eq!(ann["ori"], "LAX");

        let d = domain("", vec![lso("1", &[("x", "1")], ""), lso("2", &[("y", "1")], "")]);
        assert_eq!(d.annotation().len(), 1);
    }

    #[test]
    fn vocabulary_and_encoding() {
        let d = domain(
            "",
            vec![
                lso("1", &[("k", "1")], "ClassAssert(A x)"),
                lso(
                    "2",
                    &[("k", "2")],
                    "ClassAssert(A x)\nClassAssert(B x)\nClassAssert(DelayedDep d)",
                ),
            ],
        );
        let vocab = d.vocabulary();
        let rendered: Vec<String> = vocab.iter().map(|g| g.to_string()).collect();
        assert_eq!(rendered, ["A(x)", "B(x)"]);
        let fv = d.encode(&vocab, &[]).unwrap();
        assert_eq!(fv[0].combined(), vec![1.0, 0.0]);
        assert!(!fv[0].label);
        assert_eq!(fv[1].combined(), vec![1.0, 1.0]);
        assert!(fv[1].label);
    }

    #[test]
    fn inconsistent_sample_refused() {
        let d = domain(
            "SubClassOf(And(A B) Bottom)",
            vec![lso("bad", &[("k", "1")], "ClassAssert(A x)\nClassAssert(B x)")],
        );
        let err = d.encode(&[], &[]).unwrap_err();
        assert!(err.to_string().contains("bad"));
    }

    #[test]
    fn chronological_split() {
        let lsos: Vec<Lso> = ["01/03/2018", "2018-01-01", "2018-01-02", "01/04/2018", "2018-01-05"]
            .iter()
            .enumerate()
            .map(|(i, d)| lso(&i.to_string(), &[("dat", d)], ""))
            .collect();
        let s = split_indices(&lsos, 0.8, 0);
        assert_eq!(s.train, vec![1, 2, 0, 3]);
        assert_eq!(s.test, vec![4]);
    }

    #[test]
    fn shuffle_split_is_seeded() {
        let lsos: Vec<Lso> = (0..10).map(|i| lso(&i.to_string(), &[("k", "v")], "")).collect();
        let a = split_indices(&lsos, 0.8, 7);
        assert_eq!(a, split_indices(&lsos, 0.8, 7));
        assert_eq!(a.train.len(), 8);
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }
}
