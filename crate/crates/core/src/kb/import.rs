//! Root-gated import of external facts.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::LearningDomain;
use crate::entailment::{Entailment, Name};
use crate::error::Error;
use crate::ontology::{ABoxAxiom, ConceptExpr, TBoxAxiom};
use crate::reasoner::Reasoner;

use super::{extract_axioms, match_entities, KbAdapter, VocabularyMapping};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ImportOptions {
    /// Check candidates against this many seeded randomly chosen samples
    /// instead of all of them. An approximation: an accepted candidate may
    /// still clash with an unchecked sample.
    pub consistency_sample: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub entity: String,
    /// First sample, in domain order, that became inconsistent.
    pub witness: String,
}

/// What happened to one root individual.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub individual: Name,
    pub candidates: usize,
    pub accepted: Option<String>,
    pub added: usize,
    pub rejected: Vec<Rejection>,
}

impl AuditEntry {
    pub fn outcome(&self) -> &'static str {
        match (&self.accepted, self.candidates) {
            (Some(_), _) => "accepted",
            (None, 0) => "no-match",
            (None, _) => "all-rejected",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportOutcome {
    pub external: Vec<ABoxAxiom>,
    #[serde(skip)]
    pub closure: BTreeSet<Entailment>,
    pub audit: Vec<AuditEntry>,
    /// Concept and role names introduced by imported axioms that neither the
    /// TBox nor any sample mentions.
    pub introduced_names: BTreeSet<Name>,
    pub approximate: bool,
}

/// A failed import, keeping the audit of the individuals handled before the
/// failure.
#[derive(Debug, thiserror::Error)]
#[error("external import aborted at `{individual}`: {source}")]
pub struct ImportAborted {
    pub individual: Name,
    #[source]
    pub source: Error,
    pub partial: Vec<AuditEntry>,
}

fn predicate_names(c: &ConceptExpr, out: &mut BTreeSet<Name>) {
    match c {
        ConceptExpr::Atomic(a) => {
            out.insert(a.clone());
        }
        ConceptExpr::Conjunction(ms) => ms.iter().for_each(|m| predicate_names(m, out)),
        ConceptExpr::Existential(r, f) => {
            out.insert(r.clone());
            predicate_names(f, out);
        }
        _ => {}
    }
}

fn abox_predicates<'a>(abox: impl IntoIterator<Item = &'a ABoxAxiom>, out: &mut BTreeSet<Name>) {
    for ax in abox {
        match ax {
            ABoxAxiom::ClassAssertion { concept, .. } => predicate_names(concept, out),
            ABoxAxiom::RoleAssertion { role, .. } => {
                out.insert(role.clone());
            }
            _ => {}
        }
    }
}

fn known_predicates(d: &LearningDomain) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for ax in d.tbox().to_axioms() {
        match ax {
            TBoxAxiom::Gci { lhs, rhs } => {
                predicate_names(&lhs, &mut out);
                predicate_names(&rhs, &mut out);
            }
            TBoxAxiom::RoleInclusion { sub, sup } => {
                out.extend([sub, sup]);
            }
            TBoxAxiom::RoleChain { first, second, sup } => {
                out.extend([first, second, sup]);
            }
        }
    }
    abox_predicates(d.lsos.iter().flat_map(|o| &o.abox), &mut out);
    out
}

/// For every root individual in lexicographic order, takes the first matched
/// entity whose extracted axioms, together with everything accepted so far,
/// keep every sample consistent under the TBox plus `constraints`. Accepted
/// axioms accumulate and are installed as the domain's external axioms,
/// which re-materializes its closures.
///
/// Samples that are inconsistent before any import are not used as
/// witnesses, since they would reject every candidate.
pub fn import_external(
    d: &mut LearningDomain,
    roots: &BTreeSet<Name>,
    adapter: &dyn KbAdapter,
    mapping: &VocabularyMapping,
    constraints: &[TBoxAxiom],
    opts: &ImportOptions,
) -> Result<ImportOutcome, ImportAborted> {
    let checker = Reasoner::with_constraints(d.tbox(), constraints);
    let mut pool: Vec<usize> = (0..d.lsos.len())
        .into_par_iter()
        .filter(|&i| checker.is_consistent(&d.lsos[i].abox))
        .collect();
    if pool.len() < d.lsos.len() {
        log::warn!(
            "domain {}: {} samples are inconsistent with the constraints and are not used for import checks",
            d.id,
            d.lsos.len() - pool.len()
        );
    }
    let approximate = match opts.consistency_sample {
        Some(k) if k < pool.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut picked: Vec<usize> = sample(&mut rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
            picked.sort_unstable();
            pool = picked;
            true
        }
        _ => false,
    };

    let mut accepted: Vec<ABoxAxiom> = Vec::new();
    let mut seen: BTreeSet<ABoxAxiom> = BTreeSet::new();
    let mut audit = Vec::new();
    for ind in roots {
        let candidates = match match_entities(adapter, ind) {
            Ok(c) => c,
            Err(source) => {
                return Err(ImportAborted {
                    individual: ind.clone(),
                    source,
                    partial: audit,
                })
            }
        };
        let mut entry = AuditEntry {
            individual: ind.clone(),
            candidates: candidates.len(),
            accepted: None,
            added: 0,
            rejected: Vec::new(),
        };
        for e in &candidates {
            let k = extract_axioms(e, mapping, ind);
            let lsos = &d.lsos;
            let clash = pool
                .par_iter()
                .position_first(|&i| !checker.is_consistent(lsos[i].abox.iter().chain(&accepted).chain(&k)));
            match clash {
                Some(p) => entry.rejected.push(Rejection {
                    entity: e.entity_id.clone(),
                    witness: lsos[pool[p]].id.clone(),
                }),
                None => {
                    for ax in k {
                        if seen.insert(ax.clone()) {
                            accepted.push(ax);
                            entry.added += 1;
                        }
                    }
                    entry.accepted = Some(e.entity_id.clone());
                    break;
                }
            }
        }
        log::debug!("import {}: {} ({} axioms)", ind, entry.outcome(), entry.added);
        audit.push(entry);
    }

    let known = known_predicates(d);
    let mut introduced = BTreeSet::new();
    abox_predicates(&accepted, &mut introduced);
    introduced.retain(|n| !known.contains(n));
    for n in &introduced {
        log::info!("domain {}: imported name `{n}` is new to the domain vocabulary", d.id);
    }

    d.set_external_axioms(accepted.clone());
    Ok(ImportOutcome {
        external: accepted,
        closure: d.domain_closure().clone(),
        audit,
        introduced_names: introduced,
        approximate,
    })
}

/// Every individual named in some sample, for comparing gated and ungated
/// import.
pub fn all_individuals(d: &LearningDomain) -> BTreeSet<Name> {
    d.lsos
        .iter()
        .flat_map(|o| o.abox.iter().flat_map(|a| a.individuals()))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::Lso;
    use crate::kb::{parse_mapping, FileKb};
    use crate::ontology::{normalize_tbox, parse_ontology};

    const TBOX: &str = "SubClassOf(Airport Location)\n";
    const KB: &str = "song\tLAX\tdbo:Song\t\nairport\tLos Angeles International Airport|LAX\tdbo:Airport\tgeo:lat=38.94\nord\tORD\tdbo:Airport\t\n";
    const MAP: &str = "type dbo:Song -> Song\ntype dbo:Airport -> Airport\nprop geo:lat -> hasLat\n";

    fn domain() -> LearningDomain {
        let t = parse_ontology(TBOX).unwrap();
        let r = Arc::new(Reasoner::new(&normalize_tbox(&t.tbox)));
        let lsos = (0..3)
            .map(|i| Lso {
                id: format!("o{i}"),
                abox: parse_ontology(&format!(
                    "ClassAssert(Airport LAX)\nRoleAssert(hasOri d{i} LAX)\nClassAssert(Departure d{i})\n"
                ))
                .unwrap()
                .abox,
                ..Default::default()
            })
            .collect();
        let mut d = LearningDomain::new("dom", r, "DelayedDep(d0)".parse().unwrap(), lsos);
        d.materialize();
        d
    }

    fn constraints() -> Vec<TBoxAxiom> {
        parse_ontology("SubClassOf(And(Location Song) Bottom)\n").unwrap().tbox
    }

    fn names(xs: &[&str]) -> BTreeSet<Name> {
        xs.iter().map(|s| Name::from(*s)).collect()
    }

    #[test]
    fn song_rejected_airport_accepted() {
        let mut d = domain();
        let kb = FileKb::parse(KB, "kb").unwrap();
        let map = parse_mapping(MAP, "m").unwrap();
        let out = import_external(
            &mut d,
            &names(&["LAX"]),
            &kb,
            &map,
            &constraints(),
            &ImportOptions::default(),
        )
        .unwrap();
        let e = &out.audit[0];
        assert_eq!(e.accepted.as_deref(), Some("airport"));
        assert_eq!(
            e.rejected,
            [Rejection {
                entity: "song".into(),
                witness: "o0".into()
            }]
        );
        assert!(out.external.contains(&ABoxAxiom::role("hasLat", "LAX", "38.94")));
        assert!(out.closure.contains(&"hasLat(LAX,38.94)".parse().unwrap()));
        assert!(out.introduced_names.contains("hasLat"));
        let checker = Reasoner::with_constraints(d.tbox(), &constraints());
        assert!(d
            .lsos
            .iter()
            .all(|o| checker.is_consistent(o.abox.iter().chain(&out.external))));
    }

    #[test]
    fn without_constraints_first_match_wins() {
        let mut d = domain();
        let kb = FileKb::parse(KB, "kb").unwrap();
        let map = parse_mapping(MAP, "m").unwrap();
        let out = import_external(&mut d, &names(&["LAX"]), &kb, &map, &[], &ImportOptions::default()).unwrap();
        assert_eq!(out.audit[0].accepted.as_deref(), Some("song"));
        assert_eq!(out.external, [ABoxAxiom::class("Song", "LAX")]);
    }

    #[test]
    fn empty_roots_leave_closure_unchanged() {
        let mut d = domain();
        let before = d.domain_closure().clone();
        let kb = FileKb::parse(KB, "kb").unwrap();
        let out = import_external(
            &mut d,
            &BTreeSet::new(),
            &kb,
            &VocabularyMapping::default(),
            &[],
            &ImportOptions::default(),
        )
        .unwrap();
        assert!(out.external.is_empty() && out.audit.is_empty());
        assert_eq!(out.closure, before);
    }

    #[test]
    fn gating_never_imports_more() {
        let kb = FileKb::parse(KB, "kb").unwrap();
        let map = parse_mapping(MAP, "m").unwrap();
        let mut a = domain();
        let gated = import_external(
            &mut a,
            &names(&["d0"]),
            &kb,
            &map,
            &constraints(),
            &ImportOptions::default(),
        )
        .unwrap();
        let mut b = domain();
        let all = all_individuals(&b);
        let full = import_external(&mut b, &all, &kb, &map, &constraints(), &ImportOptions::default()).unwrap();
        assert!(gated.external.len() <= full.external.len());
        assert_eq!(
            full.audit.iter().filter(|e| e.outcome() == "no-match").count(),
            all.len() - 1
        );
    }

    #[test]
    fn sampled_check_is_flagged() {
        let mut d = domain();
        let kb = FileKb::parse(KB, "kb").unwrap();
        let map = parse_mapping(MAP, "m").unwrap();
        let opts = ImportOptions {
            consistency_sample: Some(1),
            seed: 3,
        };
        let out = import_external(&mut d, &names(&["LAX"]), &kb, &map, &constraints(), &opts).unwrap();
        assert!(out.approximate);
        assert_eq!(out.audit[0].accepted.as_deref(), Some("airport"));
    }

    struct Broken;
    impl KbAdapter for Broken {
        fn lookup_by_name(&self, name: &str) -> crate::Result<Vec<super::super::KbEntity>> {
            if name == "b" {
                Err(Error::KbTransport("down".into()))
            } else {
                Ok(Vec::new())
            }
        }
        fn describe(&self, _: &str) -> crate::Result<super::super::KbEntity> {
            Err(Error::KbTransport("down".into()))
        }
    }

    #[test]
    fn adapter_failure_keeps_partial_audit() {
        let mut d = domain();
        let err = import_external(
            &mut d,
            &names(&["a", "b", "c"]),
            &Broken,
            &VocabularyMapping::default(),
            &[],
            &ImportOptions::default(),
        )
        .unwrap_err();
        assert_eq!(&*err.individual, "b");
        assert_eq!(err.partial.len(), 1);
        assert!(err.source.is_retryable());
    }
}
