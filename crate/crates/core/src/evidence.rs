//! Evidence embedding and correlation with transferability.

use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::domain::LearningDomain;
use crate::entailment::{is_fresh, Entailment};
use crate::error::{Error, Result};
use crate::stats;
use crate::transfer::FtiMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    New,
    Obs,
    Inv,
}

impl FactorKind {
    pub const ALL: [FactorKind; 3] = [FactorKind::New, FactorKind::Obs, FactorKind::Inv];

    pub fn name(self) -> &'static str {
        match self {
            FactorKind::New => "new",
            FactorKind::Obs => "obsolete",
            FactorKind::Inv => "invariant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Evidence {
    GeneralFactor(FactorKind),
    Narrator(Entailment),
    /// Sorted, without duplicates, at least two members.
    Context(Vec<Entailment>),
}

impl Evidence {
    pub fn context(gs: impl IntoIterator<Item = Entailment>) -> Result<Self> {
        let set: BTreeSet<Entailment> = gs.into_iter().collect();
        if set.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a core context needs at least two entailments, got {}",
                set.len()
            )));
        }
        Ok(Evidence::Context(set.into_iter().collect()))
    }

    /// The entailments whose co-existence is embedded; empty for general
    /// factors.
    pub fn entailments(&self) -> &[Entailment] {
        match self {
            Evidence::GeneralFactor(_) => &[],
            Evidence::Narrator(g) => std::slice::from_ref(g),
            Evidence::Context(gs) => gs,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Evidence::GeneralFactor(_) => "general",
            Evidence::Narrator(_) => "narrator",
            Evidence::Context(_) => "context",
        }
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evidence::GeneralFactor(k) => write!(f, "d_{}", k.name()),
            Evidence::Narrator(g) => write!(f, "{g}"),
            Evidence::Context(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    write!(f, "{g}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for Evidence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChangeRates {
    pub new: f64,
    pub obs: f64,
    pub inv: f64,
}

impl ChangeRates {
    pub fn get(&self, kind: FactorKind) -> f64 {
        match kind {
            FactorKind::New => self.new,
            FactorKind::Obs => self.obs,
            FactorKind::Inv => self.inv,
        }
    }

    /// Rates from set sizes: `new / |gb|`, `obsolete / |ga|` and
    /// `invariant / union`.
    pub fn from_counts(
        ga: usize,
        gb: usize,
        new: usize,
        obsolete: usize,
        invariant: usize,
        union: usize,
    ) -> Result<Self> {
        if ga == 0 {
            return Err(Error::EmptyClosure("source"));
        }
        if gb == 0 {
            return Err(Error::EmptyClosure("target"));
        }
        Ok(ChangeRates {
            new: new as f64 / gb as f64,
            obs: obsolete as f64 / ga as f64,
            inv: invariant as f64 / union as f64,
        })
    }
}

/// New, obsolete and invariant rates from source closure `ga` to target
/// closure `gb`.
pub fn change_rates(ga: &BTreeSet<Entailment>, gb: &BTreeSet<Entailment>) -> Result<ChangeRates> {
    let shared = ga.intersection(gb).count();
    ChangeRates::from_counts(
        ga.len(),
        gb.len(),
        gb.len() - shared,
        ga.len() - shared,
        shared,
        ga.len() + gb.len() - shared,
    )
}

/// Directed co-existence: 1 iff `gs` holds in the target as well. `gs` must
/// hold in the source.
pub fn dec(gs: &[Entailment], ga: &BTreeSet<Entailment>, gb: &BTreeSet<Entailment>) -> Result<u8> {
    if !gs.iter().all(|g| ga.contains(g)) {
        return Err(Error::EvidenceNotInSource);
    }
    Ok(gs.iter().all(|g| gb.contains(g)) as u8)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvidenceParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub n_min: usize,
}

impl Default for EvidenceParams {
    fn default() -> Self {
        EvidenceParams {
            epsilon: 0.1,
            alpha: 0.05,
            n_min: 3,
        }
    }
}

impl EvidenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) || !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} and alpha {} must lie in [0, 1]",
                self.epsilon, self.alpha
            )));
        }
        if self.n_min < 3 {
            return Err(Error::InvalidParameter(
                "at least 3 transfers are needed for the t-test".into(),
            ));
        }
        Ok(())
    }
}

/// Why a result is not valid evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    /// No source domain entails the evidence.
    NoEvidenceDomains,
    /// Fewer usable transfers than the minimum.
    InsufficientSamples,
    /// The embedding or the index is constant over the usable transfers.
    ZeroVariance,
    /// `|gamma| < epsilon`.
    WeakCorrelation,
    /// `rho > alpha`.
    NotSignificant,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::NoEvidenceDomains => "no-evidence-domains",
            Reason::InsufficientSamples => "insufficient-samples",
            Reason::ZeroVariance => "zero-variance",
            Reason::WeakCorrelation => "weak-correlation",
            Reason::NotSignificant => "not-significant",
        }
    }

    /// The correlation could not be computed at all.
    pub fn is_degenerate(self) -> bool {
        matches!(
            self,
            Reason::NoEvidenceDomains | Reason::InsufficientSamples | Reason::ZeroVariance
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvidenceResult {
    pub evidence: Evidence,
    pub gamma: f64,
    pub rho: f64,
    pub n: usize,
    pub valid: bool,
    pub reason: Option<Reason>,
}

impl EvidenceResult {
    /// Evaluates the embedding against the indices. Degenerate inputs get
    /// `gamma = 0` and `rho = 1`.
    pub fn from_vectors(evidence: Evidence, fe: &[f64], ft: &[f64], params: &EvidenceParams) -> Self {
        let n = fe.len();
        debug_assert_eq!(n, ft.len());
        let degenerate = |reason| EvidenceResult {
            evidence: evidence.clone(),
            gamma: 0.0,
            rho: 1.0,
            n,
            valid: false,
            reason: Some(reason),
        };
        if n == 0 && !matches!(evidence, Evidence::GeneralFactor(_)) {
            return degenerate(Reason::NoEvidenceDomains);
        }
        if n < params.n_min.max(3) {
            return degenerate(Reason::InsufficientSamples);
        }
        let Ok(gamma) = stats::pearson(fe, ft) else {
            return degenerate(Reason::ZeroVariance);
        };
        let rho = stats::p_value(gamma, n).unwrap_or(1.0);
        let reason = if gamma.abs() < params.epsilon {
            Some(Reason::WeakCorrelation)
        } else if rho > params.alpha {
            Some(Reason::NotSignificant)
        } else {
            None
        };
        EvidenceResult {
            evidence,
            gamma,
            rho,
            n,
            valid: reason.is_none(),
            reason,
        }
    }
}

/// Domain closures, the transfers measured between them, and the candidate
/// universe for narrators and contexts.
#[derive(Clone, Debug)]
pub struct EvidenceSpace {
    pub ids: Vec<String>,
    pub closures: Vec<BTreeSet<Entailment>>,
    /// `(source, target, fti)` for every measured ordered pair, in source
    /// then target order.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Every domain's target entailment in all its forms.
    pub targets: BTreeSet<Entailment>,
}

pub type DomainMask = FixedBitSet;

impl EvidenceSpace {
    pub fn new(
        ids: Vec<String>,
        closures: Vec<BTreeSet<Entailment>>,
        targets: BTreeSet<Entailment>,
        fti: &FtiMatrix,
    ) -> Self {
        let mut pairs = Vec::new();
        for a in 0..ids.len() {
            for b in 0..ids.len() {
                if a == b {
                    continue;
                }
                match fti.get(&ids[a], &ids[b]) {
                    Some(r) => pairs.push((a, b, r.fti)),
                    None => log::debug!("no transfer record {} -> {}", ids[a], ids[b]),
                }
            }
        }
        EvidenceSpace {
            ids,
            closures,
            pairs,
            targets,
        }
    }

    /// Domain closures after external import, in the given order.
    pub fn from_domains(domains: &[LearningDomain], fti: &FtiMatrix) -> Self {
        let targets = domains.iter().flat_map(|d| d.canonical_target_set()).collect();
        EvidenceSpace::new(
            domains.iter().map(|d| d.id.clone()).collect(),
            domains.iter().map(|d| d.domain_closure().clone()).collect(),
            targets,
            fti,
        )
    }

    pub fn domain_count(&self) -> usize {
        self.ids.len()
    }

    /// Entailments of any closure except targets and atoms over normalization
    /// names.
    pub fn universe(&self) -> BTreeSet<Entailment> {
        self.closures
            .iter()
            .flatten()
            .filter(|g| !self.targets.contains(*g) && !is_fresh(g.predicate()))
            .cloned()
            .collect()
    }

    /// Domains entailing every member of `gs`.
    pub fn evidence_domains(&self, gs: &[Entailment]) -> DomainMask {
        let mut m = FixedBitSet::with_capacity(self.ids.len());
        for (i, c) in self.closures.iter().enumerate() {
            if gs.iter().all(|g| c.contains(g)) {
                m.insert(i);
            }
        }
        m
    }

    /// Correlation of the co-existence embedding given the evidence domains:
    /// the same computation as [`correlative_reason`] for narrators and
    /// contexts, without touching the closures.
    pub fn evaluate_mask(&self, evidence: Evidence, mask: &DomainMask, params: &EvidenceParams) -> EvidenceResult {
        let mut fe = Vec::new();
        let mut ft = Vec::new();
        for &(a, b, f) in &self.pairs {
            if mask.contains(a) {
                fe.push(if mask.contains(b) { 1.0 } else { 0.0 });
                ft.push(f);
            }
        }
        EvidenceResult::from_vectors(evidence, &fe, &ft, params)
    }
}

/// Correlates the evidence's embedding over every measured transfer with
/// the transfers' indices. Narrator and context embeddings skip transfers
/// whose source does not entail the evidence.
pub fn correlative_reason(space: &EvidenceSpace, x: &Evidence, params: &EvidenceParams) -> EvidenceResult {
    let mut fe = Vec::new();
    let mut ft = Vec::new();
    for &(a, b, f) in &space.pairs {
        let (ga, gb) = (&space.closures[a], &space.closures[b]);
        let e = match x {
            Evidence::GeneralFactor(kind) => match change_rates(ga, gb) {
                Ok(r) => r.get(*kind),
                Err(_) => continue,
            },
            _ => match dec(x.entailments(), ga, gb) {
                Ok(v) => v as f64,
                Err(_) => continue,
            },
        };
        fe.push(e);
        ft.push(f);
    }
    EvidenceResult::from_vectors(x.clone(), &fe, &ft, params)
}

/// The three general factors.
pub fn general_factors(space: &EvidenceSpace, params: &EvidenceParams) -> Vec<EvidenceResult> {
    FactorKind::ALL
        .iter()
        .map(|k| correlative_reason(space, &Evidence::GeneralFactor(*k), params))
        .collect()
}

/// Every entailment of the universe as a narrator.
pub fn narrators(space: &EvidenceSpace, params: &EvidenceParams) -> Vec<EvidenceResult> {
    use rayon::prelude::*;
    let universe: Vec<Entailment> = space.universe().into_iter().collect();
    universe
        .into_par_iter()
        .map(|g| {
            let mask = space.evidence_domains(std::slice::from_ref(&g));
            space.evaluate_mask(Evidence::Narrator(g), &mask, params)
        })
        .collect()
}

/// Sorts by `|gamma|` descending, then by evidence.
pub fn sort_results(results: &mut [EvidenceResult]) {
    results.sort_by(|a, b| {
        b.gamma
            .abs()
            .total_cmp(&a.gamma.abs())
            .then_with(|| a.evidence.cmp(&b.evidence))
    });
}
