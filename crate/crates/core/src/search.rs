//! Core context search over synchronized-entailment clusters.
//!
//! Entailments with equal domain-membership signatures are interchangeable in
//! any context, so the search walks sets of clusters instead of sets of
//! entailments. Each visited cluster set is evaluated once through a
//! representative context; every other entailment-level context over the same
//! clusters inherits that result.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::entailment::Entailment;
use crate::error::{Error, Result};
use crate::evidence::{Evidence, EvidenceParams, EvidenceResult, EvidenceSpace, Reason};

/// Partition of the candidate universe by domain-membership signature.
#[derive(Clone, Debug)]
pub struct SyncClusters {
    universe: Vec<Entailment>,
    /// Member indices into `universe`, ascending; the first is the
    /// representative. Clusters are ordered by representative.
    members: Vec<Vec<usize>>,
    signatures: Vec<FixedBitSet>,
    cluster_of: Vec<usize>,
    domains: usize,
}

impl SyncClusters {
    /// Clusters `universe` by membership in each of `closures`.
    pub fn new(universe: impl IntoIterator<Item = Entailment>, closures: &[BTreeSet<Entailment>]) -> Self {
        let universe: Vec<Entailment> = universe.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut by_sig: HashMap<FixedBitSet, usize> = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut signatures = Vec::new();
        let mut cluster_of = Vec::with_capacity(universe.len());
        // Ascending universe order makes cluster ids follow representatives.
        for (i, g) in universe.iter().enumerate() {
            let mut sig = FixedBitSet::with_capacity(closures.len());
            for (d, c) in closures.iter().enumerate() {
                if c.contains(g) {
                    sig.insert(d);
                }
            }
            let id = *by_sig.entry(sig.clone()).or_insert_with(|| {
                members.push(Vec::new());
                signatures.push(sig);
                members.len() - 1
            });
            members[id].push(i);
            cluster_of.push(id);
        }
        SyncClusters {
            universe,
            members,
            signatures,
            cluster_of,
            domains: closures.len(),
        }
    }

    /// Clusters the candidate universe of `space`.
    pub fn from_space(space: &EvidenceSpace) -> Self {
        SyncClusters::new(space.universe(), &space.closures)
    }

    pub fn universe(&self) -> &[Entailment] {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn domain_count(&self) -> usize {
        self.domains
    }

    pub fn members(&self, cluster: usize) -> impl ExactSizeIterator<Item = &Entailment> + '_ {
        self.members[cluster].iter().map(|&i| &self.universe[i])
    }

    pub fn representative(&self, cluster: usize) -> &Entailment {
        &self.universe[self.members[cluster][0]]
    }

    /// Domains entailing every member of the cluster.
    pub fn signature(&self, cluster: usize) -> &FixedBitSet {
        &self.signatures[cluster]
    }

    pub fn cluster_of(&self, g: &Entailment) -> Option<usize> {
        self.universe.binary_search(g).ok().map(|i| self.cluster_of[i])
    }

    /// Whether `a` and `b` hold in exactly the same domains.
    pub fn synchronized(&self, a: &Entailment, b: &Entailment) -> bool {
        match (self.cluster_of(a), self.cluster_of(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    /// The context evaluated for a cluster set: the representatives, or the
    /// first two members of a lone cluster.
    pub fn representative_context(&self, clusters: &[usize]) -> Vec<Entailment> {
        let mut out: Vec<Entailment> = if let [c] = clusters {
            self.members(*c).take(2).cloned().collect()
        } else {
            clusters.iter().map(|&c| self.representative(c).clone()).collect()
        };
        out.sort();
        out
    }

    /// Number of entailment-level contexts of each size `0..=max_dim` whose
    /// clusters are exactly `clusters`, and which have at least two members.
    pub fn expansion_counts(&self, clusters: &[usize], max_dim: usize) -> Vec<u128> {
        // Product over clusters of ((1 + t)^m - 1), truncated at max_dim.
        let mut poly = vec![0u128; max_dim + 1];
        poly[0] = 1;
        for &c in clusters {
            let m = self.members[c].len();
            let mut factor = vec![0u128; max_dim + 1];
            let mut binom: u128 = 1;
            for (k, f) in factor.iter_mut().enumerate().skip(1) {
                if k > m {
                    break;
                }
                binom = binom * (m - k + 1) as u128 / k as u128;
                *f = binom;
            }
            let mut next = vec![0u128; max_dim + 1];
            for (i, a) in poly.iter().enumerate().filter(|(_, a)| **a != 0) {
                for (j, b) in factor.iter().enumerate().filter(|(_, b)| **b != 0) {
                    if i + j <= max_dim {
                        next[i + j] += a * b;
                    }
                }
            }
            poly = next;
        }
        poly[0] = 0;
        if let Some(one) = poly.get_mut(1) {
            *one = 0;
        }
        poly
    }

    /// Every entailment-level context with exactly these clusters and
    /// `2..=max_dim` members, each sorted, in lexicographic order of member
    /// choices.
    pub fn expand(&self, clusters: &[usize], max_dim: usize) -> Vec<Vec<Entailment>> {
        fn rec(
            s: &SyncClusters,
            clusters: &[usize],
            budget: usize,
            cur: &mut Vec<Entailment>,
            out: &mut Vec<Vec<Entailment>>,
        ) {
            let Some((&c, rest)) = clusters.split_first() else {
                if cur.len() >= 2 {
                    let mut v = cur.clone();
                    v.sort();
                    out.push(v);
                }
                return;
            };
            let m: Vec<&Entailment> = s.members(c).collect();
            // Non-empty subsets of the cluster, smallest first.
            let room = budget.saturating_sub(cur.len() + rest.len());
            for k in 1..=m.len().min(room) {
                for combo in combinations(m.len(), k) {
                    let before = cur.len();
                    cur.extend(combo.iter().map(|&i| m[i].clone()));
                    rec(s, rest, budget, cur, out);
                    cur.truncate(before);
                }
            }
        }
        let mut out = Vec::new();
        rec(self, clusters, max_dim, &mut Vec::new(), &mut out);
        out
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Stop extending a context that is not significant or whose correlation
/// could not be computed; extensions only shrink its evidence domains.
pub fn early_stop(result: &EvidenceResult, alpha: f64) -> bool {
    result.rho > alpha
        || matches!(
            result.reason,
            Some(Reason::InsufficientSamples | Reason::ZeroVariance | Reason::NoEvidenceDomains)
        )
}

/// Whether adding `g` to `x` leaves the result unchanged because a member of
/// `x` is synchronized with `g`.
pub fn fast_extend(x: &[Entailment], g: &Entailment, clusters: &SyncClusters) -> bool {
    x.iter().any(|g0| clusters.synchronized(g0, g))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    pub max_dim: usize,
    pub params: EvidenceParams,
    /// Disable only to certify that cluster enumeration is lossless.
    pub early_stop: bool,
    /// Also emit visited contexts that are not valid evidence.
    pub emit_invalid: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_dim: 4,
            params: EvidenceParams::default(),
            early_stop: true,
            emit_invalid: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "max_dim must be at least 2, got {}",
                self.max_dim
            )));
        }
        self.params.validate()
    }
}

/// One evaluated cluster set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextHit {
    pub clusters: Vec<usize>,
    /// Result of the representative context.
    pub result: EvidenceResult,
    /// Entailment-level contexts sharing this result, by size.
    pub expansions: Vec<u128>,
}

impl ContextHit {
    pub fn expansion_total(&self) -> u128 {
        self.expansions.iter().sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Cluster sets evaluated.
    pub visited: u64,
    /// Visited cluster sets not extended because of early stopping.
    pub early_stopped: u64,
    /// Entailment-level contexts that inherited a result.
    pub fast_extended: u128,
    /// Valid entailment-level contexts by size, index 0 unused.
    pub valid_by_dim: Vec<u128>,
}

impl SearchStats {
    fn merge(&mut self, other: &SearchStats) {
        self.visited += other.visited;
        self.early_stopped += other.early_stopped;
        self.fast_extended += other.fast_extended;
        if self.valid_by_dim.len() < other.valid_by_dim.len() {
            self.valid_by_dim.resize(other.valid_by_dim.len(), 0);
        }
        for (a, b) in self.valid_by_dim.iter_mut().zip(&other.valid_by_dim) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub hits: Vec<ContextHit>,
    pub stats: SearchStats,
}

impl SearchOutcome {
    /// Every emitted entailment-level context with its inherited result.
    pub fn expanded(&self, clusters: &SyncClusters, max_dim: usize) -> BTreeMap<Vec<Entailment>, EvidenceResult> {
        let mut out = BTreeMap::new();
        for hit in &self.hits {
            for ctx in clusters.expand(&hit.clusters, max_dim) {
                let mut r = hit.result.clone();
                r.evidence = Evidence::Context(ctx.clone());
                out.insert(ctx, r);
            }
        }
        out
    }
}

struct Walker<'a> {
    space: &'a EvidenceSpace,
    clusters: &'a SyncClusters,
    cfg: &'a SearchConfig,
    hits: Vec<ContextHit>,
    stats: SearchStats,
}

impl Walker<'_> {
    fn evaluate(&mut self, k: &[usize], mask: &FixedBitSet) -> EvidenceResult {
        let ctx = self.clusters.representative_context(k);
        let result = self.space.evaluate_mask(Evidence::Context(ctx), mask, &self.cfg.params);
        let expansions = self.clusters.expansion_counts(k, self.cfg.max_dim);
        let total: u128 = expansions.iter().sum();
        self.stats.visited += 1;
        self.stats.fast_extended += total.saturating_sub(1);
        if result.valid {
            for (a, b) in self.stats.valid_by_dim.iter_mut().zip(&expansions) {
                *a += b;
            }
        }
        if result.valid || self.cfg.emit_invalid {
            self.hits.push(ContextHit {
                clusters: k.to_vec(),
                result: result.clone(),
                expansions,
            });
        }
        result
    }

    fn extend(&mut self, k: &mut Vec<usize>, mask: &FixedBitSet) {
        let last = *k.last().expect("non-empty cluster set");
        for c in last + 1..self.clusters.len() {
            let mut next = mask.clone();
            next.intersect_with(self.clusters.signature(c));
            assert!(next.is_subset(mask), "evidence domains grew under extension");
            k.push(c);
            let r = self.evaluate(k, &next);
            let stop = self.cfg.early_stop && early_stop(&r, self.cfg.params.alpha);
            if stop {
                self.stats.early_stopped += 1;
            } else if k.len() < self.cfg.max_dim {
                self.extend(k, &next);
            }
            k.pop();
        }
    }

    fn root(&mut self, c: usize) {
        let mask = self.clusters.signature(c).clone();
        if self.clusters.members[c].len() >= 2 {
            // Pairs inside one cluster are seeds; they never block the
            // cross-cluster seeds below.
            self.evaluate(&[c], &mask);
        }
        self.extend(&mut vec![c], &mask);
    }
}

/// Depth-first search over cluster sets in canonical order. Every set of at
/// most two clusters is visited; larger sets are reached only through
/// prefixes that did not stop early. Results are in canonical order.
pub fn core_context_search(
    space: &EvidenceSpace,
    clusters: &SyncClusters,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    if clusters.domain_count() != space.domain_count() {
        return Err(Error::InvalidParameter(format!(
            "clusters cover {} domains but the evidence space has {}",
            clusters.domain_count(),
            space.domain_count()
        )));
    }
    let per_root: Vec<(Vec<ContextHit>, SearchStats)> = (0..clusters.len())
        .into_par_iter()
        .map(|c| {
            let mut w = Walker {
                space,
                clusters,
                cfg,
                hits: Vec::new(),
                stats: SearchStats {
                    valid_by_dim: vec![0; cfg.max_dim + 1],
                    ..SearchStats::default()
                },
            };
            w.root(c);
            (w.hits, w.stats)
        })
        .collect();
    let mut hits = Vec::new();
    let mut stats = SearchStats {
        valid_by_dim: vec![0; cfg.max_dim + 1],
        ..SearchStats::default()
    };
    for (h, s) in per_root {
        hits.extend(h);
        stats.merge(&s);
    }
    Ok(SearchOutcome { hits, stats })
}
