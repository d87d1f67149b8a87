//! Frequent entailments, effective entailment subsets, and the root
//! entailments and individuals they select.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::LearningDomain;
use crate::entailment::{is_fresh, Entailment, Name};
use crate::error::{Error, Result};

pub const DEFAULT_KAPPA_CAP: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MiningParams {
    pub sigma: f64,
    pub kappa: usize,
    pub tau: f64,
    /// Largest accepted `kappa`.
    pub kappa_cap: usize,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams::new(0.99, 2, 0.49)
    }
}

impl MiningParams {
    pub fn new(sigma: f64, kappa: usize, tau: f64) -> Self {
        MiningParams {
            sigma,
            kappa,
            tau,
            kappa_cap: DEFAULT_KAPPA_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.kappa_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.sigma) {
            return Err(Error::InvalidParameter(format!(
                "sigma {} is outside [0, 1]",
                self.sigma
            )));
        }
        if !unit(self.tau) {
            return Err(Error::InvalidParameter(format!("tau {} is outside [0, 1]", self.tau)));
        }
        if self.kappa == 0 {
            return Err(Error::InvalidParameter("kappa must be at least 1".into()));
        }
        if self.kappa > self.kappa_cap {
            return Err(Error::InvalidParameter(format!(
                "kappa {} exceeds the configured cap {}",
                self.kappa, self.kappa_cap
            )));
        }
        Ok(())
    }

    /// The five settings of the parameter study, loosest first.
    pub fn regimes() -> [(&'static str, MiningParams); 5] {
        [
            ("P1", MiningParams::new(0.90, 1, 0.40)),
            ("P2", MiningParams::new(0.93, 1, 0.43)),
            ("P3", MiningParams::new(0.96, 1, 0.46)),
            ("P4", MiningParams::new(0.99, 1, 0.49)),
            ("P5", MiningParams::new(0.99, 2, 0.49)),
        ]
    }
}

/// Per-sample membership bitsets over the candidate universe.
///
/// Rows are samples; `support[i]` has bit `o` set iff sample `o` contains
/// `universe[i]`, and `target` marks the samples containing the target.
#[derive(Clone, Debug)]
pub struct SupportTable {
    pub universe: Vec<Entailment>,
    support: Vec<FixedBitSet>,
    target: FixedBitSet,
    samples: usize,
}

impl SupportTable {
    /// `closures[o]` are the entailments of sample `o`; entailments in
    /// `exclude` never become candidates.
    pub fn new<'a>(
        closures: impl IntoIterator<Item = (&'a BTreeSet<Entailment>, bool)>,
        exclude: &BTreeSet<Entailment>,
    ) -> Self {
        let rows: Vec<_> = closures.into_iter().collect();
        let n = rows.len();
        let mut index: BTreeMap<&Entailment, Vec<usize>> = BTreeMap::new();
        let mut target = FixedBitSet::with_capacity(n);
        for (o, (set, t)) in rows.iter().enumerate() {
            if *t {
                target.insert(o);
            }
            for g in set.iter().filter(|g| !exclude.contains(*g)) {
                index.entry(g).or_default().push(o);
            }
        }
        let mut universe = Vec::with_capacity(index.len());
        let mut support = Vec::with_capacity(index.len());
        for (g, os) in index {
            let mut bits = FixedBitSet::with_capacity(n);
            bits.extend(os);
            universe.push(g.clone());
            support.push(bits);
        }
        SupportTable {
            universe,
            support,
            target,
            samples: n,
        }
    }

    /// Consistent samples of `d`, with every form of its target excluded.
    pub fn from_domain(d: &LearningDomain) -> Result<Self> {
        let rows: Vec<_> = d
            .closures()
            .iter()
            .filter(|c| !c.is_inconsistent())
            .map(|c| (c.atoms(), c.entails(&d.target)))
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyDomain(d.id.clone()));
        }
        Ok(SupportTable::new(rows, &d.canonical_target_set()))
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.support[i].count_ones(..) as f64 / self.samples as f64
    }

    pub fn frequent(&self, sigma: f64) -> BTreeSet<Entailment> {
        (0..self.universe.len())
            .filter(|&i| self.frequency(i) >= sigma)
            .map(|i| self.universe[i].clone())
            .collect()
    }

    /// `(r_e, r_i)` of the candidate indices `members` together with the target.
    pub fn scores(&self, members: &[usize]) -> (f64, f64) {
        let mut all = self.target.clone();
        let mut any = self.target.clone();
        for &i in members {
            all.intersect_with(&self.support[i]);
            any.union_with(&self.support[i]);
        }
        let n = self.samples as f64;
        let co = all.count_ones(..) as f64;
        let none = (self.samples - any.count_ones(..)) as f64;
        (co / n, none / n)
    }

    /// Every `kappa`-element subset with `r_e + r_i >= tau`.
    ///
    /// Adding a member can only shrink both the co-occurrence and the
    /// co-absence counts, so a level-wise search that keeps only qualifying
    /// subsets loses nothing.
    pub fn effective(&self, kappa: usize, tau: f64) -> Vec<EffectiveSubset> {
        if kappa == 0 || kappa > self.universe.len() {
            return Vec::new();
        }
        let passes = |s: f64| s >= tau || (s - tau).abs() < 1e-12;
        let mut level: Vec<(Vec<usize>, (f64, f64))> = (0..self.universe.len())
            .into_par_iter()
            .filter_map(|i| {
                let sc = self.scores(&[i]);
                passes(sc.0 + sc.1).then(|| (vec![i], sc))
            })
            .collect();
        for _ in 1..kappa {
            let alive: HashSet<&[usize]> = level.iter().map(|(s, _)| s.as_slice()).collect();
            let candidates = join(&level);
            let next: Vec<_> = candidates
                .into_par_iter()
                .filter(|c| {
                    (0..c.len()).all(|skip| {
                        let sub: Vec<usize> = c
                            .iter()
                            .enumerate()
                            .filter(|&(k, _)| k != skip)
                            .map(|(_, &v)| v)
                            .collect();
                        alive.contains(sub.as_slice())
                    })
                })
                .filter_map(|c| {
                    let sc = self.scores(&c);
                    passes(sc.0 + sc.1).then_some((c, sc))
                })
                .collect();
            level = next;
            level.sort_by(|a, b| a.0.cmp(&b.0));
        }
        level
            .into_iter()
            .map(|(idx, (r_e, r_i))| EffectiveSubset {
                members: idx.iter().map(|&i| self.universe[i].clone()).collect(),
                r_e,
                r_i,
            })
            .collect()
    }
}

// Sorted subsets sharing all but their last element combine into one larger
// candidate.
fn join(level: &[(Vec<usize>, (f64, f64))]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < level.len() {
        let prefix = &level[start].0[..level[start].0.len() - 1];
        let mut end = start + 1;
        while end < level.len() && &level[end].0[..prefix.len()] == prefix {
            end += 1;
        }
        for a in start..end {
            for b in a + 1..end {
                let mut c = level[a].0.clone();
                c.push(*level[b].0.last().unwrap());
                out.push(c);
            }
        }
        start = end;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveSubset {
    pub members: Vec<Entailment>,
    pub r_e: f64,
    pub r_i: f64,
}

impl EffectiveSubset {
    pub fn score(&self) -> f64 {
        self.r_e + self.r_i
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RootSet {
    pub frequent: BTreeSet<Entailment>,
    pub effective_subsets: Vec<EffectiveSubset>,
    pub root_entailments: BTreeSet<Entailment>,
    pub root_individuals: BTreeSet<Name>,
}

impl RootSet {
    pub fn from_parts(frequent: BTreeSet<Entailment>, effective_subsets: Vec<EffectiveSubset>) -> Self {
        let mut roots = frequent.clone();
        for s in &effective_subsets {
            roots.extend(s.members.iter().cloned());
        }
        let mut out = RootSet {
            frequent,
            effective_subsets,
            root_entailments: roots,
            root_individuals: BTreeSet::new(),
        };
        out.root_individuals = root_individuals(&out);
        out
    }

    pub fn class_roots(&self) -> usize {
        self.root_entailments.iter().filter(|g| g.is_class()).count()
    }

    pub fn role_roots(&self) -> usize {
        self.root_entailments.len() - self.class_roots()
    }
}

pub fn frequent_entailments(d: &LearningDomain, sigma: f64) -> Result<BTreeSet<Entailment>> {
    Ok(SupportTable::from_domain(d)?.frequent(sigma))
}

pub fn effective_subsets(d: &LearningDomain, kappa: usize, tau: f64) -> Result<Vec<EffectiveSubset>> {
    if kappa == 0 {
        return Err(Error::InvalidParameter("kappa must be at least 1".into()));
    }
    Ok(SupportTable::from_domain(d)?.effective(kappa, tau))
}

pub fn root_individuals(roots: &RootSet) -> BTreeSet<Name> {
    roots
        .root_entailments
        .iter()
        .flat_map(|g| g.individuals())
        .filter(|i| !is_fresh(i))
        .cloned()
        .collect()
}

pub fn mine_roots(d: &LearningDomain, params: &MiningParams) -> Result<RootSet> {
    params.validate()?;
    let table = SupportTable::from_domain(d)?;
    Ok(RootSet::from_parts(
        table.frequent(params.sigma),
        table.effective(params.kappa, params.tau),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<Entailment> {
        items.iter().map(|s| s.parse().unwrap()).collect()
    }

    fn table(rows: &[(&[&str], bool)]) -> SupportTable {
        let sets: Vec<_> = rows.iter().map(|(s, t)| (set(s), *t)).collect();
        SupportTable::new(sets.iter().map(|(s, t)| (s, *t)), &set(&["T(x)"]))
    }

    #[test]
    fn params_validation() {
        assert!(MiningParams::default().validate().is_ok());
        assert!(MiningParams::new(1.2, 1, 0.4).validate().is_err());
        assert!(MiningParams::new(0.9, 0, 0.4).validate().is_err());
        assert!(MiningParams::new(0.9, 3, 0.4).validate().is_err());
        assert!(MiningParams::new(0.9, 3, 0.4).with_cap(3).validate().is_ok());
    }

    #[test]
    fn frequency_threshold_is_inclusive() {
        let t = table(&[
            (&["A(x)"], false),
            (&["A(x)"], false),
            (&["A(x)"], false),
            (&["B(x)"], false),
        ]);
        assert!(t.frequent(0.7).contains(&"A(x)".parse().unwrap()));
        assert!(t.frequent(0.75).contains(&"A(x)".parse().unwrap()));
        assert!(!t.frequent(0.76).contains(&"A(x)".parse().unwrap()));
        assert_eq!(t.frequent(0.0).len(), 2);
    }

    #[test]
    fn four_sample_scores() {
        // g with target twice, neither once, g alone once.
        let t = table(&[
            (&["G(x)", "T(x)"], true),
            (&["G(x)", "T(x)"], true),
            (&[], false),
            (&["G(x)"], false),
        ]);
        let eff = t.effective(1, 0.75);
        assert_eq!(eff.len(), 1);
        assert_eq!((eff[0].r_e, eff[0].r_i), (0.5, 0.25));
        assert_eq!(eff[0].score(), 0.75);
        assert!(t
            .effective(1, 0.76)
            .iter()
            .all(|e| e.members[0] != "G(x)".parse().unwrap()));
    }

    #[test]
    fn tau_zero_admits_everything() {
        let t = table(&[(&["A(x)", "B(x)"], true), (&["C(x)"], false), (&["B(x)"], false)]);
        assert_eq!(t.effective(1, 0.0).len(), 3);
        assert_eq!(t.effective(2, 0.0).len(), 3);
        assert_eq!(t.effective(3, 0.0).len(), 1);
        assert!(t.effective(4, 0.0).is_empty());
    }

    #[test]
    fn root_individuals_skip_fresh_names() {
        let r = RootSet::from_parts(set(&["hasOri(d,LAX)", "DelayedDep(d2)", "_N1(d)"]), Vec::new());
        let names: Vec<&str> = r.root_individuals.iter().map(|n| &**n).collect();
        assert_eq!(names, ["LAX", "d", "d2"]);
        assert!(root_individuals(&RootSet::default()).is_empty());
        let only_class = RootSet::from_parts(set(&["DelayedDep(d2)"]), Vec::new());
        assert_eq!(only_class.root_individuals.len(), 1);
    }
}
