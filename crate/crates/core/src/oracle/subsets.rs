//! Exhaustive enumeration of every candidate subset.

use std::collections::BTreeSet;

use crate::entailment::Entailment;

/// All `kappa`-element subsets of the entailments occurring in `samples`
/// (minus `target`) whose co-occurrence plus co-absence rate with the target
/// reaches `tau`, each with its two rates. Samples are
/// `(closure, target holds)` pairs. Exponential in the universe size.
pub fn effective_subsets_brute(
    samples: &[(BTreeSet<Entailment>, bool)],
    target: &Entailment,
    kappa: usize,
    tau: f64,
) -> Vec<(Vec<Entailment>, f64, f64)> {
    let universe: Vec<Entailment> = samples
        .iter()
        .flat_map(|(s, _)| s.iter())
        .filter(|g| *g != target)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(universe.len() <= 20, "universe too large for enumeration");
    let n = samples.len() as f64;
    let mut out = Vec::new();
    for mask in 0u32..(1 << universe.len()) {
        if mask.count_ones() as usize != kappa {
            continue;
        }
        let members: Vec<Entailment> = (0..universe.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| universe[i].clone())
            .collect();
        let mut both = 0;
        let mut neither = 0;
        for (s, t) in samples {
            if *t && members.iter().all(|g| s.contains(g)) {
                both += 1;
            }
            if !*t && members.iter().all(|g| !s.contains(g)) {
                neither += 1;
            }
        }
        let (r_e, r_i) = (both as f64 / n, neither as f64 / n);
        if r_e + r_i >= tau - 1e-12 {
            out.push((members, r_e, r_i));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Entailments contained in at least `sigma` of the samples, by direct count.
pub fn frequent_brute(samples: &[(BTreeSet<Entailment>, bool)], sigma: f64) -> BTreeSet<Entailment> {
    let all: BTreeSet<&Entailment> = samples.iter().flat_map(|(s, _)| s.iter()).collect();
    all.into_iter()
        .filter(|g| {
            let k = samples.iter().filter(|(s, _)| s.contains(*g)).count();
            k as f64 / samples.len() as f64 >= sigma
        })
        .cloned()
        .collect()
}
