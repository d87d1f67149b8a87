use std::collections::{BTreeMap, BTreeSet};

use crate::entailment::Entailment;
use crate::evidence::{Evidence, EvidenceParams, EvidenceResult, EvidenceSpace};

/// Evaluates every subset of `universe` with `2..=max_dim` members by
/// scanning all transfers, without clustering or pruning.
pub fn exhaustive_contexts(
    space: &EvidenceSpace,
    universe: &[Entailment],
    max_dim: usize,
    params: &EvidenceParams,
) -> BTreeMap<Vec<Entailment>, EvidenceResult> {
    let universe: Vec<Entailment> = universe.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let n = universe.len();
    assert!(n < 64, "exhaustive enumeration is limited to small universes");
    let mut out = BTreeMap::new();
    for bits in 0u64..(1u64 << n) {
        let size = bits.count_ones() as usize;
        if size < 2 || size > max_dim {
            continue;
        }
        let ctx: Vec<Entailment> = (0..n)
            .filter(|i| bits >> i & 1 == 1)
            .map(|i| universe[i].clone())
            .collect();
        let mut fe = Vec::new();
        let mut ft = Vec::new();
        for &(a, b, f) in &space.pairs {
            if !ctx.iter().all(|g| space.closures[a].contains(g)) {
                continue;
            }
            fe.push(if ctx.iter().all(|g| space.closures[b].contains(g)) {
                1.0
            } else {
                0.0
            });
            ft.push(f);
        }
        let r = EvidenceResult::from_vectors(Evidence::Context(ctx.clone()), &fe, &ft, params);
        out.insert(ctx, r);
    }
    out
}

/// Whether `a` and `b` belong to exactly the same closures.
pub fn synchronized_pairwise(closures: &[BTreeSet<Entailment>], a: &Entailment, b: &Entailment) -> bool {
    closures.iter().all(|c| c.contains(a) == c.contains(b))
}
