use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use tlexplain_core::evidence::{correlative_reason, Evidence, EvidenceParams, EvidenceSpace};
use tlexplain_core::oracle::{exhaustive_contexts, synchronized_pairwise};
use tlexplain_core::search::{combinations, core_context_search, early_stop, SearchConfig, SyncClusters};
use tlexplain_core::transfer::{FtiMatrix, TransferRecord};
use tlexplain_core::Entailment;

fn atom(i: usize) -> Entailment {
    format!("C{i}(x)").parse().unwrap()
}

/// Closures over a small atom pool, biased towards shared signatures so
/// clusters with several members are common.
fn fixture() -> impl Strategy<Value = EvidenceSpace> {
    (3usize..=6, 2usize..=10).prop_flat_map(|(domains, atoms)| {
        let patterns = prop::collection::vec(prop::collection::vec(any::<bool>(), domains), 1..=4);
        let pick = prop::collection::vec(0usize..4, atoms);
        let ftis = prop::collection::vec(-40i32..=40, domains * domains);
        (Just(domains), patterns, pick, ftis).prop_map(|(domains, patterns, pick, ftis)| {
            let mut closures = vec![BTreeSet::new(); domains];
            for (i, p) in pick.iter().enumerate() {
                let sig = &patterns[p % patterns.len()];
                for (d, c) in closures.iter_mut().enumerate() {
                    if sig[d] {
                        c.insert(atom(i));
                    }
                }
            }
            let ids: Vec<String> = (0..domains).map(|d| format!("D{d}")).collect();
            let mut recs = Vec::new();
            for a in 0..domains {
                for b in 0..domains {
                    if a != b {
                        let f = ftis[a * domains + b] as f64 / 100.0;
                        recs.push(TransferRecord::new(&ids[a], &ids[b], (0.5, 0.5 - f, 0.5 + f), 1.0, 1.0).unwrap());
                    }
                }
            }
            let m = FtiMatrix::from_records(recs).unwrap();
            EvidenceSpace::new(ids, closures, BTreeSet::new(), &m)
        })
    })
}

fn lenient() -> EvidenceParams {
    // A loose alpha keeps early stopping from pruning everything on tiny
    // fixtures.
    EvidenceParams {
        epsilon: 0.1,
        alpha: 0.5,
        n_min: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pruned_search_without_early_stop_is_lossless(space in fixture(), max_dim in 2usize..=4) {
        let clusters = SyncClusters::from_space(&space);
        let cfg = SearchConfig { max_dim, params: lenient(), early_stop: false, emit_invalid: true };
        let out = core_context_search(&space, &clusters, &cfg).unwrap();
        let pruned = out.expanded(&clusters, max_dim);
        let exhaustive = exhaustive_contexts(&space, clusters.universe(), max_dim, &cfg.params);
        prop_assert_eq!(pruned, exhaustive);
    }

    #[test]
    fn clusters_match_pairwise_definition(space in fixture()) {
        let clusters = SyncClusters::from_space(&space);
        let u = clusters.universe();
        for a in u {
            for b in u {
                prop_assert_eq!(clusters.synchronized(a, b), synchronized_pairwise(&space.closures, a, b));
            }
        }
        for c in 0..clusters.len() {
            let rep = clusters.representative(c);
            prop_assert!(clusters.members(c).all(|g| rep <= g));
        }
    }

    #[test]
    fn clusters_only_split_when_domains_are_added(space in fixture()) {
        let all = SyncClusters::from_space(&space);
        let fewer = SyncClusters::new(all.universe().to_vec(), &space.closures[..space.closures.len() - 1]);
        for a in all.universe() {
            for b in all.universe() {
                if all.synchronized(a, b) {
                    prop_assert!(fewer.synchronized(a, b));
                }
            }
        }
    }

    #[test]
    fn synchronized_extension_inherits_result(space in fixture(), seed in any::<u64>()) {
        let clusters = SyncClusters::from_space(&space);
        let u = clusters.universe();
        let params = EvidenceParams::default();
        prop_assume!(!u.is_empty());
        let base = &u[seed as usize % u.len()];
        let c = clusters.cluster_of(base).unwrap();
        let others: Vec<&Entailment> = clusters.members(c).filter(|g| *g != base).collect();
        prop_assume!(!others.is_empty());
        let partner = &u[(seed >> 8) as usize % u.len()];
        prop_assume!(partner != base);
        let g = others[(seed >> 16) as usize % others.len()];
        prop_assume!(g != partner);
        let x = Evidence::context([base.clone(), partner.clone()]).unwrap();
        let xg = Evidence::context([base.clone(), partner.clone(), g.clone()]).unwrap();
        prop_assert!(tlexplain_core::search::fast_extend(x.entailments(), g, &clusters));
        let r = correlative_reason(&space, &x, &params);
        let rg = correlative_reason(&space, &xg, &params);
        prop_assert_eq!(r.gamma.to_bits(), rg.gamma.to_bits());
        prop_assert_eq!(r.rho.to_bits(), rg.rho.to_bits());
        prop_assert_eq!((r.n, r.valid, r.reason), (rg.n, rg.valid, rg.reason));
    }

    #[test]
    fn early_stop_never_skips_a_significant_chain(space in fixture(), max_dim in 3usize..=4) {
        let clusters = SyncClusters::from_space(&space);
        let params = lenient();
        let cfg = SearchConfig { max_dim, params, early_stop: true, emit_invalid: true };
        let out = core_context_search(&space, &clusters, &cfg).unwrap();
        let visited: Vec<Vec<usize>> = out.hits.iter().map(|h| h.clusters.clone()).collect();
        let seen: HashSet<Vec<usize>> = visited.iter().cloned().collect();
        prop_assert_eq!(seen.len(), visited.len(), "a cluster set was visited twice");

        let full = SearchConfig { early_stop: false, ..cfg };
        let all = core_context_search(&space, &clusters, &full).unwrap();
        for hit in &all.hits {
            let k = &hit.clusters;
            let reachable = (2..k.len()).all(|j| {
                let prefix = all.hits.iter().find(|h| h.clusters == k[..j]).unwrap();
                !early_stop(&prefix.result, params.alpha)
            });
            if k.len() <= 2 || reachable {
                prop_assert!(seen.contains(k), "skipped {:?}", k);
            }
        }
    }
}

#[test]
fn seed_counts_cover_all_pairs() {
    // Every cluster pair is a seed, and so is every cluster with two members.
    let closures: Vec<BTreeSet<Entailment>> = (0..5)
        .map(|d| (0..5).filter(|i| (i + d) % 3 != 0 || *i == d).map(atom).collect())
        .collect();
    let ids: Vec<String> = (0..5).map(|d| format!("D{d}")).collect();
    let mut recs = Vec::new();
    for a in 0..5 {
        for b in 0..5 {
            if a != b {
                recs.push(TransferRecord::new(&ids[a], &ids[b], (0.5, 0.4, 0.5), 1.0, 1.0).unwrap());
            }
        }
    }
    let space = EvidenceSpace::new(ids, closures, BTreeSet::new(), &FtiMatrix::from_records(recs).unwrap());
    let clusters = SyncClusters::from_space(&space);
    let singletons = (0..clusters.len()).filter(|&c| clusters.members(c).len() >= 2).count();
    let cfg = SearchConfig {
        max_dim: 2,
        emit_invalid: true,
        ..SearchConfig::default()
    };
    let out = core_context_search(&space, &clusters, &cfg).unwrap();
    assert_eq!(
        out.stats.visited as usize,
        combinations(clusters.len(), 2).len() + singletons
    );
}
