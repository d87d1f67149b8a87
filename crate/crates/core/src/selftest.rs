//! Built-in checks of every fast path against its brute-force oracle on
//! seeded random instances.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::evidence::{correlative_reason, ChangeRates, Evidence, EvidenceParams, EvidenceSpace, FactorKind};
use crate::fixtures;
use crate::mining::SupportTable;
use crate::ontology::{normalize_tbox, parse_ontology, ABoxAxiom, ConceptExpr, TBoxAxiom};
use crate::oracle;
use crate::reasoner::materialize;
use crate::search::{core_context_search, fast_extend, SearchConfig, SyncClusters};
use crate::stats::{auc, p_value, pearson};
use crate::transfer::{FtiMatrix, TransferRecord};
use crate::Entailment;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SelfCheck {
    fn new(name: &'static str, failure: Option<String>, cases: usize) -> Self {
        match failure {
            None => SelfCheck {
                name,
                passed: true,
                detail: format!("{cases} cases"),
            },
            Some(d) => SelfCheck {
                name,
                passed: false,
                detail: d,
            },
        }
    }
}

/// Runs every check with `cases` random instances each.
pub fn run(seed: u64, cases: usize) -> Vec<SelfCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        SelfCheck::new("delay-fixture-closure", delay_fixture(), 1),
        SelfCheck::new("change-example", change_example(), 1),
        SelfCheck::new("reasoner-vs-naive", reasoner(&mut rng, cases), cases),
        SelfCheck::new("pearson-vs-pairwise", pearson_check(&mut rng, cases), cases),
        SelfCheck::new("p-value-vs-integral", p_value_check(&mut rng, cases), cases),
        SelfCheck::new("auc-vs-pairs", auc_check(&mut rng, cases), cases),
        SelfCheck::new("mining-vs-enumeration", mining(&mut rng, cases), cases),
        SelfCheck::new("search-vs-exhaustive", search(&mut rng, cases), cases),
        SelfCheck::new("synchronized-extension", extension(&mut rng, cases), cases),
    ]
}

fn delay_fixture() -> Option<String> {
    let t = parse_ontology(fixtures::DELAY_TBOX).ok()?.tbox;
    let a = parse_ontology(fixtures::DELAY_ABOX).ok()?.abox;
    let got: BTreeSet<String> = materialize(&normalize_tbox(&t), &a)
        .atoms()
        .iter()
        .map(|g| g.to_string())
        .collect();
    let want: BTreeSet<String> = fixtures::DELAY_CLOSURE.iter().map(|s| s.to_string()).collect();
    (got != want).then(|| {
        let extra: Vec<_> = got.difference(&want).collect();
        let missing: Vec<_> = want.difference(&got).collect();
        format!("extra {extra:?}, missing {missing:?}")
    })
}

fn change_example() -> Option<String> {
    let (ga, gb, new, obs, inv, union) = fixtures::CHANGE_EXAMPLE;
    let r = match ChangeRates::from_counts(ga, gb, new, obs, inv, union) {
        Ok(r) => r,
        Err(e) => return Some(e.to_string()),
    };
    let want = [
        (FactorKind::New, new as f64 / gb as f64),
        (FactorKind::Obs, obs as f64 / ga as f64),
        (FactorKind::Inv, inv as f64 / (ga + gb) as f64),
    ];
    want.iter()
        .find(|(k, v)| (r.get(*k) - v).abs() > 1e-9)
        .map(|(k, v)| format!("{} rate {:.6}, expected {v:.6}", k.name(), r.get(*k)))
}

const CONCEPTS: [&str; 4] = ["A", "B", "C", "D"];
const ROLES: [&str; 3] = ["r", "s", "t"];
const INDS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn concept(rng: &mut ChaCha8Rng, depth: u32) -> ConceptExpr {
    match rng.random_range(0..if depth == 0 { 8 } else { 12 }) {
        0..=5 => ConceptExpr::atomic(CONCEPTS[rng.random_range(0..4)]),
        6 => ConceptExpr::Top,
        7 => ConceptExpr::nominal(INDS[rng.random_range(0..3)]),
        8 | 9 => ConceptExpr::and(vec![concept(rng, depth - 1), concept(rng, depth - 1)]),
        _ => ConceptExpr::some(ROLES[rng.random_range(0..3)], concept(rng, depth - 1)),
    }
}

fn instance(rng: &mut ChaCha8Rng) -> (Vec<TBoxAxiom>, Vec<ABoxAxiom>) {
    let role = |rng: &mut ChaCha8Rng| ROLES[rng.random_range(0..3)].into();
    let tbox = (0..rng.random_range(0..=10))
        .map(|_| match rng.random_range(0..10) {
            0 => TBoxAxiom::RoleInclusion {
                sub: role(rng),
                sup: role(rng),
            },
            1 => TBoxAxiom::RoleChain {
                first: role(rng),
                second: role(rng),
                sup: role(rng),
            },
            2 => TBoxAxiom::Gci {
                lhs: concept(rng, 2),
                rhs: ConceptExpr::Bottom,
            },
            _ => TBoxAxiom::Gci {
                lhs: concept(rng, 2),
                rhs: concept(rng, 2),
            },
        })
        .collect();
    let n = rng.random_range(1..=INDS.len());
    let abox = (0..rng.random_range(0..=12))
        .map(|_| match rng.random_range(0..10) {
            0..=3 => ABoxAxiom::ClassAssertion {
                concept: concept(rng, 1),
                individual: INDS[rng.random_range(0..n)].into(),
            },
            4..=8 => ABoxAxiom::role(
                ROLES[rng.random_range(0..3)],
                INDS[rng.random_range(0..n)],
                INDS[rng.random_range(0..n)],
            ),
            _ => ABoxAxiom::Equality(INDS[rng.random_range(0..n)].into(), INDS[rng.random_range(0..n)].into()),
        })
        .collect();
    (tbox, abox)
}

fn reasoner(rng: &mut ChaCha8Rng, cases: usize) -> Option<String> {
    (0..cases).find_map(|case| {
        let (tbox, abox) = instance(rng);
        let fast = materialize(&normalize_tbox(&tbox), &abox);
        let naive = oracle::naive_materialize(&tbox, &abox);
        let same = fast.is_inconsistent() == naive.inconsistent && fast.atoms() == &naive.atoms;
        (!same).then(|| {
            format!(
                "case {case}: closures differ on {} TBox and {} ABox axioms",
                tbox.len(),
                abox.len()
            )
        })
    })
}

fn sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

fn pearson_check(rng: &mut ChaCha8Rng, cases: usize) -> Option<String> {
    (0..cases).find_map(|case| {
        let n = rng.random_range(3..40);
        let x = sample(rng, n);
        let y: Vec<f64> = x
            .iter()
            .map(|v| v * rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0))
            .collect();
        match (pearson(&x, &y).ok(), oracle::pearson_pairwise(&x, &y)) {
            (Some(a), Some(b)) if (a - b).abs() <= 1e-9 => None,
            (None, None) => None,
            (a, b) => Some(format!("case {case}: {a:?} vs {b:?}")),
        }
    })
}

fn p_value_check(rng: &mut ChaCha8Rng, cases: usize) -> Option<String> {
    (0..cases).find_map(|case| {
        let n = rng.random_range(3..200);
        let r: f64 = rng.random_range(-0.999..0.999);
        let fast = p_value(r, n).ok()?;
        let slow = oracle::p_value_integrated(r, n);
        ((fast - slow).abs() > 1e-6).then(|| format!("case {case}: r={r} n={n}: {fast} vs {slow}"))
    })
}

fn auc_check(rng: &mut ChaCha8Rng, cases: usize) -> Option<String> {
    (0..cases).find_map(|case| {
        let n = rng.random_range(2..60);
        // Coarse scores force ties.
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        match (auc(&scores, &labels).ok(), oracle::auc_pairs(&scores, &labels)) {
            (Some(a), Some(b)) if (a - b).abs() <= 1e-12 => None,
            (None, None) => None,
            (a, b) => Some(format!("case {case}: {a:?} vs {b:?}")),
        }
    })
}

fn mining(rng: &mut ChaCha8Rng, cases: usize) -> Option<String> {
    let pool: Vec<Entailment> = ["A(x)", "B(x)", "C(y)", "r(x,y)", "s(y,x)", "A(y)", "D(z)", "r(x,z)"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let target: Entailment = "T(x)".parse().unwrap();
    let exclude: BTreeSet<Entailment> = [target.clone()].into();
    (0..cases).find_map(|case| {
        let rows: Vec<(BTreeSet<Entailment>, bool)> = (0..rng.random_range(1..12))
            .map(|_| {
                let t = rng.random_bool(0.5);
                let mut s: BTreeSet<Entailment> = pool.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
                if t {
                    s.insert(target.clone());
                }
                (s, t)
            })
            .collect();
        let (kappa, tau, sigma) = (
            rng.random_range(1..=3),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..=1.0),
        );
        let table = SupportTable::new(rows.iter().map(|(s, t)| (s, *t)), &exclude);
        let got: Vec<_> = table
            .effective(kappa, tau)
            .into_iter()
            .map(|e| (e.members, e.r_e, e.r_i))
            .collect();
        let mut freq = oracle::frequent_brute(&rows, sigma);
        freq.remove(&target);
        let ok = got == oracle::effective_subsets_brute(&rows, &target, kappa, tau) && table.frequent(sigma) == freq;
        (!ok).then(|| format!("case {case}: kappa={kappa} tau={tau:.3} sigma={sigma:.3}"))
    })
}

/// A random evidence space over a small atom pool with shared signatures.
fn space(rng: &mut ChaCha8Rng) -> EvidenceSpace {
    let domains = rng.random_range(3..=6);
    let patterns: Vec<Vec<bool>> = (0..rng.random_range(1..=4))
        .map(|_| (0..domains).map(|_| rng.random_bool(0.5)).collect())
        .collect();
    let mut closures = vec![BTreeSet::new(); domains];
    for i in 0..rng.random_range(2..=9) {
        let sig = &patterns[rng.random_range(0..patterns.len())];
        let g: Entailment = format!("C{i}(x)").parse().unwrap();
        for (d, c) in closures.iter_mut().enumerate() {
            if sig[d] {
                c.insert(g.clone());
            }
        }
    }
    let ids: Vec<String> = (0..domains).map(|d| format!("D{d}")).collect();
    let mut recs = Vec::new();
    for a in 0..domains {
        for b in (0..domains).filter(|&b| b != a) {
            let f = rng.random_range(-40..=40) as f64 / 100.0;
            recs.push(TransferRecord::new(&ids[a], &ids[b], (0.5, 0.5 - f, 0.5 + f), 1.0, 1.0).unwrap());
        }
    }
    EvidenceSpace::new(ids, closures, BTreeSet::new(), &FtiMatrix::from_records(recs).unwrap())
}

fn search(rng: &mut ChaCha8Rng, cases: usize) -> Option<String> {
    let params = EvidenceParams {
        alpha: 0.5,
        ..EvidenceParams::default()
    };
    (0..cases).find_map(|case| {
        let s = space(rng);
        let clusters = SyncClusters::from_space(&s);
        let max_dim = rng.random_range(2..=4);
        let cfg = SearchConfig {
            max_dim,
            params,
            early_stop: false,
            emit_invalid: true,
        };
        let out = core_context_search(&s, &clusters, &cfg).ok()?;
        let ok =
            out.expanded(&clusters, max_dim) == oracle::exhaustive_contexts(&s, clusters.universe(), max_dim, &params);
        (!ok).then(|| format!("case {case}: pruned and exhaustive results differ at max_dim {max_dim}"))
    })
}

fn extension(rng: &mut ChaCha8Rng, cases: usize) -> Option<String> {
    let params = EvidenceParams::default();
    let mut tried = 0;
    for _ in 0..cases * 20 {
        if tried == cases {
            break;
        }
        let s = space(rng);
        let clusters = SyncClusters::from_space(&s);
        let u = clusters.universe();
        let Some(c) = (0..clusters.len()).find(|&c| clusters.members(c).len() >= 2) else {
            continue;
        };
        let members: Vec<&Entailment> = clusters.members(c).collect();
        let partner = &u[rng.random_range(0..u.len())];
        if members[..2].contains(&partner) {
            continue;
        }
        tried += 1;
        let x = Evidence::context([members[0].clone(), partner.clone()]).unwrap();
        let xg = Evidence::context([members[0].clone(), partner.clone(), members[1].clone()]).unwrap();
        let r = correlative_reason(&s, &x, &params);
        let rg = correlative_reason(&s, &xg, &params);
        let same =
            r.gamma.to_bits() == rg.gamma.to_bits() && r.rho.to_bits() == rg.rho.to_bits() && r.valid == rg.valid;
        if !fast_extend(x.entailments(), members[1], &clusters) || !same {
            return Some(format!("{x} and {xg} disagree"));
        }
    }
    None
}
