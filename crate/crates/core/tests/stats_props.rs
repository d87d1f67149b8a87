use proptest::prelude::*;
use tlexplain_core::oracle::{auc_pairs, p_value_integrated, pearson_pairwise};
use tlexplain_core::stats::{auc, p_value, pearson};

fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0..100.0f64, n),
            prop::collection::vec(-100.0..100.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn pearson_matches_pairwise((x, y) in paired(50)) {
        let r = pearson(&x, &y).unwrap();
        let o = pearson_pairwise(&x, &y).unwrap();
        prop_assert!((r - o).abs() < 1e-9, "{} vs {}", r, o);
    }

    #[test]
    fn p_value_matches_integration((x, y) in paired(50)) {
        let r = pearson(&x, &y).unwrap();
        let p = p_value(r, x.len()).unwrap();
        let o = p_value_integrated(r, x.len());
        prop_assert!((p - o).abs() < 5e-6, "r={} n={} {} vs {}", r, x.len(), p, o);
    }

    #[test]
    fn pearson_affine_invariant((x, y) in paired(30), a in 0.1..10.0f64, b in -50.0..50.0f64) {
        let r = pearson(&x, &y).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r2 = pearson(&x2, &y).unwrap();
        prop_assert!((r - r2).abs() < 1e-12);
    }

    #[test]
    fn p_value_monotone(r in 0.01..0.98f64, n in 3usize..200) {
        let p = p_value(r, n).unwrap();
        prop_assert!(p_value((r + 0.01).min(0.999), n).unwrap() < p);
        prop_assert!(p_value(r, n + 1).unwrap() < p);
    }

    #[test]
    fn auc_matches_pairs(
        data in (2usize..=12).prop_flat_map(|n| (
            prop::collection::vec(0u8..6, n),
            prop::collection::vec(any::<bool>(), n),
        ))
    ) {
        let (s, l) = data;
        let scores: Vec<f64> = s.iter().map(|&v| v as f64 / 5.0).collect();
        match auc_pairs(&scores, &l) {
            Some(o) => prop_assert!((auc(&scores, &l).unwrap() - o).abs() < 1e-12),
            None => prop_assert!(auc(&scores, &l).is_err()),
        }
    }
}
