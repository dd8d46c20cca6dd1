use proptest::prelude::*;

use ppmine::hs_scheme::{hs_equivalent_w, hs_privacy};
use ppmine::privacy_analysis::{fs_average, fs_average_filtered, fs_worst, reconstruction_step, Population};
use ppmine::ps_scheme::ps_privacy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn average_case_beats_worst_case(w in 1e-3f64..=100.0, n in 3usize..=10_000) {
        let avg = fs_average(w, Population::Finite(n)).unwrap();
        prop_assert!(avg > fs_worst(w), "w={} n={} avg={} worst={}", w, n, avg, fs_worst(w));
        let limit = fs_average(w, Population::Limit).unwrap();
        prop_assert!(limit > fs_worst(w));
    }

    #[test]
    fn per_step_success_decreases(w in 1e-3f64..=100.0, n in 3usize..=300) {
        for i in 0..n - 1 {
            prop_assert!(reconstruction_step(w, n, i) > reconstruction_step(w, n, i + 1));
        }
    }

    #[test]
    fn filtering_never_raises_privacy(w in 0.1f64..=20.0, g1 in 0.0f64..=1.0, g2 in 0.0f64..=1.0) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let a = fs_average_filtered(w, Population::Limit, lo).unwrap();
        let b = fs_average_filtered(w, Population::Limit, hi).unwrap();
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn hybrid_dominates_both_parts(w in 0.0f64..=50.0, s0 in 0.01f64..=0.99, p in 0.0f64..=1.0, a in 0.0f64..=1.0) {
        let hs = hs_privacy(w, s0, p, a).unwrap().p_p;
        let ps = ps_privacy(s0, p, a).unwrap().p_p;
        prop_assert!(hs >= fs_worst(w) - 1e-15);
        prop_assert!(hs >= ps - 1e-15);
    }

    #[test]
    fn equivalent_w_is_minimal(target in 0.0f64..0.999, pr in 0.01f64..=1.0) {
        let w = hs_equivalent_w(target, pr).unwrap();
        prop_assert!(1.0 - pr / (1.0 + w as f64) >= target - 1e-12);
        if w > 0 {
            prop_assert!(1.0 - pr / (w as f64) < target);
        }
    }
}
