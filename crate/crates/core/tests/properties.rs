use proptest::prelude::*;

use anonelect::corpus::random_configuration;
use anonelect::eligibility::{check_ec, Verdict};
use anonelect::protocol::run_semantic;
use anonelect::view::{extend_view, subtrees_equal, truncated_view, view_classes, TruncatedView};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    // a lone node has no frontier, so its code does not fix the depth
    fn codes_decode_back_to_the_same_view(m in 2usize..6, density in 0.0f64..1.0, seed: u64, depth in 0usize..5) {
        let cfg = random_configuration(m, density, seed).unwrap();
        for v in 0..m {
            let view = truncated_view(&cfg, v, depth);
            let back = TruncatedView::decode(&view.code()).unwrap();
            prop_assert_eq!(&back, &view);
            prop_assert_eq!(back.code(), view.code());
        }
    }

    #[test]
    fn code_equality_matches_tree_equality(m in 2usize..6, density in 0.0f64..1.0, seed: u64, depth in 0usize..4) {
        let cfg = random_configuration(m, density, seed).unwrap();
        let views: Vec<_> = (0..m).map(|v| truncated_view(&cfg, v, depth)).collect();
        for a in &views {
            for b in &views {
                let same = subtrees_equal(a, a.root(), b, b.root(), depth);
                prop_assert_eq!(same, a.code() == b.code());
            }
        }
    }

    #[test]
    fn classes_settle_by_depth_m_minus_one(m in 1usize..7, density in 0.0f64..1.0, seed: u64) {
        let cfg = random_configuration(m, density, seed).unwrap();
        prop_assert_eq!(view_classes(&cfg, m - 1, None), view_classes(&cfg, 2 * m, None));
    }

    #[test]
    fn extension_matches_the_real_view(m in 1usize..5, density in 0.0f64..1.0, seed: u64, extra in 0usize..4) {
        let cfg = random_configuration(m, density, seed).unwrap();
        let n = cfg.bound_n();
        let target = 2 * n - 1 + extra;
        for v in 0..m {
            let short = truncated_view(&cfg, v, 2 * n - 1);
            let long = extend_view(&short, target, n).unwrap();
            prop_assert_eq!(long, truncated_view(&cfg, v, target));
        }
    }

    #[test]
    fn protocol_agrees_with_the_checker(m in 1usize..5, density in 0.0f64..1.0, seed: u64) {
        let cfg = random_configuration(m, density, seed).unwrap();
        prop_assume!(cfg.occupied_nodes().len() >= 2);
        let ec = check_ec(&cfg).unwrap();
        let run = run_semantic(&cfg).unwrap();
        prop_assert_eq!(ec.verdict == Verdict::Eligible, run.consistent, "{:?}", cfg.to_document());
        prop_assert_eq!(run.false_marks, 0);
    }
}
