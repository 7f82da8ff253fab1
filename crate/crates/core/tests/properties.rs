mod common;

use common::*;
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use surrogate_fidelity::dataio::FeatureStats;
use surrogate_fidelity::lime::{explain_instance, proximity_weights, LimeParams};
use surrogate_fidelity::surrogates::{evaluate_rules, extract_rules, fit_tree};
use surrogate_fidelity::svr::fit_svr;
use surrogate_fidelity::wilcoxon::wilcoxon_signed_rank;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn svr_fits_are_feasible_and_kkt(seed in any::<u64>()) {
        let case = svr_case(&mut rng(seed));
        let m = fit_svr(case.x.view(), case.y.view(), &case.params).unwrap();
        prop_assert!(m.beta.iter().all(|b| b.abs() <= case.params.c + 1e-12));
        prop_assert!(m.beta.sum().abs() < 1e-8);
        prop_assert!(m.beta.iter().all(|&b| b != 0.0));
        prop_assert!(kkt_violation(&m, &case) < 1e-6);
    }

    #[test]
    fn svr_predictions_ignore_row_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut case = svr_case(&mut r);
        case.params.tol = 1e-12;
        let n = case.y.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rand::Rng::random_range(&mut r, 0..=i);
            perm.swap(i, j);
        }
        let xp = case.x.select(Axis(0), &perm);
        let yp = case.y.select(Axis(0), &perm);
        let a = fit_svr(case.x.view(), case.y.view(), &case.params).unwrap();
        let b = fit_svr(xp.view(), yp.view(), &case.params).unwrap();
        let probe = random_matrix(&mut r, 10, case.x.ncols(), -1.5, 1.5);
        let (fa, fb) = (a.predict(probe.view()).unwrap(), b.predict(probe.view()).unwrap());
        for i in 0..10 {
            prop_assert!((fa[i] - fb[i]).abs() < 1e-8, "{} vs {}", fa[i], fb[i]);
        }
    }

    #[test]
    fn tree_rules_reproduce_predictions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let case = tree_case(&mut r);
        let y = Array1::from(case.y.clone());
        let t = fit_tree(case.x.view(), y.view(), &case.params).unwrap();
        let names: Vec<String> = (0..case.x.ncols()).map(|j| format!("f{j}")).collect();
        let rules = extract_rules(&t, &names);
        prop_assert_eq!(rules.len(), t.n_leaves());
        let probe = random_matrix(&mut r, 100, case.x.ncols(), -1.0, 5.0);
        for row in probe.rows() {
            let row = row.to_vec();
            prop_assert_eq!(evaluate_rules(&rules, &row), Some(t.predict_row(&row).unwrap()));
        }
    }

    #[test]
    fn lime_explanations_are_self_consistent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let case = svr_case(&mut r);
        let m = fit_svr(case.x.view(), case.y.view(), &case.params).unwrap();
        let stats = FeatureStats::from_matrix(case.x.view());
        let p = LimeParams { n_samples: 200, ..LimeParams::for_dimension(case.x.ncols(), seed) };
        let inst = case.x.row(0);
        let e = explain_instance(inst, &m, &stats, &p).unwrap();
        prop_assert_eq!(e.local_prediction, e.evaluate(inst));
        prop_assert_eq!(e.selected_features.len(), case.x.ncols());
        prop_assert_eq!(&e, &explain_instance(inst, &m, &stats, &p).unwrap());
        let samples = Array2::from_shape_fn((50, case.x.ncols()), |_| rand::Rng::random_range(&mut r, -3.0..3.0));
        let w = proximity_weights(inst, samples.view(), p.kernel_width).unwrap();
        prop_assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn wilcoxon_exact_path_matches_enumeration(seed in any::<u64>(), n in 1usize..=12) {
        let d = tie_free_diffs(&mut rng(seed), n);
        let got = wilcoxon_signed_rank(&d, &vec![0.0; n]).unwrap();
        let (v, p) = wilcoxon_bruteforce(&d);
        prop_assert_eq!(got.v_statistic, v);
        prop_assert_eq!(got.p_two_sided.to_bits(), p.to_bits());
    }
}
