use eviboost::baseline::{fit_tir, predict_tir, TirModel};
use eviboost::boost::{fit, BoostConfig, GammaEnsemble};
use eviboost::data::{minmax_normalize, Dataset, ThresholdSpec};
use eviboost::interpret::{importance, partial_dependence};
use eviboost::io::fmt_f64;
use eviboost::loss::{hessian_term, neg_gradient, psi};
use eviboost::model::GammaModel;
use eviboost::sim::{sample_response, DgpVariant};
use eviboost::threshold::{discrepancies, ks_uniform_test, UniformResiduals};
use eviboost::tree::{grow, newton_leaf_values, predict_tree, NodeKind, RegressionTree};
use eviboost::tuning::stratified_folds;
use proptest::prelude::*;

fn dataset(p: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = (Dataset, Vec<f64>)> {
    n.prop_flat_map(move |n| {
        (
            prop::collection::vec(-3.0f64..3.0, n * p),
            prop::collection::vec(1.0f64..50.0, n),
            prop::collection::vec(-2.0f64..2.0, n),
        )
    })
    .prop_map(move |(x, y, t)| (Dataset::from_flat(x, p, y).unwrap(), t))
}

/// Axis-aligned box of every leaf, from the root path.
fn leaf_boxes(tree: &RegressionTree) -> Vec<(usize, Vec<(f64, f64)>)> {
    let p = tree.n_features();
    let mut out = Vec::new();
    let mut stack = vec![(0usize, vec![(f64::NEG_INFINITY, f64::INFINITY); p])];
    while let Some((id, bounds)) = stack.pop() {
        match tree.nodes()[id].kind {
            NodeKind::Leaf { .. } => out.push((id, bounds)),
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let mut l = bounds.clone();
                l[feature].1 = l[feature].1.min(threshold);
                let mut r = bounds;
                r[feature].0 = r[feature].0.max(threshold);
                stack.push((left, l));
                stack.push((right, r));
            }
        }
    }
    out
}

/// Left children take `x <= threshold`, so a box is `(lo, hi]`.
fn in_box(x: &[f64], b: &[(f64, f64)]) -> bool {
    x.iter().zip(b).all(|(v, (lo, hi))| v > lo && v <= hi)
}

fn small_ensemble(data: &Dataset, trees: usize) -> GammaEnsemble {
    let t = ThresholdSpec::from_fraction(data.responses(), 0.5).unwrap();
    fit(
        data,
        &t,
        &BoostConfig {
            n_trees: trees,
            nu: 0.3,
            max_leaves: 3,
            min_leaf: 2,
            ..Default::default()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn loss_terms_vanish_at_or_below_threshold(u in 0.1f64..100.0, frac in 0.0f64..=1.0, g in 0.01f64..5.0) {
        let y = u * frac;
        prop_assert_eq!(psi(y, g, u).unwrap().to_bits(), 0u64);
        prop_assert_eq!(neg_gradient(y, g, u).unwrap().to_bits(), 0u64);
        prop_assert_eq!(hessian_term(y, g, u).unwrap().to_bits(), 0u64);
    }

    #[test]
    fn loss_derivatives_match_differences(u in 0.5f64..10.0, ratio in 1.001f64..1e4, g in 0.05f64..3.0) {
        let y = u * ratio;
        let h = 1e-5 * g;
        let fd = (psi(y, g + h, u).unwrap() - psi(y, g - h, u).unwrap()) / (2.0 * h);
        let ng = neg_gradient(y, g, u).unwrap();
        prop_assert!((fd + ng).abs() <= 1e-6 * ng.abs().max(1e-3 / (g * g)));
    }

    #[test]
    fn leaves_partition_space((data, targets) in dataset(2, 6..40), probes in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 30)) {
        let grown = grow(&data, &targets, 5, 1).unwrap();
        let boxes = leaf_boxes(&grown.tree);
        prop_assert_eq!(boxes.len(), grown.tree.n_leaves());
        let mut points: Vec<Vec<f64>> = probes.iter().map(|&(a, b)| vec![a, b]).collect();
        points.extend(data.rows().map(<[f64]>::to_vec));
        for x in points {
            let hits: Vec<usize> = boxes.iter().filter(|(_, b)| in_box(&x, b)).map(|(id, _)| *id).collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(hits[0], grown.tree.leaf_index(&x));
        }
        for (i, x) in data.rows().enumerate() {
            prop_assert_eq!(grown.assignment[i], grown.tree.leaf_index(x));
        }
    }

    #[test]
    fn unit_hessians_give_leaf_means((data, targets) in dataset(2, 4..30)) {
        let grown = grow(&data, &targets, 4, 1).unwrap();
        let tree = newton_leaf_values(&grown, &targets, &vec![1.0; targets.len()]).unwrap();
        for (id, node) in tree.nodes().iter().enumerate() {
            if let NodeKind::Leaf { value } = node.kind {
                let members: Vec<f64> = (0..targets.len()).filter(|&i| grown.assignment[i] == id).map(|i| targets[i]).collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                prop_assert!((value - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            }
        }
    }

    #[test]
    fn prediction_replays_sequential_updates((data, _) in dataset(2, 20..60)) {
        let m = small_ensemble(&data, 12);
        for x in data.rows() {
            let mut g = m.gamma0.clamp(m.clamp.0, m.clamp.1);
            for tree in &m.trees {
                g = (g + m.nu * predict_tree(tree, x).unwrap()).clamp(m.clamp.0, m.clamp.1);
            }
            prop_assert_eq!(g.to_bits(), m.predict(x).unwrap().to_bits());
        }
    }

    #[test]
    fn zero_trees_change_nothing((data, _) in dataset(2, 20..60), extra in 1usize..5) {
        let m = small_ensemble(&data, 6);
        let mut padded = m.clone();
        for _ in 0..extra {
            padded.trees.push(RegressionTree::single_leaf(0.0, 0, 2));
        }
        for x in data.rows() {
            prop_assert_eq!(m.predict(x).unwrap(), padded.predict(x).unwrap());
        }
    }

    #[test]
    fn raw_importance_sums_to_mean_gain((data, _) in dataset(3, 20..60)) {
        let m = small_ensemble(&data, 8);
        let total: f64 = importance(&m).iter().sum();
        let mean_gain = m.trees.iter().map(|t| t.gain_by_feature().iter().sum::<f64>()).sum::<f64>() / m.trees.len() as f64;
        prop_assert!((total - mean_gain).abs() <= 1e-12 * mean_gain.abs().max(1.0));
    }

    #[test]
    fn pdp_ignores_row_order((data, _) in dataset(2, 20..50), seed in any::<u64>()) {
        let m = small_ensemble(&data, 6);
        let mut order: Vec<usize> = (0..data.n()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled = data.subset(&order);
        let grid: Vec<Vec<f64>> = (-3..=3).map(|v| vec![v as f64]).collect();
        let a = partial_dependence(&m, &data, &[1], &grid).unwrap();
        let b = partial_dependence(&m, &shuffled, &[1], &grid).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn discrepancies_ignore_order_and_bound_ks(mut v in prop::collection::vec(0.0001f64..0.9999, 1..60)) {
        let a = discrepancies(&UniformResiduals::from_values(v.clone()).unwrap()).unwrap();
        let ks = ks_uniform_test(&UniformResiduals::from_values(v.clone()).unwrap()).unwrap();
        prop_assert!(a.d2 <= ks.statistic + 1e-15);
        v.reverse();
        let third = v.len() / 3;
        v.rotate_left(third);
        let b = discrepancies(&UniformResiduals::from_values(v).unwrap()).unwrap();
        prop_assert!((a.d1 - b.d1).abs() <= 1e-12 * a.d1.max(1e-300));
        prop_assert_eq!(a.d2, b.d2);
        prop_assert!((a.d3 - b.d3).abs() <= 1e-12 * a.d3.max(1e-300));
    }

    #[test]
    fn quantile_convention(y in prop::collection::vec(0.0f64..10.0, 1..200), q in 0.01f64..0.99) {
        let t = ThresholdSpec::from_fraction(&y, q).unwrap();
        let n = y.len() as f64;
        prop_assert_eq!(t.k, y.iter().filter(|&&v| v > t.u).count());
        let ties = y.iter().filter(|&&v| v == t.u).count() as f64;
        prop_assert!((t.k as f64 / n - q).abs() < 1.0 / n + ties / n + 1e-12);
    }

    #[test]
    fn sampler_decreasing_in_uniform(g in 0.01f64..3.0, m in 0.0f64..20.0, a in 0.001f64..0.999, b in 0.001f64..0.999) {
        prop_assume!(a < b);
        let ya = sample_response(g, m, a, DgpVariant::Corrected).unwrap();
        let yb = sample_response(g, m, b, DgpVariant::Corrected).unwrap();
        prop_assert!(ya >= yb && yb >= 1.0);
    }

    #[test]
    fn folds_partition_with_balanced_tails(y in prop::collection::vec(0.0f64..1.0, 20..200), k in 2usize..6, seed in any::<u64>()) {
        let u = 0.7;
        let tail = y.iter().filter(|&&v| v > u).count();
        prop_assume!(tail >= k);
        let a = stratified_folds(&y, u, k, seed).unwrap();
        prop_assert_eq!(a.len(), y.len());
        let mut counts = vec![0usize; k];
        for (i, &f) in a.iter().enumerate() {
            prop_assert!(f < k);
            if y[i] > u {
                counts[f] += 1;
            }
        }
        prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }

    #[test]
    fn minmax_spans_unit_interval((data, _) in dataset(3, 3..50)) {
        let scaled = minmax_normalize(&data).unwrap();
        for j in 0..3 {
            let col = scaled.column(j);
            prop_assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
            prop_assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn printed_floats_round_trip(v in any::<f64>()) {
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn tir_predictions_positive(theta in prop::collection::vec(-50.0f64..50.0, 3), x in prop::collection::vec(-1e6f64..1e6, 2)) {
        let m = TirModel { theta, threshold: ThresholdSpec { u: 1.0, q: 0.1, k: 1 }, iterations: 0, grad_norm: 0.0 };
        prop_assert!(predict_tir(&m, &x).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tir_descends_from_hill((data, _) in dataset(2, 60..150)) {
        let t = ThresholdSpec::from_fraction(data.responses(), 0.4).unwrap();
        if let Ok(m) = fit_tir(&data, &t, 1e-8, 200) {
            let h = eviboost::baseline::hill(&data, &t).unwrap();
            let init = eviboost::loss::total_loss(&data, |_| h, &t).unwrap();
            let fitted = eviboost::loss::total_loss(&data, |x| m.gamma(x), &t).unwrap();
            prop_assert!(fitted <= init + 1e-12 * init.abs());
        }
    }
}
