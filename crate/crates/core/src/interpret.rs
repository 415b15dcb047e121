//! Split-gain importance, its shadow-feature bias correction, and partial dependence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boost::{fit, BoostConfig, GammaEnsemble};
use crate::data::{percentile, Dataset, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::model::GammaModel;

/// Mean over trees of the summed SSE reductions of the splits on each feature.
pub fn importance(model: &GammaEnsemble) -> Vec<f64> {
    let mut out = vec![0.0; model.n_features];
    if model.trees.is_empty() {
        return out;
    }
    for tree in &model.trees {
        for (acc, g) in out.iter_mut().zip(tree.gain_by_feature()) {
            *acc += g;
        }
    }
    let m = model.trees.len() as f64;
    out.iter_mut().for_each(|v| *v /= m);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    /// Importance of the model fitted on the original covariates.
    pub raw: Vec<f64>,
    /// Original-block importance minus shadow-block importance, averaged over repeats.
    pub corrected: Vec<f64>,
    /// Mean shadow-block importance per original feature.
    pub shadow: Vec<f64>,
    pub repeats: usize,
}

/// Covariates bound column-wise with a row-permuted copy of themselves.
pub fn shadow_design(data: &Dataset, seed: u64, repeat: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repeat);
    let mut perm: Vec<usize> = (0..data.n()).collect();
    perm.shuffle(&mut rng);
    let p = data.p();
    let mut flat = Vec::with_capacity(data.n() * 2 * p);
    for (i, &src) in perm.iter().enumerate() {
        flat.extend_from_slice(data.row(i));
        flat.extend_from_slice(data.row(src));
    }
    let labels = data.feature_labels();
    let names = labels
        .iter()
        .cloned()
        .chain(labels.iter().map(|l| format!("shadow_{l}")))
        .collect();
    data.with_features(flat, 2 * p)?.with_names(names)
}

/// Bias-corrected importance from `repeats` shadow fits at the frozen capacity of `cfg`.
pub fn modified_importance(
    data: &Dataset,
    t: &ThresholdSpec,
    cfg: &BoostConfig,
    repeats: usize,
) -> Result<ImportanceReport> {
    if repeats == 0 {
        return Err(EviError::InvalidConfig("need at least one shadow repeat".into()));
    }
    let p = data.p();
    let raw = importance(&fit(data, t, cfg)?);
    let runs: Vec<Vec<f64>> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            let aug = shadow_design(data, cfg.seed, r)?;
            Ok(importance(&fit(&aug, t, cfg)?))
        })
        .collect::<Result<_>>()?;
    let mut orig = vec![0.0; p];
    let mut shadow = vec![0.0; p];
    for imp in &runs {
        for j in 0..p {
            orig[j] += imp[j];
            shadow[j] += imp[p + j];
        }
    }
    let rf = repeats as f64;
    let corrected = orig.iter().zip(&shadow).map(|(a, b)| (a - b) / rf).collect();
    Ok(ImportanceReport {
        raw,
        corrected,
        shadow: shadow.iter().map(|s| s / rf).collect(),
        repeats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdpCurve {
    pub features: Vec<usize>,
    /// Evaluation points; each has one coordinate per entry of `features`.
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// Average prediction over the sample with the coordinates in `features`
/// overwritten by each grid point.
pub fn partial_dependence(
    model: &dyn GammaModel,
    data: &Dataset,
    features: &[usize],
    grid: &[Vec<f64>],
) -> Result<PdpCurve> {
    if features.is_empty() || grid.is_empty() {
        return Err(EviError::InvalidConfig("partial dependence needs features and grid points".into()));
    }
    if data.p() != model.n_features() {
        return Err(EviError::DimensionMismatch {
            expected: model.n_features(),
            got: data.p(),
        });
    }
    if let Some(&bad) = features.iter().find(|&&j| j >= data.p()) {
        return Err(EviError::InvalidConfig(format!("feature index {bad} out of range")));
    }
    let mut scratch = vec![0.0; data.p()];
    let mut values = Vec::with_capacity(grid.len());
    for point in grid {
        if point.len() != features.len() {
            return Err(EviError::DimensionMismatch {
                expected: features.len(),
                got: point.len(),
            });
        }
        let mut sum = 0.0;
        for row in data.rows() {
            scratch.copy_from_slice(row);
            for (&j, &v) in features.iter().zip(point) {
                scratch[j] = v;
            }
            sum += model.gamma(&scratch);
        }
        values.push(sum / data.n() as f64);
    }
    Ok(PdpCurve {
        features: features.to_vec(),
        grid: grid.to_vec(),
        values,
    })
}

pub fn partial_dependence_1d(
    model: &dyn GammaModel,
    data: &Dataset,
    feature: usize,
    grid: &[f64],
) -> Result<PdpCurve> {
    let points: Vec<Vec<f64>> = grid.iter().map(|&v| vec![v]).collect();
    partial_dependence(model, data, &[feature], &points)
}

/// `points` equally spaced values between the 1st and 99th percentiles of a column.
pub fn default_grid(data: &Dataset, feature: usize, points: usize) -> Result<Vec<f64>> {
    if feature >= data.p() {
        return Err(EviError::InvalidConfig(format!("feature index {feature} out of range")));
    }
    if points == 0 {
        return Err(EviError::InvalidConfig("grid needs at least one point".into()));
    }
    let col = data.column(feature);
    let lo = percentile(&col, 0.01);
    let hi = percentile(&col, 0.99);
    if points == 1 {
        return Ok(vec![0.5 * (lo + hi)]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Node, NodeKind, RegressionTree};

    fn ensemble(trees: Vec<RegressionTree>, p: usize) -> GammaEnsemble {
        GammaEnsemble {
            gamma0: 0.5,
            nu: 1.0,
            clamp: (1e-6, 1e6),
            trees,
            threshold: ThresholdSpec { u: 1.0, q: 0.1, k: 1 },
            n_features: p,
            feature_names: None,
        }
    }

    fn stump(feature: usize, threshold: f64, gain: f64, lo: f64, hi: f64, p: usize) -> RegressionTree {
        let leaf = |value| Node {
            kind: NodeKind::Leaf { value },
            count: 1,
            sse: 0.0,
        };
        RegressionTree::from_nodes(
            vec![
                Node {
                    kind: NodeKind::Split {
                        feature,
                        threshold,
                        left: 1,
                        right: 2,
                        gain,
                    },
                    count: 2,
                    sse: gain,
                },
                leaf(lo),
                leaf(hi),
            ],
            p,
        )
        .unwrap()
    }

    #[test]
    fn single_split_importance() {
        let m = ensemble(vec![stump(3, 0.0, 2.5, 0.1, 0.2, 5)], 5);
        assert_eq!(importance(&m), vec![0.0, 0.0, 0.0, 2.5, 0.0]);
    }

    #[test]
    fn importance_is_mean_over_trees() {
        let m = ensemble(vec![stump(0, 0.0, 2.0, 0.0, 0.0, 2), RegressionTree::single_leaf(0.0, 1, 2)], 2);
        assert_eq!(importance(&m), vec![1.0, 0.0]);
    }

    #[test]
    fn pdp_zero_trees_constant() {
        let m = ensemble(vec![], 2);
        let d = Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]], vec![1.0, 2.0]).unwrap();
        let c = partial_dependence_1d(&m, &d, 1, &[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(c.values, vec![0.5; 3]);
    }

    #[test]
    fn pdp_step_at_threshold() {
        let m = ensemble(vec![stump(1, 0.3, 1.0, 0.1, 0.4, 2)], 2);
        let d = Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0, -3.0], vec![1.0, 0.3]], vec![1.0; 3]).unwrap();
        let c = partial_dependence_1d(&m, &d, 1, &[0.2, 0.3, 0.30000001, 0.9]).unwrap();
        assert!((c.values[0] - 0.6).abs() < 1e-15);
        assert!((c.values[1] - 0.6).abs() < 1e-15);
        assert!((c.values[2] - 0.9).abs() < 1e-15);
        // splits never touch feature 0: constant curve
        let c0 = partial_dependence_1d(&m, &d, 0, &[-5.0, 0.0, 5.0]).unwrap();
        assert!(c0.values.iter().all(|&v| v == c0.values[0]));
    }

    #[test]
    fn pdp_errors() {
        let m = ensemble(vec![], 2);
        let d = Dataset::from_rows(&[vec![0.0, 1.0]], vec![1.0]).unwrap();
        assert!(partial_dependence(&m, &d, &[2], &[vec![0.0]]).is_err());
        assert!(partial_dependence(&m, &d, &[], &[vec![0.0]]).is_err());
        assert!(partial_dependence(&m, &d, &[0], &[]).is_err());
    }

    #[test]
    fn grid_spans_inner_percentiles() {
        let rows: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_rows(&rows, vec![1.0; 101]).unwrap();
        let g = default_grid(&d, 0, 50).unwrap();
        assert_eq!(g.len(), 50);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[49] - 99.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn shadow_rows_are_a_permutation() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let d = Dataset::from_rows(&rows, vec![1.0; 20]).unwrap();
        let s = shadow_design(&d, 3, 0).unwrap();
        assert_eq!(s.p(), 4);
        let mut seen: Vec<f64> = s.rows().map(|r| r[2]).collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, d.column(0));
        // whole rows move together
        for r in s.rows() {
            assert_eq!(r[3], r[2] * r[2]);
        }
        assert_eq!(s.names().unwrap()[3], "shadow_x2");
    }
}
