//! Shared abstractions over fitted extreme value index models.

use crate::data::{Dataset, ThresholdSpec};
use crate::error::Result;

/// Anything that evaluates a positive extreme value index at a covariate vector.
pub trait GammaModel: Send + Sync {
    fn n_features(&self) -> usize;

    /// Evaluate at `x`; `x.len()` must equal [`GammaModel::n_features`].
    fn gamma(&self, x: &[f64]) -> f64;

    fn gamma_all(&self, data: &Dataset) -> Vec<f64> {
        data.rows().map(|r| self.gamma(r)).collect()
    }
}

/// Boosting capacity triple: number of trees, shrinkage and leaves per tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    pub n_trees: usize,
    pub nu: f64,
    pub max_leaves: usize,
}

/// Result of a fitting procedure handed to threshold selection.
pub struct TailFit {
    pub model: Box<dyn GammaModel>,
    /// Capacity chosen by the fitter, when it is a boosting fitter.
    pub tuning: Option<Tuning>,
}

/// A fitting procedure run at a given threshold.
pub type Fitter<'a> = dyn Fn(&Dataset, &ThresholdSpec) -> Result<TailFit> + Sync + 'a;
