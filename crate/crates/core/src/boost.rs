//! Stagewise boosting of the extreme value index.
//!
//! The ensemble starts from the Hill estimate and adds shrunken regression trees,
//! each fitted to the negative gradient of the exceedance loss with Newton-step
//! leaf values. The running index is clamped after every update, and prediction
//! replays exactly the same sequence of clamped updates, so a stored ensemble
//! reproduces the in-fit values bit for bit.

use crate::data::{Dataset, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::loss::{hessian_term, hill_init, neg_gradient, psi};
use crate::model::{GammaModel, TailFit, Tuning};
use crate::tree::{newton_leaf_values, NodeKind, RegressionTree, TreeGrower};

/// Upper bound on the number of boosting iterations accepted by [`BoostConfig`].
pub const MAX_TREES: usize = 100_000;

/// Default bounds applied to every evaluation of the index.
pub const DEFAULT_CLAMP: (f64, f64) = (1e-6, 1e6);

/// Which rows the per-iteration trees are grown on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRows {
    /// Only rows with `y > u`; the rest carry zero gradient and Hessian.
    Exceedances,
    /// Every row, zero-gradient rows included.
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    pub n_trees: usize,
    pub nu: f64,
    pub max_leaves: usize,
    pub min_leaf: usize,
    pub gamma_clamp: (f64, f64),
    /// Unused by the deterministic fit itself; carried for fold assignment and shadow permutations.
    pub seed: u64,
    pub tree_rows: TreeRows,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            nu: 0.01,
            max_leaves: 2,
            min_leaf: 5,
            gamma_clamp: DEFAULT_CLAMP,
            seed: 0,
            tree_rows: TreeRows::Exceedances,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(EviError::InvalidConfig(format!("shrinkage {} not in (0,1]", self.nu)));
        }
        if self.max_leaves < 2 {
            return Err(EviError::InvalidConfig(format!("L must be >= 2, got {}", self.max_leaves)));
        }
        if self.min_leaf < 1 {
            return Err(EviError::InvalidConfig("min_leaf must be >= 1".into()));
        }
        let (lo, hi) = self.gamma_clamp;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(EviError::InvalidConfig(format!("bad gamma clamp ({lo}, {hi})")));
        }
        if self.n_trees > MAX_TREES {
            return Err(EviError::InvalidConfig(format!(
                "M = {} exceeds the maximum of {MAX_TREES}",
                self.n_trees
            )));
        }
        Ok(())
    }

    pub fn with_tuning(&self, t: Tuning) -> Self {
        Self {
            n_trees: t.n_trees,
            nu: t.nu,
            max_leaves: t.max_leaves,
            ..self.clone()
        }
    }

    pub fn tuning(&self) -> Tuning {
        Tuning {
            n_trees: self.n_trees,
            nu: self.nu,
            max_leaves: self.max_leaves,
        }
    }
}

/// Hill constant plus shrunken trees.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEnsemble {
    pub gamma0: f64,
    pub nu: f64,
    pub clamp: (f64, f64),
    pub trees: Vec<RegressionTree>,
    pub threshold: ThresholdSpec,
    pub n_features: usize,
    pub feature_names: Option<Vec<String>>,
}

impl GammaEnsemble {
    #[inline]
    fn clamp_value(&self, g: f64) -> f64 {
        g.clamp(self.clamp.0, self.clamp.1)
    }

    fn start(&self) -> f64 {
        self.clamp_value(self.gamma0)
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        let mut g = self.start();
        for tree in &self.trees {
            g = self.clamp_value(g + self.nu * tree.value_at(x));
        }
        g
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(EviError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        data.rows().map(|r| self.predict(r)).collect()
    }

    /// The ensemble restricted to its first `m` trees.
    pub fn truncated(&self, m: usize) -> GammaEnsemble {
        GammaEnsemble {
            trees: self.trees[..m.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Loss of every truncation `0..=M` on `data` at the model's threshold.
    pub fn loss_path(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.p() != self.n_features {
            return Err(EviError::DimensionMismatch {
                expected: self.n_features,
                got: data.p(),
            });
        }
        let u = self.threshold.u;
        let rows = data.exceedance_rows(u);
        let ys: Vec<f64> = rows.iter().map(|&i| data.responses()[i]).collect();
        let mut cur = vec![self.start(); rows.len()];
        let sum = |cur: &[f64]| -> Result<f64> {
            let mut s = 0.0;
            for (&y, &g) in ys.iter().zip(cur) {
                s += psi(y, g, u)?;
            }
            Ok(s)
        };
        let mut path = Vec::with_capacity(self.trees.len() + 1);
        path.push(sum(&cur)?);
        for tree in &self.trees {
            for (g, &i) in cur.iter_mut().zip(&rows) {
                *g = self.clamp_value(*g + self.nu * tree.value_at(data.row(i)));
            }
            path.push(sum(&cur)?);
        }
        Ok(path)
    }
}

impl GammaModel for GammaEnsemble {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn gamma(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// Fit the boosted ensemble at a fixed threshold.
pub fn fit(data: &Dataset, t: &ThresholdSpec, cfg: &BoostConfig) -> Result<GammaEnsemble> {
    cfg.validate()?;
    let gamma0 = hill_init(data, t)?;
    let u = t.u;
    let mut model = GammaEnsemble {
        gamma0,
        nu: cfg.nu,
        clamp: cfg.gamma_clamp,
        trees: Vec::with_capacity(cfg.n_trees),
        threshold: *t,
        n_features: data.p(),
        feature_names: data.names().map(<[String]>::to_vec),
    };
    if cfg.n_trees == 0 {
        return Ok(model);
    }
    let rows = match cfg.tree_rows {
        TreeRows::Exceedances => data.exceedance_rows(u),
        TreeRows::All => (0..data.n()).collect(),
    };
    let ys: Vec<f64> = rows.iter().map(|&i| data.responses()[i]).collect();
    let grower = TreeGrower::new(data, rows, cfg.max_leaves, cfg.min_leaf)?;
    let mut cur = vec![model.start(); ys.len()];
    let mut grad = vec![0.0; ys.len()];
    let mut hess = vec![0.0; ys.len()];

    for m in 1..=cfg.n_trees {
        for i in 0..ys.len() {
            grad[i] = neg_gradient(ys[i], cur[i], u)?;
            hess[i] = hessian_term(ys[i], cur[i], u)?;
            if !grad[i].is_finite() || !hess[i].is_finite() {
                return Err(EviError::NonFiniteAtIteration {
                    iteration: m,
                    what: format!("gradient or Hessian of row {i}"),
                });
            }
        }
        let grown = grower.grow(&grad)?;
        let tree = newton_leaf_values(&grown, &grad, &hess)?;
        if tree.leaf_values().any(|v| !v.is_finite()) {
            return Err(EviError::NonFiniteAtIteration {
                iteration: m,
                what: "Newton leaf value".into(),
            });
        }
        for (g, &leaf) in cur.iter_mut().zip(&grown.assignment) {
            let NodeKind::Leaf { value } = tree.nodes()[leaf].kind else {
                unreachable!("assignment points at a leaf")
            };
            *g = model.clamp_value(*g + model.nu * value);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

/// Fitter with a frozen capacity, for threshold scans.
pub fn fixed_fitter(cfg: BoostConfig) -> impl Fn(&Dataset, &ThresholdSpec) -> Result<TailFit> + Sync {
    move |data, t| {
        let model = fit(data, t, &cfg)?;
        Ok(TailFit {
            model: Box::new(model),
            tuning: Some(cfg.tuning()),
        })
    }
}
