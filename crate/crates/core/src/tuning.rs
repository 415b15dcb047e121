//! K-fold cross-validation over shrinkage, leaves per tree and number of trees.
//!
//! For each `(nu, L)` cell the ensemble is grown to `M_max` trees on `K - 1`
//! folds and its staged loss is recorded on the held-out fold. Curves are summed
//! over folds; the best `M` of a cell is the argmin of its curve and the cell
//! with the smallest minimum wins. The threshold is fixed once from the full
//! sample and shared by every fold.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boost::{fit, BoostConfig, GammaEnsemble};
use crate::data::{Dataset, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::model::{TailFit, Tuning};

#[derive(Debug, Clone, PartialEq)]
pub struct TuneGrid {
    pub nu_values: Vec<f64>,
    pub leaf_values: Vec<usize>,
    pub max_trees: usize,
    pub folds: usize,
    pub seed: u64,
    /// Settings shared by every fit (min leaf size, clamp, tree rows).
    pub base: BoostConfig,
}

impl Default for TuneGrid {
    fn default() -> Self {
        Self {
            nu_values: vec![0.005, 0.0075, 0.01, 0.05, 0.1],
            leaf_values: vec![2, 3, 4, 8],
            max_trees: 1000,
            folds: 5,
            seed: 0,
            base: BoostConfig::default(),
        }
    }
}

impl TuneGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nu_values.is_empty() || self.leaf_values.is_empty() {
            return Err(EviError::InvalidConfig("tuning grids must be nonempty".into()));
        }
        if self.folds < 2 {
            return Err(EviError::InvalidConfig(format!("need K >= 2 folds, got {}", self.folds)));
        }
        for &nu in &self.nu_values {
            self.config(0, nu, 2).validate()?;
        }
        for &l in &self.leaf_values {
            self.config(0, 0.5, l).validate()?;
        }
        self.config(self.max_trees, 0.5, 2).validate()
    }

    fn config(&self, n_trees: usize, nu: f64, max_leaves: usize) -> BoostConfig {
        BoostConfig {
            n_trees,
            nu,
            max_leaves,
            seed: self.seed,
            ..self.base.clone()
        }
    }
}

/// Validation curve of one `(nu, L)` cell, summed over folds.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub nu: f64,
    pub max_leaves: usize,
    pub best_m: usize,
    /// Entry `m` is the summed held-out loss with `m` trees, `m = 0..=M_max`.
    pub curve: Vec<f64>,
}

impl CvCell {
    pub fn best_loss(&self) -> f64 {
        self.curve[self.best_m]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: Tuning,
    pub best_loss: f64,
    /// Cells in grid order: `nu` outer, `L` inner.
    pub cells: Vec<CvCell>,
}

/// Fold index per row. Exceedances and non-exceedances are shuffled separately
/// and dealt round-robin, so per-fold exceedance counts differ by at most one.
pub fn stratified_folds(responses: &[f64], u: f64, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut tail: Vec<usize> = (0..responses.len()).filter(|&i| responses[i] > u).collect();
    let mut body: Vec<usize> = (0..responses.len()).filter(|&i| responses[i] <= u).collect();
    if tail.len() < folds {
        return Err(EviError::Infeasible(format!(
            "{} exceedances cannot fill {folds} validation folds",
            tail.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tail.shuffle(&mut rng);
    body.shuffle(&mut rng);
    let mut assign = vec![0usize; responses.len()];
    for (pos, &i) in tail.iter().chain(body.iter()).enumerate() {
        assign[i] = pos % folds;
    }
    Ok(assign)
}

/// First index of the minimum.
pub fn argmin(curve: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in curve.iter().enumerate() {
        if v < curve[best] {
            best = i;
        }
    }
    best
}

pub fn cv_tune(data: &Dataset, t: &ThresholdSpec, grid: &TuneGrid) -> Result<TuneResult> {
    grid.validate()?;
    let assign = stratified_folds(data.responses(), t.u, grid.folds, grid.seed)?;
    let splits: Vec<(Dataset, Dataset)> = (0..grid.folds)
        .map(|j| {
            let train: Vec<usize> = (0..data.n()).filter(|&i| assign[i] != j).collect();
            let valid: Vec<usize> = (0..data.n()).filter(|&i| assign[i] == j).collect();
            (data.subset(&train), data.subset(&valid))
        })
        .collect();

    let cells: Vec<(f64, usize)> = grid
        .nu_values
        .iter()
        .flat_map(|&nu| grid.leaf_values.iter().map(move |&l| (nu, l)))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.folds).map(move |j| (c, j)))
        .collect();

    let curves: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(c, j)| {
            let (nu, l) = cells[c];
            let (train, valid) = &splits[j];
            let tt = ThresholdSpec::at_threshold(train.responses(), t.u)?;
            let model = fit(train, &tt, &grid.config(grid.max_trees, nu, l))?;
            model.loss_path(valid)
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(cells.len());
    for (c, &(nu, l)) in cells.iter().enumerate() {
        let mut curve = vec![0.0; grid.max_trees + 1];
        for j in 0..grid.folds {
            for (acc, v) in curve.iter_mut().zip(&curves[c * grid.folds + j]) {
                *acc += v;
            }
        }
        out.push(CvCell {
            nu,
            max_leaves: l,
            best_m: argmin(&curve),
            curve,
        });
    }

    let mut best = 0;
    for (i, cell) in out.iter().enumerate() {
        let b = &out[best];
        let key = (cell.max_leaves, cell.nu, cell.best_m);
        let best_key = (b.max_leaves, b.nu, b.best_m);
        if cell.best_loss() < b.best_loss() || (cell.best_loss() == b.best_loss() && lex_less(key, best_key)) {
            best = i;
        }
    }
    let b = &out[best];
    Ok(TuneResult {
        best: Tuning {
            n_trees: b.best_m,
            nu: b.nu,
            max_leaves: b.max_leaves,
        },
        best_loss: b.best_loss(),
        cells: out,
    })
}

fn lex_less(a: (usize, f64, usize), b: (usize, f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && (a.1 < b.1 || (a.1 == b.1 && a.2 < b.2)))
}

/// Tune by cross-validation, then refit on the full sample with the selected triple.
pub fn fit_tuned(data: &Dataset, t: &ThresholdSpec, grid: &TuneGrid) -> Result<(GammaEnsemble, TuneResult)> {
    let tuned = cv_tune(data, t, grid)?;
    let cfg = grid.config(0, 0.5, 2).with_tuning(tuned.best);
    let model = fit(data, t, &cfg)?;
    Ok((model, tuned))
}

/// Fitter that re-tunes at every threshold it is handed.
pub fn tuned_fitter(grid: TuneGrid) -> impl Fn(&Dataset, &ThresholdSpec) -> Result<TailFit> + Sync {
    move |data, t| {
        let (model, tuned) = fit_tuned(data, t, &grid)?;
        Ok(TailFit {
            model: Box::new(model),
            tuning: Some(tuned.best),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{hill_init, total_loss};

    fn data() -> Dataset {
        let n = 300;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 17) as f64 / 17.0, (i % 5) as f64]).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let u = ((i * 7919) % 1000) as f64 / 1000.0 + 0.0005;
                let g = 0.2 + 0.4 * rows[i][0];
                u.powf(-g)
            })
            .collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    fn small_grid() -> TuneGrid {
        TuneGrid {
            nu_values: vec![0.1, 0.3],
            leaf_values: vec![2, 3],
            max_trees: 30,
            folds: 3,
            seed: 7,
            base: BoostConfig {
                min_leaf: 3,
                ..Default::default()
            },
        }
    }

    #[test]
    fn folds_partition_and_stratify() {
        let d = data();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.2).unwrap();
        let a = stratified_folds(d.responses(), t.u, 4, 1).unwrap();
        assert_eq!(a.len(), d.n());
        let mut counts = [0usize; 4];
        for (i, &f) in a.iter().enumerate() {
            if d.responses()[i] > t.u {
                counts[f] += 1;
            }
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 1, "{counts:?}");
        assert_eq!(counts.iter().sum::<usize>(), t.k);
    }

    #[test]
    fn too_few_exceedances() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(stratified_folds(&y, 3.5, 2, 0), Err(EviError::Infeasible(_))));
    }

    #[test]
    fn singleton_grid() {
        let d = data();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.2).unwrap();
        let g = TuneGrid {
            nu_values: vec![0.2],
            leaf_values: vec![3],
            ..small_grid()
        };
        let r = cv_tune(&d, &t, &g).unwrap();
        assert_eq!(r.best.nu, 0.2);
        assert_eq!(r.best.max_leaves, 3);
        assert_eq!(r.best.n_trees, r.cells[0].best_m);
    }

    #[test]
    fn best_is_minimal_and_argmin_exhaustive() {
        let d = data();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.2).unwrap();
        let r = cv_tune(&d, &t, &small_grid()).unwrap();
        for cell in &r.cells {
            let brute = cell
                .curve
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
            assert_eq!(cell.best_m, brute.0);
            assert!(r.best_loss <= cell.best_loss());
        }
    }

    #[test]
    fn m_zero_is_hill_on_each_fold() {
        let d = data();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.2).unwrap();
        let g = small_grid();
        let r = cv_tune(&d, &t, &g).unwrap();
        let assign = stratified_folds(d.responses(), t.u, g.folds, g.seed).unwrap();
        let mut expected = 0.0;
        for j in 0..g.folds {
            let train = d.subset(&(0..d.n()).filter(|&i| assign[i] != j).collect::<Vec<_>>());
            let valid = d.subset(&(0..d.n()).filter(|&i| assign[i] == j).collect::<Vec<_>>());
            let hill = hill_init(&train, &t).unwrap();
            expected += total_loss(&valid, |_| hill, &t).unwrap();
        }
        for cell in &r.cells {
            assert!((cell.curve[0] - expected).abs() <= 1e-12 * expected.abs());
        }
    }

    #[test]
    fn deterministic() {
        let d = data();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.2).unwrap();
        assert_eq!(cv_tune(&d, &t, &small_grid()).unwrap(), cv_tune(&d, &t, &small_grid()).unwrap());
    }

    #[test]
    fn argmin_first_on_ties() {
        assert_eq!(argmin(&[3.0, 1.0, 2.0, 1.0]), 1);
    }
}
