//! Reference estimators: the constant Hill estimator and the exponentially
//! linear tail index regression (TIR) fitted by maximum likelihood.

use crate::data::{Dataset, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::loss::hill_init;
use crate::model::{GammaModel, TailFit};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Linear predictors are clamped here so `exp` stays finite and positive.
const ETA_LIMIT: f64 = 700.0;

/// Constant extreme value index estimate; same contract as [`hill_init`].
pub fn hill(data: &Dataset, t: &ThresholdSpec) -> Result<f64> {
    hill_init(data, t)
}

/// `gamma(x) = exp(theta_0 + sum_j theta_j x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TirModel {
    /// Intercept first.
    pub theta: Vec<f64>,
    pub threshold: ThresholdSpec,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl TirModel {
    fn eta(&self, x: &[f64]) -> f64 {
        self.theta[0] + self.theta[1..].iter().zip(x).map(|(t, v)| t * v).sum::<f64>()
    }
}

impl GammaModel for TirModel {
    fn n_features(&self) -> usize {
        self.theta.len() - 1
    }

    fn gamma(&self, x: &[f64]) -> f64 {
        self.eta(x).clamp(-ETA_LIMIT, ETA_LIMIT).exp()
    }
}

pub fn predict_tir(model: &TirModel, x: &[f64]) -> Result<f64> {
    if x.len() + 1 != model.theta.len() {
        return Err(EviError::DimensionMismatch {
            expected: model.theta.len() - 1,
            got: x.len(),
        });
    }
    Ok(model.gamma(x))
}

struct Objective {
    /// Design rows `[1, x]` of the exceedances, row-major.
    z: Vec<f64>,
    log_excess: Vec<f64>,
    dim: usize,
}

impl Objective {
    fn eta(&self, i: usize, theta: &[f64]) -> f64 {
        self.z[i * self.dim..(i + 1) * self.dim]
            .iter()
            .zip(theta)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Exceedance loss `sum l_i exp(-eta_i) + eta_i`.
    fn loss(&self, theta: &[f64]) -> f64 {
        (0..self.log_excess.len())
            .map(|i| {
                let eta = self.eta(i, theta);
                self.log_excess[i] * (-eta).exp() + eta
            })
            .sum()
    }

    fn grad_hess(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut g = vec![0.0; d];
        let mut h = vec![0.0; d * d];
        for i in 0..self.log_excess.len() {
            let w = self.log_excess[i] * (-self.eta(i, theta)).exp();
            let zi = &self.z[i * d..(i + 1) * d];
            for a in 0..d {
                g[a] += (1.0 - w) * zi[a];
                for b in 0..=a {
                    h[a * d + b] += w * zi[a] * zi[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                h[b * d + a] = h[a * d + b];
            }
        }
        (g, h)
    }
}

/// Damped Newton with step halving on the exceedance loss of the TIR model.
pub fn fit_tir(data: &Dataset, t: &ThresholdSpec, tol: f64, max_iter: usize) -> Result<TirModel> {
    let rows = data.exceedance_rows(t.u);
    let dim = data.p() + 1;
    if rows.is_empty() {
        return Err(EviError::EmptyTail);
    }
    if rows.len() < dim {
        return Err(EviError::Infeasible(format!(
            "TIR needs at least {dim} exceedances, got {}",
            rows.len()
        )));
    }
    let mut z = Vec::with_capacity(rows.len() * dim);
    let mut log_excess = Vec::with_capacity(rows.len());
    for &i in &rows {
        z.push(1.0);
        z.extend_from_slice(data.row(i));
        log_excess.push((data.responses()[i] / t.u).ln());
    }
    let obj = Objective { z, log_excess, dim };

    let mut theta = vec![0.0; dim];
    theta[0] = hill_init(data, t)?.ln();
    let mut loss = obj.loss(&theta);
    let mut grad_norm = f64::INFINITY;

    for iter in 0..=max_iter {
        let (g, h) = obj.grad_hess(&theta);
        grad_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !grad_norm.is_finite() {
            break;
        }
        if grad_norm < tol {
            return Ok(TirModel {
                theta,
                threshold: *t,
                iterations: iter,
                grad_norm,
            });
        }
        if iter == max_iter {
            break;
        }
        let newton = cholesky(&h, dim).map(|l| {
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            cholesky_solve(&l, dim, &neg)
        });
        let steepest: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut moved = false;
        for dir in newton.iter().chain(std::iter::once(&steepest)) {
            if let Some((next, next_loss)) = line_search(&obj, &theta, loss, &g, dir) {
                theta = next;
                loss = next_loss;
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
    }
    Err(EviError::TirNonConvergence {
        iterations: max_iter,
        grad_norm,
        theta,
    })
}

fn line_search(obj: &Objective, theta: &[f64], loss: f64, g: &[f64], dir: &[f64]) -> Option<(Vec<f64>, f64)> {
    let slope: f64 = g.iter().zip(dir).map(|(a, b)| a * b).sum();
    if !(slope < 0.0) {
        return None;
    }
    let noise = 1e-12 * loss.abs().max(1.0);
    let mut step = 1.0;
    for _ in 0..60 {
        let next: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t + step * d).collect();
        let next_loss = obj.loss(&next);
        // a step whose predicted gain is below rounding noise is taken as is
        if next_loss.is_finite() && (next_loss <= loss || -slope * step < noise && next_loss <= loss + noise) {
            return Some((next, next_loss));
        }
        step *= 0.5;
    }
    None
}

/// Fitter for threshold scans with default tolerance and iteration cap.
pub fn tir_fitter(data: &Dataset, t: &ThresholdSpec) -> Result<TailFit> {
    let model = fit_tir(data, t, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(TailFit {
        model: Box::new(model),
        tuning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::total_loss;

    fn synthetic() -> Dataset {
        let n = 400;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![((i * 37) % 101) as f64 / 101.0 - 0.5, ((i * 53) % 89) as f64 / 89.0 - 0.5])
            .collect();
        let y = (0..n)
            .map(|i| {
                let u = ((i * 7919) % 997) as f64 / 997.0 + 0.0005;
                let g = (-1.0 + 0.8 * rows[i][0] - 0.4 * rows[i][1]).exp();
                u.powf(-g)
            })
            .collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn zero_covariates_collapse_to_hill() {
        let y: Vec<f64> = (1..=50).map(|i| 1.0 + i as f64 * 0.3).collect();
        let d = Dataset::from_rows(&vec![vec![0.0, 0.0]; 50], y).unwrap();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.4).unwrap();
        let m = fit_tir(&d, &t, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let h = hill(&d, &t).unwrap();
        assert!((m.theta[0] - h.ln()).abs() < 1e-10);
        assert_eq!(&m.theta[1..], &[0.0, 0.0]);
    }

    #[test]
    fn stops_below_tolerance_and_descends() {
        let d = synthetic();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.5).unwrap();
        let m = fit_tir(&d, &t, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(m.grad_norm < DEFAULT_TOL);
        let h = hill(&d, &t).unwrap();
        let init = total_loss(&d, |_| h, &t).unwrap();
        let fitted = total_loss(&d, |x| m.gamma(x), &t).unwrap();
        assert!(fitted <= init);
    }

    #[test]
    fn prediction_examples() {
        let t = ThresholdSpec { u: 1.0, q: 0.1, k: 10 };
        let zero = TirModel {
            theta: vec![0.0; 3],
            threshold: t,
            iterations: 0,
            grad_norm: 0.0,
        };
        assert_eq!(predict_tir(&zero, &[3.0, -2.0]).unwrap(), 1.0);
        let m = TirModel {
            theta: vec![0.3, -1.0, 2.0],
            ..zero.clone()
        };
        assert_eq!(predict_tir(&m, &[0.0, 0.0]).unwrap(), 0.3f64.exp());
        let (a, b) = ([1.0, -2.0], [3.0, 0.5]);
        let mid = [2.0, -0.75];
        let lhs = predict_tir(&m, &mid).unwrap().ln();
        let rhs = 0.5 * (predict_tir(&m, &a).unwrap().ln() + predict_tir(&m, &b).unwrap().ln());
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(predict_tir(&m, &[1.0]).is_err());
        assert!(predict_tir(&m, &[1e300, 0.0]).unwrap() > 0.0);
        assert!(predict_tir(&m, &[-1e300, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn too_few_exceedances() {
        let d = Dataset::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]], vec![1.0, 3.0, 4.0]).unwrap();
        let t = ThresholdSpec::at_threshold(d.responses(), 2.0).unwrap();
        assert!(matches!(fit_tir(&d, &t, 1e-8, 10), Err(EviError::Infeasible(_))));
    }

    #[test]
    fn non_convergence_reports_state() {
        let d = synthetic();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.5).unwrap();
        match fit_tir(&d, &t, 1e-8, 0) {
            Err(EviError::TirNonConvergence { theta, grad_norm, .. }) => {
                assert_eq!(theta.len(), 3);
                assert!(grad_norm > 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scale_invariance_of_hill() {
        let d = synthetic();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.3).unwrap();
        let scaled = d
            .with_features(d.features_flat().to_vec(), d.p())
            .unwrap();
        let ys: Vec<f64> = scaled.responses().iter().map(|y| y * 7.5).collect();
        let scaled = Dataset::from_flat(scaled.features_flat().to_vec(), d.p(), ys).unwrap();
        let ts = ThresholdSpec::at_threshold(scaled.responses(), t.u * 7.5).unwrap();
        let a = hill(&d, &t).unwrap();
        let b = hill(&scaled, &ts).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
}
