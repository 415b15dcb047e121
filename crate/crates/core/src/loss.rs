//! Pareto deviance over threshold exceedances.
//!
//! For a threshold `u`, each observation contributes
//! `psi(y, g) = (ln(y/u)/g + ln g) * 1{y > u}`, the negative log-likelihood of a
//! Pareto tail with extreme value index `g` up to constants. Rows at or below the
//! threshold contribute exactly zero to the loss and its derivatives.

use crate::data::{Dataset, ThresholdSpec};
use crate::error::{EviError, Result};

fn check(gamma: f64, u: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(EviError::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(EviError::Domain(format!("threshold must be positive, got {u}")));
    }
    Ok(())
}

/// Per-observation loss.
pub fn psi(y: f64, gamma: f64, u: f64) -> Result<f64> {
    check(gamma, u)?;
    if y > u {
        Ok((y / u).ln() / gamma + gamma.ln())
    } else {
        Ok(0.0)
    }
}

/// Negative derivative of [`psi`] with respect to `gamma`.
pub fn neg_gradient(y: f64, gamma: f64, u: f64) -> Result<f64> {
    check(gamma, u)?;
    if y > u {
        Ok(((y / u).ln() - gamma) / (gamma * gamma))
    } else {
        Ok(0.0)
    }
}

/// Second derivative of [`psi`] in `gamma`, written as `2 g / gamma + 1 / gamma^2`
/// with `g` the negative gradient.
pub fn hessian_term(y: f64, gamma: f64, u: f64) -> Result<f64> {
    check(gamma, u)?;
    if y > u {
        let g = ((y / u).ln() - gamma) / (gamma * gamma);
        Ok(2.0 * g / gamma + 1.0 / (gamma * gamma))
    } else {
        Ok(0.0)
    }
}

/// Hill estimator: mean log-excess over the threshold. Also the minimiser of the
/// loss over constant `gamma`.
pub fn hill_init(data: &Dataset, t: &ThresholdSpec) -> Result<f64> {
    hill_from_responses(data.responses(), t.u)
}

pub(crate) fn hill_from_responses(responses: &[f64], u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(EviError::Domain(format!("threshold must be positive, got {u}")));
    }
    let mut sum = 0.0;
    let mut k = 0usize;
    for &y in responses {
        if y > u {
            sum += (y / u).ln();
            k += 1;
        }
    }
    if k == 0 {
        return Err(EviError::EmptyTail);
    }
    Ok(sum / k as f64)
}

/// Sum of [`psi`] over all rows under a covariate-dependent index.
pub fn total_loss<F>(data: &Dataset, gamma_of_x: F, t: &ThresholdSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut total = 0.0;
    for (row, &y) in data.rows().zip(data.responses()) {
        if y > t.u {
            total += psi(y, gamma_of_x(row), t.u)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.5 * 3.0, 0.7, 3.0).unwrap(), 0.0);
        assert!((psi(E * 2.0, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let v = psi(E * E * 1.5, 2.0, 1.5).unwrap();
        assert!((v - (1.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(neg_gradient(0.9, 0.3, 1.0).unwrap(), 0.0);
        let u = 2.0;
        let gamma: f64 = 0.8;
        assert!(neg_gradient(u * gamma.exp(), gamma, u).unwrap().abs() < 1e-14);
        assert!((neg_gradient(E * u, 0.5, u).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hessian_examples() {
        assert_eq!(hessian_term(1.0, 0.3, 1.0).unwrap(), 0.0);
        assert!((hessian_term(E, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((hessian_term(E, 0.5, 1.0).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(psi(2.0, 0.0, 1.0).is_err());
        assert!(neg_gradient(2.0, -1.0, 1.0).is_err());
        assert!(hessian_term(2.0, 1.0, 0.0).is_err());
        // rejected even when the indicator is off
        assert!(psi(0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn exact_zero_below_threshold() {
        for &y in &[0.0, 0.3, 1.0] {
            assert_eq!(psi(y, 0.4, 1.0).unwrap().to_bits(), 0.0f64.to_bits());
            assert_eq!(neg_gradient(y, 0.4, 1.0).unwrap().to_bits(), 0.0f64.to_bits());
            assert_eq!(hessian_term(y, 0.4, 1.0).unwrap().to_bits(), 0.0f64.to_bits());
        }
    }

    #[test]
    fn hill_examples() {
        let u = 2.0;
        let d = Dataset::from_rows(&[vec![0.0], vec![0.0], vec![0.0]], vec![E * u, 1.0, 1.5]).unwrap();
        let t = ThresholdSpec::at_threshold(d.responses(), u).unwrap();
        assert!((hill_init(&d, &t).unwrap() - 1.0).abs() < 1e-15);

        let d = Dataset::from_rows(&[vec![0.0], vec![0.0]], vec![E * u, E.powi(3) * u]).unwrap();
        assert!((hill_init(&d, &t).unwrap() - 2.0).abs() < 1e-14);

        let d = Dataset::from_rows(&[vec![0.0]], vec![1.0]).unwrap();
        assert!(matches!(hill_init(&d, &t), Err(EviError::EmptyTail)));
    }

    #[test]
    fn total_loss_examples() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![0.5, 0.9]).unwrap();
        let t = ThresholdSpec::at_threshold(d.responses(), 1.0).unwrap();
        assert_eq!(total_loss(&d, |_| 0.3, &t).unwrap(), 0.0);

        let d = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![0.5, E]).unwrap();
        assert!((total_loss(&d, |_| 1.0, &t).unwrap() - 1.0).abs() < 1e-15);
    }
}
