//! Threshold selection through goodness of fit of transformed exceedances.
//!
//! Under a correct index model, `(y/u)^(-1/gamma(x))` for exceedances `y > u` is
//! approximately standard uniform. Discrepancies between these residuals and
//! their empirical CDF are scanned over a grid of tail fractions, and the
//! fraction with the smallest discrepancy picks the threshold.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::data::{Dataset, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::model::{Fitter, Tuning};

/// Grid points with fewer exceedances are skipped.
pub const DEFAULT_MIN_EXCEEDANCES: usize = 20;

/// `{0.005, 0.010, ..., 0.995}`.
pub fn default_q_grid() -> Vec<f64> {
    (1..200).map(|i| i as f64 * 0.005).collect()
}

/// Transformed exceedances, one per row with `y > u`, in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformResiduals {
    pub values: Vec<f64>,
    pub rows: Vec<usize>,
}

impl UniformResiduals {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        check_open_unit(&values)?;
        let rows = (0..values.len()).collect();
        Ok(Self { values, rows })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_open_unit(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(EviError::Domain(format!("residual {v} outside (0,1)")));
    }
    Ok(())
}

/// Bounds that keep residuals inside (0,1) when the fitted index sits at its
/// lower clamp or `y` is one ulp above `u`; discrepancies stay finite.
pub const RESIDUAL_FLOOR: f64 = 1e-300;
pub const RESIDUAL_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// `(y/u)^(-1/gamma(x))` for every exceedance, held in
/// `[RESIDUAL_FLOOR, RESIDUAL_CEIL]`.
pub fn u_transform<F>(data: &Dataset, gamma_of_x: F, t: &ThresholdSpec) -> Result<UniformResiduals>
where
    F: Fn(&[f64]) -> f64,
{
    let rows = data.exceedance_rows(t.u);
    if rows.is_empty() {
        return Err(EviError::EmptyTail);
    }
    let mut values = Vec::with_capacity(rows.len());
    for &i in &rows {
        let g = gamma_of_x(data.row(i));
        if !(g > 0.0 && g.is_finite()) {
            return Err(EviError::Domain(format!("gamma {g} at row {i} is not positive")));
        }
        let v = (data.responses()[i] / t.u).powf(-1.0 / g);
        values.push(v.clamp(RESIDUAL_FLOOR, RESIDUAL_CEIL));
    }
    check_open_unit(&values)?;
    Ok(UniformResiduals { values, rows })
}

/// Cramér-von Mises, Kolmogorov-Smirnov and Anderson-Darling type distances
/// between the residuals and their right-continuous empirical CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancies {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Discrepancies {
    pub fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::D1 => self.d1,
            Measure::D2 => self.d2,
            Measure::D3 => self.d3,
            Measure::Sum => self.d1 + self.d2 + self.d3,
        }
    }
}

pub fn discrepancies(res: &UniformResiduals) -> Result<Discrepancies> {
    let k = res.values.len();
    if k == 0 {
        return Err(EviError::EmptyTail);
    }
    check_open_unit(&res.values)?;
    let mut sorted = res.values.clone();
    sorted.sort_by(f64::total_cmp);
    let kf = k as f64;
    let (mut d1, mut d2, mut d3) = (0.0f64, 0.0f64, 0.0f64);
    for &u in &res.values {
        let f = sorted.partition_point(|&v| v <= u) as f64 / kf;
        let diff = u - f;
        let sq = diff * diff;
        d1 += sq;
        d2 = d2.max(diff.abs());
        d3 += sq / (u * (1.0 - u));
    }
    Ok(Discrepancies {
        d1: d1 / kf,
        d2,
        d3: d3 / kf,
    })
}

/// Discrepancy used to rank tail fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    D1,
    D2,
    D3,
    Sum,
}

impl FromStr for Measure {
    type Err = EviError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1" => Ok(Measure::D1),
            "d2" => Ok(Measure::D2),
            "d3" => Ok(Measure::D3),
            "sum" => Ok(Measure::Sum),
            other => Err(EviError::Parse(format!("unknown measure '{other}' (d1|d2|d3|sum)"))),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::D1 => "d1",
            Measure::D2 => "d2",
            Measure::D3 => "d3",
            Measure::Sum => "sum",
        })
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub q: f64,
    pub u: f64,
    pub k: usize,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub tuning: Option<Tuning>,
}

impl DiscrepancyReport {
    pub fn discrepancies(&self) -> Discrepancies {
        Discrepancies {
            d1: self.d1,
            d2: self.d2,
            d3: self.d3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    /// Feasible grid points, ordered by `q`.
    pub reports: Vec<DiscrepancyReport>,
    pub best_q: f64,
    pub best_u: f64,
    pub measure: Measure,
}

impl ScanResult {
    pub fn best(&self) -> &DiscrepancyReport {
        self.reports
            .iter()
            .find(|r| r.q == self.best_q)
            .expect("best q is one of the reports")
    }
}

/// Fit at every tail fraction of `q_grid` and keep the one minimising `measure`.
/// Ties go to the smallest `q`.
pub fn scan_thresholds(
    data: &Dataset,
    fitter: &Fitter<'_>,
    q_grid: &[f64],
    measure: Measure,
    min_exceedances: usize,
) -> Result<ScanResult> {
    if q_grid.is_empty() {
        return Err(EviError::InvalidConfig("empty tail-fraction grid".into()));
    }
    let mut grid = q_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let evaluated: Vec<Result<Option<DiscrepancyReport>>> = grid
        .par_iter()
        .map(|&q| {
            let t = ThresholdSpec::from_fraction(data.responses(), q)?;
            if t.k < min_exceedances.max(1) {
                warn!("skipping q = {q}: {} exceedances < {min_exceedances}", t.k);
                return Ok(None);
            }
            let attempt = fitter(data, &t).and_then(|fit| {
                let res = u_transform(data, |x| fit.model.gamma(x), &t)?;
                Ok((discrepancies(&res)?, fit.tuning))
            });
            match attempt {
                Ok((d, tuning)) => Ok(Some(DiscrepancyReport {
                    q,
                    u: t.u,
                    k: t.k,
                    d1: d.d1,
                    d2: d.d2,
                    d3: d.d3,
                    tuning,
                })),
                // a degenerate fit at one grid point does not sink the scan
                Err(
                    e @ (EviError::Domain(_)
                    | EviError::Infeasible(_)
                    | EviError::EmptyTail
                    | EviError::NonFinite(_)
                    | EviError::NonFiniteAtIteration { .. }
                    | EviError::TirNonConvergence { .. }),
                ) => {
                    warn!("skipping q = {q}: {e}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut reports = Vec::new();
    for r in evaluated {
        if let Some(rep) = r? {
            reports.push(rep);
        }
    }
    let best = pick_best(&reports, measure).map(|i| &reports[i]).ok_or_else(|| {
        EviError::Infeasible(format!(
            "no tail fraction in the grid gives a usable fit with at least {min_exceedances} exceedances"
        ))
    })?;
    let (best_q, best_u) = (best.q, best.u);
    Ok(ScanResult {
        reports,
        best_q,
        best_u,
        measure,
    })
}

/// Index of the report minimising `measure`; ties go to the smallest `q`.
pub fn pick_best(reports: &[DiscrepancyReport], measure: Measure) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, rep) in reports.iter().enumerate() {
        let v = rep.discrepancies().measure(measure);
        let better = match best {
            None => true,
            Some(b) => {
                let bv = reports[b].discrepancies().measure(measure);
                v < bv || (v == bv && rep.q < reports[b].q)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Exact two-sided KS statistic against U(0,1) and its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_uniform_test(res: &UniformResiduals) -> Result<KsTest> {
    let k = res.values.len();
    if k == 0 {
        return Err(EviError::EmptyTail);
    }
    check_open_unit(&res.values)?;
    let mut sorted = res.values.clone();
    sorted.sort_by(f64::total_cmp);
    let kf = k as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let i = i as f64;
            ((i + 1.0) / kf - u).max(u - i / kf)
        })
        .fold(0.0, f64::max);
    Ok(KsTest {
        statistic,
        p_value: kolmogorov_survival(kf.sqrt() * statistic),
    })
}

/// `P(K > lambda)` for the limiting Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    const TERM_TOL: f64 = 1e-10;
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi theta form of the CDF converges fast for small lambda
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for j in 1..=100 {
            let odd = (2 * j - 1) as f64;
            let term = (-odd * odd * c).exp();
            sum += term;
            if term < TERM_TOL {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sum += if j % 2 == 1 { term } else { -term };
            if term < TERM_TOL {
                break;
            }
        }
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}
