//! Simulation harness comparing the boosted estimator with the TIR baseline.
//!
//! Covariates are uniform on `(-sqrt 3, sqrt 3)` with a Gaussian copula of
//! correlation `0.5^|j-k|`. Responses follow a Hall-class law with second-order
//! parameter `m` and a case-specific index `gamma(x)`. Each replicate fits both
//! estimators on a training sample and scores them by mean squared error of the
//! index on an independent test sample.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::baseline::{fit_tir, tir_fitter, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::data::{Dataset, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::linalg::cholesky;
use crate::model::{Fitter, GammaModel};
use crate::threshold::{default_q_grid, scan_thresholds, Measure, DEFAULT_MIN_EXCEEDANCES};
use crate::tuning::{fit_tuned, TuneGrid};

/// Floor applied to the radicands of case 5.
pub const CASE5_FLOOR: f64 = 1e-6;

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn correlation_factor(p: usize) -> Vec<f64> {
    let mut sigma = vec![0.0; p * p];
    for j in 0..p {
        for k in 0..p {
            sigma[j * p + k] = 0.5f64.powi((j as i32 - k as i32).abs());
        }
    }
    cholesky(&sigma, p).expect("AR(1) correlation is positive definite")
}

/// `n x p` row-major covariates drawn from `rng`.
pub fn gen_covariates_with<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> Vec<f64> {
    let l = correlation_factor(p);
    let scale = 2.0 * 3f64.sqrt();
    let mut out = Vec::with_capacity(n * p);
    let mut e = vec![0.0; p];
    for _ in 0..n {
        for v in e.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for j in 0..p {
            let z: f64 = (0..=j).map(|k| l[j * p + k] * e[k]).sum();
            out.push(scale * (normal_cdf(z) - 0.5));
        }
    }
    out
}

pub fn gen_covariates(n: usize, p: usize, seed: u64) -> Vec<f64> {
    gen_covariates_with(&mut ChaCha8Rng::seed_from_u64(seed), n, p)
}

/// Index function of simulation case `1..=5` with scale `c`.
pub fn gamma_case(case: u8, x: &[f64], c: f64) -> Result<f64> {
    let need = match case {
        1 | 3 | 4 => 3,
        2 => 1,
        5 => 4,
        _ => return Err(EviError::InvalidConfig(format!("unknown case {case}"))),
    };
    if x.len() < need {
        return Err(EviError::DimensionMismatch {
            expected: need,
            got: x.len(),
        });
    }
    Ok(match case {
        1 => c * (-0.5 * x[0] + x[1] / 3.0 - x[2] / 3.0).exp(),
        2 => {
            let p = x.len() as f64;
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 0 { -v } else { *v })
                .sum();
            c * (2.0 / p * s).exp()
        }
        3 => c * (-0.5 * x[0] * x[0] + x[1] * x[1] / 3.0 - x[2] * x[2] / 3.0).exp(),
        4 => (-(x[0] + x[1]).powi(2) - (x[1] + x[2]).powi(4)).exp(),
        _ => {
            let a = (x[0] - x[1]).max(CASE5_FLOOR);
            let b = (x[2] - x[3]).max(CASE5_FLOOR);
            // exp(-1000) underflows; stay strictly positive
            (-a.sqrt() - 1.0 / b.sqrt()).exp().max(f64::MIN_POSITIVE)
        }
    })
}

/// Which conditional response law to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgpVariant {
    /// `1 - F(y|x) = (1 + m) / (y^(1/gamma) + m)`, index exactly `gamma(x)`.
    Corrected,
    /// `F(y|x) = 1 - (1 + m) y / (y^(1/gamma) + m y)`, proper only for `gamma < 1`.
    AsPrinted,
}

impl FromStr for DgpVariant {
    type Err = EviError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(DgpVariant::Corrected),
            "as_printed" | "as-printed" => Ok(DgpVariant::AsPrinted),
            _ => Err(EviError::Parse(format!("unknown dgp variant '{s}' (corrected|as_printed)"))),
        }
    }
}

impl fmt::Display for DgpVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DgpVariant::Corrected => "corrected",
            DgpVariant::AsPrinted => "as_printed",
        })
    }
}

/// Inverse-CDF draw of a response given a uniform `u01` in `(0, 1)`.
pub fn sample_response(gamma: f64, m: f64, u01: f64, variant: DgpVariant) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(EviError::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(m >= 0.0) {
        return Err(EviError::Domain(format!("m must be nonnegative, got {m}")));
    }
    if !(u01 > 0.0 && u01 < 1.0) {
        return Err(EviError::Domain(format!("uniform draw {u01} outside (0,1)")));
    }
    let base = (1.0 + m) / u01 - m;
    match variant {
        DgpVariant::Corrected => Ok(base.powf(gamma)),
        DgpVariant::AsPrinted => {
            if gamma >= 1.0 {
                return Err(EviError::Domain(format!(
                    "as-printed law is improper for gamma = {gamma} >= 1"
                )));
            }
            Ok(base.powf(gamma / (1.0 - gamma)))
        }
    }
}

/// Closed-form survival function of the corrected law.
pub fn corrected_survival(y: f64, gamma: f64, m: f64) -> f64 {
    if y <= 1.0 {
        1.0
    } else {
        (1.0 + m) / (y.powf(1.0 / gamma) + m)
    }
}

/// Tail fraction setting of an experiment arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QChoice {
    Fixed(f64),
    /// Fraction minimising `d1 + d2 + d3` of the TIR fit, chosen per replicate.
    Optimal,
}

impl QChoice {
    pub fn label(&self) -> String {
        match self {
            QChoice::Fixed(q) => format!("{q}"),
            QChoice::Optimal => "opt".into(),
        }
    }
}

impl FromStr for QChoice {
    type Err = EviError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "opt" | "star" | "q*" => Ok(QChoice::Optimal),
            v => {
                let q: f64 = v
                    .parse()
                    .map_err(|_| EviError::Parse(format!("bad tail fraction '{v}'")))?;
                if !(q > 0.0 && q < 1.0) {
                    return Err(EviError::InvalidConfig(format!("tail fraction {q} not in (0,1)")));
                }
                Ok(QChoice::Fixed(q))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub case: u8,
    pub n: usize,
    pub n_star: usize,
    pub p: usize,
    pub m: f64,
    pub c: f64,
    pub q_list: Vec<QChoice>,
    pub replications: usize,
    pub seed: u64,
    pub variant: DgpVariant,
    /// CV grid for the boosted fit; its seed is replaced per replicate.
    pub tune: TuneGrid,
    /// Grid searched for the optimal tail fraction.
    pub q_star_grid: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            case: 1,
            n: 1000,
            n_star: 1000,
            p: 10,
            m: 0.10,
            c: 1.0 / 3.0,
            q_list: vec![
                QChoice::Fixed(0.1),
                QChoice::Fixed(0.05),
                QChoice::Fixed(0.025),
                QChoice::Optimal,
            ],
            replications: 100,
            seed: 0,
            variant: DgpVariant::Corrected,
            tune: TuneGrid::default(),
            q_star_grid: default_q_grid(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.case) {
            return Err(EviError::InvalidConfig(format!("case must be 1..5, got {}", self.case)));
        }
        if self.n == 0 || self.n_star == 0 || self.replications == 0 {
            return Err(EviError::InvalidConfig("n, n_star and R must be positive".into()));
        }
        let need = match self.case {
            5 => 4,
            2 => 1,
            _ => 3,
        };
        if self.p < need {
            return Err(EviError::InvalidConfig(format!("case {} needs p >= {need}", self.case)));
        }
        if self.q_list.is_empty() {
            return Err(EviError::InvalidConfig("empty tail-fraction list".into()));
        }
        if !(self.c > 0.0) || !(self.m >= 0.0) {
            return Err(EviError::InvalidConfig("C must be positive and m nonnegative".into()));
        }
        self.tune.validate()
    }
}

/// One training sample drawn from the configured law.
pub fn simulate_dataset<R: Rng + ?Sized>(rng: &mut R, cfg: &SimConfig, n: usize) -> Result<(Dataset, Vec<f64>)> {
    let x = gen_covariates_with(rng, n, cfg.p);
    let mut y = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for row in x.chunks_exact(cfg.p) {
        let g = gamma_case(cfg.case, row, cfg.c)?;
        let u: f64 = rng.sample(Open01);
        y.push(sample_response(g, cfg.m, u, cfg.variant)?);
        truth.push(g);
    }
    Ok((Dataset::from_flat(x, cfg.p, y)?, truth))
}

/// Mean squared error between estimated and true index values.
pub fn mean_squared_error(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / truth.len() as f64
}

/// Tail fraction minimising `d1 + d2 + d3` of `fitter` over `grid`.
pub fn optimal_fraction(data: &Dataset, fitter: &Fitter<'_>, grid: &[f64]) -> Result<f64> {
    Ok(scan_thresholds(data, fitter, grid, Measure::Sum, DEFAULT_MIN_EXCEEDANCES)?.best_q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    EviBoost,
    Tir,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::EviBoost => "EVIboost",
            Method::Tir => "TIR",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRecord {
    pub case: u8,
    pub q: String,
    /// Tail fraction actually used; differs from `q` for the optimal arm.
    pub q_used: f64,
    pub method: Method,
    pub replicate: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub case: u8,
    pub q: String,
    pub method: Method,
    pub median: f64,
    /// `median(TIR) / median(EVIboost)`, shared by both rows of an arm.
    pub efficiency: f64,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub deltas: Vec<DeltaRecord>,
    pub summary: Vec<SummaryRecord>,
}

impl ExperimentReport {
    pub fn efficiency(&self, q: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.q == q).map(|s| s.efficiency)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Generator for replicate `r`: same key, independent stream.
pub fn replicate_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

fn run_replicate(cfg: &SimConfig, r: usize) -> Result<Vec<(usize, f64, Method, Option<f64>)>> {
    let mut rng = replicate_rng(cfg.seed, r);
    let (train, _) = simulate_dataset(&mut rng, cfg, cfg.n)?;
    let test_x = gen_covariates_with(&mut rng, cfg.n_star, cfg.p);
    let test = Dataset::from_flat(test_x, cfg.p, vec![1.0; cfg.n_star])?;
    let truth: Vec<f64> = test
        .rows()
        .map(|x| gamma_case(cfg.case, x, cfg.c))
        .collect::<Result<_>>()?;
    let tune = TuneGrid {
        seed: rng.next_u64(),
        ..cfg.tune.clone()
    };

    let mut out = Vec::new();
    for (arm, choice) in cfg.q_list.iter().enumerate() {
        let q = match choice {
            QChoice::Fixed(q) => *q,
            QChoice::Optimal => optimal_fraction(&train, &tir_fitter, &cfg.q_star_grid)?,
        };
        let t = ThresholdSpec::from_fraction(train.responses(), q)?;
        let (evi, _) = fit_tuned(&train, &t, &tune)?;
        out.push((arm, q, Method::EviBoost, Some(mean_squared_error(&evi.gamma_all(&test), &truth))));
        let tir = match fit_tir(&train, &t, DEFAULT_TOL, DEFAULT_MAX_ITER) {
            Ok(m) => Some(mean_squared_error(&m.gamma_all(&test), &truth)),
            Err(EviError::TirNonConvergence { .. }) | Err(EviError::Infeasible(_)) => None,
            Err(e) => return Err(e),
        };
        out.push((arm, q, Method::Tir, tir));
    }
    Ok(out)
}

/// Run all replicates and summarise per tail-fraction arm.
pub fn run_experiment(cfg: &SimConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let per_rep: Vec<_> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect::<Result<_>>()?;

    let mut deltas = Vec::new();
    let mut missing = vec![[0usize; 2]; cfg.q_list.len()];
    for (r, rows) in per_rep.iter().enumerate() {
        for &(arm, q_used, method, delta) in rows {
            match delta {
                Some(delta) => deltas.push(DeltaRecord {
                    case: cfg.case,
                    q: cfg.q_list[arm].label(),
                    q_used,
                    method,
                    replicate: r,
                    delta,
                }),
                None => missing[arm][method as usize] += 1,
            }
        }
    }

    let mut summary = Vec::new();
    for (arm, choice) in cfg.q_list.iter().enumerate() {
        let label = choice.label();
        let med = |m: Method| {
            let v: Vec<f64> = deltas
                .iter()
                .filter(|d| d.q == label && d.method == m)
                .map(|d| d.delta)
                .collect();
            median(&v)
        };
        let (evi, tir) = (med(Method::EviBoost), med(Method::Tir));
        let efficiency = tir / evi;
        for (method, median) in [(Method::EviBoost, evi), (Method::Tir, tir)] {
            summary.push(SummaryRecord {
                case: cfg.case,
                q: label.clone(),
                method,
                median,
                efficiency,
                missing: missing[arm][method as usize],
            });
        }
    }
    Ok(ExperimentReport { deltas, summary })
}
