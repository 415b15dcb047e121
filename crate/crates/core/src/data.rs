//! Observations, thresholds and covariate preprocessing.

use crate::error::{EviError, Result};

/// `n` observations of a covariate vector and a response.
///
/// Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    responses: Vec<f64>,
    n_features: usize,
    names: Option<Vec<String>>,
}

impl Dataset {
    /// Build from a row-major feature buffer of length `responses.len() * n_features`.
    pub fn from_flat(features: Vec<f64>, n_features: usize, responses: Vec<f64>) -> Result<Self> {
        if responses.is_empty() {
            return Err(EviError::InvalidConfig("dataset needs at least one row".into()));
        }
        if n_features == 0 {
            return Err(EviError::InvalidConfig("dataset needs at least one feature".into()));
        }
        if features.len() != responses.len() * n_features {
            return Err(EviError::DimensionMismatch {
                expected: responses.len() * n_features,
                got: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(EviError::NonFinite("features".into()));
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(EviError::NonFinite("responses".into()));
        }
        Ok(Self {
            features,
            responses,
            n_features,
            names: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], responses: Vec<f64>) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        if rows.len() != responses.len() {
            return Err(EviError::DimensionMismatch {
                expected: responses.len(),
                got: rows.len(),
            });
        }
        let mut flat = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(EviError::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(flat, p, responses)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(EviError::DimensionMismatch {
                expected: self.n_features,
                got: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn p(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn features_flat(&self) -> &[f64] {
        &self.features
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Column labels, falling back to `x1..xp`.
    pub fn feature_labels(&self) -> Vec<String> {
        match &self.names {
            Some(n) => n.clone(),
            None => (1..=self.n_features).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        let mut responses = Vec::with_capacity(rows.len());
        for &i in rows {
            features.extend_from_slice(self.row(i));
            responses.push(self.responses[i]);
        }
        Dataset {
            features,
            responses,
            n_features: self.n_features,
            names: self.names.clone(),
        }
    }

    /// Same responses, replaced design matrix.
    pub fn with_features(&self, features: Vec<f64>, n_features: usize) -> Result<Dataset> {
        Dataset::from_flat(features, n_features, self.responses.clone())
    }

    /// Indices of rows with `y > u`.
    pub fn exceedance_rows(&self, u: f64) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.responses[i] > u).collect()
    }
}

/// Threshold `u`, tail fraction `q` and exceedance count `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    pub u: f64,
    pub q: f64,
    pub k: usize,
}

impl ThresholdSpec {
    /// Threshold at the empirical `(1 - q)` quantile, i.e. the `ceil((1-q) n)`-th
    /// order statistic of the responses.
    pub fn from_fraction(responses: &[f64], q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(EviError::InvalidConfig(format!("tail fraction {q} not in (0,1)")));
        }
        let u = upper_quantile(responses, q)?;
        if u <= 0.0 {
            return Err(EviError::Domain(format!(
                "threshold {u} at tail fraction {q} is not positive"
            )));
        }
        let k = count_exceedances(responses, u);
        Ok(Self { u, q, k })
    }

    /// Fixed threshold; `q` is set to the realised fraction `k / n`.
    pub fn at_threshold(responses: &[f64], u: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(EviError::Domain(format!("threshold {u} must be positive and finite")));
        }
        if responses.is_empty() {
            return Err(EviError::InvalidConfig("no responses".into()));
        }
        let k = count_exceedances(responses, u);
        Ok(Self {
            u,
            q: k as f64 / responses.len() as f64,
            k,
        })
    }
}

pub fn count_exceedances(responses: &[f64], u: f64) -> usize {
    responses.iter().filter(|&&y| y > u).count()
}

/// The `ceil((1-q) n)`-th order statistic (1-based), clamped to `[1, n]`.
pub fn upper_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(EviError::InvalidConfig("quantile of empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // guard against 0.9 * 1000 = 900.0000000000001
    let rank = (((1.0 - q) * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

/// Linear-interpolation percentile (`p` in `[0, 1]`) of an unsorted sample.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Per-column min/max used for min-max normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaling {
    /// Fit on a dataset; errors on a constant column, naming it.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let labels = data.feature_labels();
        let mut min = vec![f64::INFINITY; data.p()];
        let mut max = vec![f64::NEG_INFINITY; data.p()];
        for row in data.rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        for j in 0..data.p() {
            if max[j] <= min[j] {
                return Err(EviError::Domain(format!(
                    "column '{}' is constant and cannot be min-max normalised",
                    labels[j]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| (v - self.min[j]) / (self.max[j] - self.min[j]))
            .collect()
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.p() != self.min.len() {
            return Err(EviError::DimensionMismatch {
                expected: self.min.len(),
                got: data.p(),
            });
        }
        let flat: Vec<f64> = data.rows().flat_map(|r| self.apply_row(r)).collect();
        let out = data.with_features(flat, data.p())?;
        match data.names() {
            Some(n) => out.with_names(n.to_vec()),
            None => Ok(out),
        }
    }
}

/// Min-max normalise every covariate column into `[0, 1]`.
pub fn minmax_normalize(data: &Dataset) -> Result<Dataset> {
    MinMaxScaling::fit(data)?.apply(data)
}
