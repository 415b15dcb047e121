//! CSV ingestion and output, plus the saved-model file format.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boost::GammaEnsemble;
use crate::data::{Dataset, MinMaxScaling, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::tree::{Node, NodeKind, RegressionTree};

const MODEL_FORMAT: &str = "eviboost-model";
const MODEL_VERSION: u32 = 1;

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header and rows of a CSV file, all cells still text.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EviError::Parse(format!("column '{name}' not found in header {:?}", self.header)))
    }

    /// Cell `(row, col)` parsed as a finite number.
    pub fn number(&self, row: usize, col: usize) -> Result<f64> {
        let cell = self.rows[row][col].trim();
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(EviError::Parse(format!(
                "non-numeric cell '{cell}' at data row {}, column '{}'",
                row + 1,
                self.header[col]
            ))),
        }
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| EviError::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| EviError::Parse(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

/// Which columns become covariates and how the response is read.
#[derive(Debug, Clone, Default)]
pub struct ColumnSpec {
    /// Response column; `None` reads covariates only (responses set to 1).
    pub target: Option<String>,
    /// Columns ignored entirely, e.g. a date.
    pub drop: Vec<String>,
    /// Explicit covariate list; overrides "every other column".
    pub features: Option<Vec<String>>,
    pub abs_response: bool,
}

/// Dataset from a CSV with a header row.
pub fn read_dataset(path: &Path, spec: &ColumnSpec) -> Result<Dataset> {
    let table = read_table(path)?;
    let target = spec.target.as_deref().map(|t| table.column_index(t)).transpose()?;
    for d in &spec.drop {
        table.column_index(d)?;
    }
    let feature_cols: Vec<usize> = match &spec.features {
        Some(names) => names.iter().map(|n| table.column_index(n)).collect::<Result<_>>()?,
        None => (0..table.header.len())
            .filter(|&j| Some(j) != target && !spec.drop.contains(&table.header[j]))
            .collect(),
    };
    if table.rows.is_empty() {
        return Err(EviError::Parse(format!("{} has no data rows", path.display())));
    }
    let mut flat = Vec::with_capacity(table.rows.len() * feature_cols.len());
    let mut y = Vec::with_capacity(table.rows.len());
    for i in 0..table.rows.len() {
        for &j in &feature_cols {
            flat.push(table.number(i, j)?);
        }
        y.push(match target {
            Some(j) => {
                let v = table.number(i, j)?;
                if spec.abs_response {
                    v.abs()
                } else {
                    v
                }
            }
            None => 1.0,
        });
    }
    let names = feature_cols.iter().map(|&j| table.header[j].clone()).collect();
    Dataset::from_flat(flat, feature_cols.len(), y)?.with_names(names)
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> EviError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => EviError::Io(e),
        other => EviError::Parse(format!("{other:?}")),
    }
}

/// A fitted ensemble with the covariate scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub ensemble: GammaEnsemble,
    pub scaling: Option<MinMaxScaling>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    gamma0: f64,
    nu: f64,
    clamp: (f64, f64),
    threshold: ThresholdRecord,
    n_features: usize,
    feature_names: Option<Vec<String>>,
    scaling: Option<ScalingRecord>,
    trees: Vec<Vec<NodeRecord>>,
}

#[derive(Serialize, Deserialize)]
struct ThresholdRecord {
    u: f64,
    q: f64,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct ScalingRecord {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NodeRecord {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
        count: usize,
        sse: f64,
    },
    Leaf {
        value: f64,
        count: usize,
        sse: f64,
    },
}

impl From<&Node> for NodeRecord {
    fn from(n: &Node) -> Self {
        match n.kind {
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
                gain,
            } => NodeRecord::Split {
                feature,
                threshold,
                left,
                right,
                gain,
                count: n.count,
                sse: n.sse,
            },
            NodeKind::Leaf { value } => NodeRecord::Leaf {
                value,
                count: n.count,
                sse: n.sse,
            },
        }
    }
}

impl From<NodeRecord> for Node {
    fn from(r: NodeRecord) -> Self {
        match r {
            NodeRecord::Split {
                feature,
                threshold,
                left,
                right,
                gain,
                count,
                sse,
            } => Node {
                kind: NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    gain,
                },
                count,
                sse,
            },
            NodeRecord::Leaf { value, count, sse } => Node {
                kind: NodeKind::Leaf { value },
                count,
                sse,
            },
        }
    }
}

impl SavedModel {
    pub fn to_json(&self) -> String {
        let e = &self.ensemble;
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            gamma0: e.gamma0,
            nu: e.nu,
            clamp: e.clamp,
            threshold: ThresholdRecord {
                u: e.threshold.u,
                q: e.threshold.q,
                k: e.threshold.k,
            },
            n_features: e.n_features,
            feature_names: e.feature_names.clone(),
            scaling: self.scaling.as_ref().map(|s| ScalingRecord {
                min: s.min.clone(),
                max: s.max.clone(),
            }),
            trees: e.trees.iter().map(|t| t.nodes().iter().map(NodeRecord::from).collect()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| EviError::Parse(format!("model file: {e}")))?;
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(EviError::Parse(format!(
                "unsupported model format {} v{}",
                f.format, f.version
            )));
        }
        let trees = f
            .trees
            .into_iter()
            .map(|nodes| RegressionTree::from_nodes(nodes.into_iter().map(Node::from).collect(), f.n_features))
            .collect::<Result<_>>()?;
        let scaling = f.scaling.map(|s| MinMaxScaling { min: s.min, max: s.max });
        if let Some(s) = &scaling {
            if s.min.len() != f.n_features || s.max.len() != f.n_features {
                return Err(EviError::Parse("scaling length differs from feature count".into()));
            }
        }
        Ok(Self {
            ensemble: GammaEnsemble {
                gamma0: f.gamma0,
                nu: f.nu,
                clamp: f.clamp,
                trees,
                threshold: ThresholdSpec {
                    u: f.threshold.u,
                    q: f.threshold.q,
                    k: f.threshold.k,
                },
                n_features: f.n_features,
                feature_names: f.feature_names,
            },
            scaling,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Predictions for raw (unscaled) covariate rows.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        match &self.scaling {
            Some(s) => self.ensemble.predict_all(&s.apply(data)?),
            None => self.ensemble.predict_all(data),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::{fit, BoostConfig};

    #[test]
    fn float_text_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn model_round_trip() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 7) as f64, (i % 11) as f64 * 0.3]).collect();
        let y: Vec<f64> = (0..60).map(|i| 1.0 + ((i * 31) % 17) as f64 * 0.4 + (i % 7) as f64).collect();
        let d = Dataset::from_rows(&rows, y).unwrap();
        let t = ThresholdSpec::from_fraction(d.responses(), 0.5).unwrap();
        let cfg = BoostConfig {
            n_trees: 15,
            nu: 0.1,
            max_leaves: 3,
            min_leaf: 2,
            ..Default::default()
        };
        let m = SavedModel {
            ensemble: fit(&d, &t, &cfg).unwrap(),
            scaling: Some(MinMaxScaling::fit(&d).unwrap()),
        };
        let back = SavedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), m.to_json());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(SavedModel::from_json("{}").is_err());
        assert!(SavedModel::from_json("not json").is_err());
    }
}
