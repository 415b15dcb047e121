//! Batch command-line interface. Every command writes its CSV outputs and a
//! `manifest.txt` into the output directory; the manifest is itself a valid
//! `--config` file that reproduces the run.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

use crate::baseline::{fit_tir, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::boost::{fit, fixed_fitter, BoostConfig, GammaEnsemble, TreeRows};
use crate::data::{Dataset, MinMaxScaling, ThresholdSpec};
use crate::error::{EviError, Result};
use crate::interpret::{default_grid, modified_importance, partial_dependence};
use crate::io::{fmt_f64, read_dataset, write_csv, ColumnSpec, SavedModel};
use crate::model::{Fitter, GammaModel};
use crate::sim::{run_experiment, DgpVariant, QChoice, SimConfig};
use crate::threshold::{default_q_grid, discrepancies, ks_uniform_test, scan_thresholds, u_transform, Measure, ScanResult};
use crate::tuning::{fit_tuned, tuned_fitter, TuneGrid, TuneResult};

#[derive(Debug, Parser)]
#[command(name = "eviboost", version, about = "Covariate-dependent extreme value index estimation by gradient boosting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a threshold, tune, fit and write the model with diagnostics
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Evaluate a saved model on a CSV of covariates
    #[command(args_override_self = true)]
    Predict(PredictArgs),
    /// Cross-validate (nu, L, M) at a fixed threshold
    #[command(args_override_self = true)]
    Tune(TuneArgs),
    /// Discrepancy scan over tail fractions
    #[command(args_override_self = true)]
    Scan(ScanArgs),
    /// Split-gain importance with shadow-feature correction
    #[command(args_override_self = true)]
    Importance(ImportanceArgs),
    /// Partial dependence of a saved model
    #[command(args_override_self = true)]
    Pdp(PdpArgs),
    /// Monte Carlo comparison against the TIR baseline
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
}

fn display<T: Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_list<T: Display, S: Serializer>(v: &[T], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

fn display_opt_list<T: Display, S: Serializer>(v: &Option<Vec<T>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => display_list(v, s),
        None => s.serialize_none(),
    }
}

fn qchoice_list<S: Serializer>(v: &[QChoice], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&v.iter().map(QChoice::label).collect::<Vec<_>>().join(","))
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CommonArgs {
    /// Directory receiving all outputs
    #[arg(long, env = "EVIBOOST_OUTPUT_DIR", default_value = "eviboost-out")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flat key=value file of flag values; flags given on the command line win
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DataArgs {
    /// CSV with a header row
    #[arg(long)]
    pub input: PathBuf,
    /// Response column
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Columns to ignore, comma separated
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set)]
    #[serde(serialize_with = "display_list")]
    pub drop: Vec<String>,
    /// Use |y| as the response
    #[arg(long)]
    pub abs_response: bool,
    /// Min-max normalise covariates before fitting
    #[arg(long)]
    pub normalize: bool,
}

impl DataArgs {
    fn load(&self) -> Result<(Dataset, Option<MinMaxScaling>)> {
        let data = read_dataset(
            &self.input,
            &ColumnSpec {
                target: Some(self.target.clone()),
                drop: self.drop.clone(),
                features: None,
                abs_response: self.abs_response,
            },
        )?;
        if self.normalize {
            let s = MinMaxScaling::fit(&data)?;
            Ok((s.apply(&data)?, Some(s)))
        } else {
            Ok((data, None))
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BoostArgs {
    /// Shrinkage values searched by cross-validation
    #[arg(long = "nu-grid", value_delimiter = ',', action = clap::ArgAction::Set, default_values_t = [0.005, 0.0075, 0.01, 0.05, 0.1])]
    #[serde(serialize_with = "display_list")]
    pub nu_grid: Vec<f64>,
    /// Leaves-per-tree values searched by cross-validation
    #[arg(long = "L-grid", value_delimiter = ',', action = clap::ArgAction::Set, default_values_t = [2usize, 3, 4, 8])]
    #[serde(rename = "L-grid", serialize_with = "display_list")]
    pub l_grid: Vec<usize>,
    /// Largest number of trees considered
    #[arg(long = "M-max", default_value_t = 1000)]
    #[serde(rename = "M-max")]
    pub m_max: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,
    /// Grow trees on every row instead of the exceedances only
    #[arg(long)]
    pub all_rows: bool,
    /// Fixed number of trees; with --nu and --leaves skips cross-validation
    #[arg(long, requires_all = ["nu", "leaves"])]
    pub trees: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub leaves: Option<usize>,
}

impl BoostArgs {
    fn base(&self, seed: u64) -> BoostConfig {
        BoostConfig {
            min_leaf: self.min_leaf,
            seed,
            tree_rows: if self.all_rows { TreeRows::All } else { TreeRows::Exceedances },
            ..Default::default()
        }
    }

    fn grid(&self, seed: u64) -> TuneGrid {
        TuneGrid {
            nu_values: self.nu_grid.clone(),
            leaf_values: self.l_grid.clone(),
            max_trees: self.m_max,
            folds: self.folds,
            seed,
            base: self.base(seed),
        }
    }

    fn fixed(&self, seed: u64) -> Option<BoostConfig> {
        match (self.trees, self.nu, self.leaves) {
            (Some(n_trees), Some(nu), Some(max_leaves)) => Some(BoostConfig {
                n_trees,
                nu,
                max_leaves,
                ..self.base(seed)
            }),
            _ => None,
        }
    }

    /// Fixed-capacity fit if requested, otherwise tune then refit.
    fn fit(&self, data: &Dataset, t: &ThresholdSpec, seed: u64) -> Result<(GammaEnsemble, Option<TuneResult>)> {
        match self.fixed(seed) {
            Some(cfg) => Ok((fit(data, t, &cfg)?, None)),
            None => {
                let (m, r) = fit_tuned(data, t, &self.grid(seed))?;
                Ok((m, Some(r)))
            }
        }
    }

    fn fitter(&self, seed: u64) -> Box<Fitter<'static>> {
        match self.fixed(seed) {
            Some(cfg) => Box::new(fixed_fitter(cfg)),
            None => Box::new(tuned_fitter(self.grid(seed))),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ThresholdArgs {
    /// Threshold value; takes precedence over --q and --q-grid
    #[arg(long)]
    pub u: Option<f64>,
    /// Upper tail fraction; takes precedence over --q-grid
    #[arg(long)]
    pub q: Option<f64>,
    /// Tail fractions scanned when neither --u nor --q is given
    #[arg(long = "q-grid", value_delimiter = ',', action = clap::ArgAction::Set)]
    #[serde(serialize_with = "display_opt_list")]
    pub q_grid: Option<Vec<f64>>,
    /// Discrepancy minimised by the scan: d1, d2, d3 or sum
    #[arg(long, default_value = "sum")]
    #[serde(serialize_with = "display")]
    pub measure: Measure,
    /// Grid points with fewer exceedances are skipped
    #[arg(long, default_value_t = crate::threshold::DEFAULT_MIN_EXCEEDANCES)]
    pub min_exceedances: usize,
}

impl ThresholdArgs {
    fn fixed(&self, data: &Dataset) -> Option<Result<ThresholdSpec>> {
        match (self.u, self.q) {
            (Some(u), _) => Some(ThresholdSpec::at_threshold(data.responses(), u)),
            (None, Some(q)) => Some(ThresholdSpec::from_fraction(data.responses(), q)),
            _ => None,
        }
    }

    fn fixed_or_default(&self, data: &Dataset, q: f64) -> Result<ThresholdSpec> {
        self.fixed(data)
            .unwrap_or_else(|| ThresholdSpec::from_fraction(data.responses(), q))
    }

    fn grid(&self) -> Vec<f64> {
        self.q_grid.clone().unwrap_or_else(default_q_grid)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub threshold: ThresholdArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PredictArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Saved model file
    #[arg(long)]
    pub model: PathBuf,
    /// CSV holding the model's covariate columns
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TuneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub threshold: ThresholdArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub threshold: ThresholdArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ImportanceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub threshold: ThresholdArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
    /// Shadow permutations averaged
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PdpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Feature name or zero-based index; repeat for a joint grid
    #[arg(long, required = true)]
    #[serde(serialize_with = "display_list")]
    pub feature: Vec<String>,
    /// Grid points per feature, spanning the 1st to 99th percentile
    #[arg(long, default_value_t = 50)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Index function 1..5
    #[arg(long, default_value_t = 1)]
    pub case: u8,
    /// Second-order parameter of the response law
    #[arg(long, default_value_t = 0.10)]
    pub m: f64,
    /// Training sample size
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Test sample size
    #[arg(long, default_value_t = 1000)]
    pub n_star: usize,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Scale of the index in cases 1 to 3
    #[arg(long = "C", default_value_t = 1.0 / 3.0)]
    #[serde(rename = "C")]
    pub c: f64,
    /// Replications
    #[arg(long = "R", default_value_t = 100)]
    #[serde(rename = "R")]
    pub r: usize,
    /// Tail fractions; `opt` selects one per replicate from a TIR discrepancy scan
    #[arg(long = "q-grid", value_delimiter = ',', action = clap::ArgAction::Set, default_values_t = [QChoice::Fixed(0.1), QChoice::Fixed(0.05), QChoice::Fixed(0.025), QChoice::Optimal])]
    #[serde(rename = "q-grid", serialize_with = "qchoice_list")]
    pub q_list: Vec<QChoice>,
    /// corrected or as_printed
    #[arg(long, default_value = "corrected")]
    #[serde(serialize_with = "display")]
    pub dgp_variant: DgpVariant,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
}

impl Display for QChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Config-file entries turned into `--key=value` arguments.
pub fn config_args(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| EviError::Parse(format!("config line {}: expected key=value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" | "" => {}
            v => out.push(format!("--{key}={v}").into()),
        }
    }
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Splice config-file arguments in front of the command-line flags so the
/// latter override them.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let extra = config_args(&fs::read_to_string(&path)?)?;
    let at = args.len().min(2);
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn manifest_text<T: Serialize>(command: &str, args: &T) -> String {
    let value = serde_json::to_value(args).expect("arguments serialise");
    let mut out = format!("# eviboost {} {command}\n", env!("CARGO_PKG_VERSION"));
    if let serde_json::Value::Object(map) = value {
        let mut entries: Vec<_> = map.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, v) in entries {
            match v {
                serde_json::Value::Null => {}
                serde_json::Value::String(s) => out.push_str(&format!("{k}={s}\n")),
                other => out.push_str(&format!("{k}={other}\n")),
            }
        }
    }
    out
}

fn prepare_output(common: &CommonArgs, command: &str, args: &impl Serialize) -> Result<PathBuf> {
    fs::create_dir_all(&common.output_dir)?;
    fs::write(common.output_dir.join("manifest.txt"), manifest_text(command, args))?;
    Ok(common.output_dir.clone())
}

fn cv_rows(r: &TuneResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for cell in &r.cells {
        for (m, loss) in cell.curve.iter().enumerate() {
            rows.push(vec![fmt_f64(cell.nu), cell.max_leaves.to_string(), m.to_string(), fmt_f64(*loss)]);
        }
    }
    rows
}

fn write_scan(path: &Path, scan: &ScanResult) -> Result<()> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    write_csv(
        path,
        &["q", "u", "k", "d1", "d2", "d3", "selected_M", "selected_nu", "selected_L"],
        scan.reports.iter().map(|r| {
            vec![
                fmt_f64(r.q),
                fmt_f64(r.u),
                r.k.to_string(),
                fmt_f64(r.d1),
                fmt_f64(r.d2),
                fmt_f64(r.d3),
                opt(r.tuning.map(|t| t.n_trees.to_string())),
                opt(r.tuning.map(|t| fmt_f64(t.nu))),
                opt(r.tuning.map(|t| t.max_leaves.to_string())),
            ]
        }),
    )
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let (data, scaling) = args.data.load()?;
    let out = prepare_output(&args.common, "fit", args)?;
    let seed = args.common.seed;
    let t = match args.threshold.fixed(&data) {
        Some(t) => t?,
        None => {
            let fitter = args.boost.fitter(seed);
            let scan = scan_thresholds(
                &data,
                fitter.as_ref(),
                &args.threshold.grid(),
                args.threshold.measure,
                args.threshold.min_exceedances,
            )?;
            write_scan(&out.join("scan.csv"), &scan)?;
            ThresholdSpec::from_fraction(data.responses(), scan.best_q)?
        }
    };
    let (model, tuned) = args.boost.fit(&data, &t, seed)?;
    if let Some(r) = &tuned {
        write_csv(&out.join("cv_table.csv"), &["nu", "L", "m", "cv_loss"], cv_rows(r))?;
    }

    let gamma = model.gamma_all(&data);
    write_csv(
        &out.join("gamma.csv"),
        &["row", "gamma"],
        gamma.iter().enumerate().map(|(i, g)| vec![i.to_string(), fmt_f64(*g)]),
    )?;
    let res = u_transform(&data, |x| model.gamma(x), &t)?;
    write_csv(
        &out.join("residuals.csv"),
        &["row", "y", "gamma", "u_tilde"],
        res.rows.iter().zip(&res.values).map(|(&i, &v)| {
            vec![i.to_string(), fmt_f64(data.responses()[i]), fmt_f64(gamma[i]), fmt_f64(v)]
        }),
    )?;
    let ks = ks_uniform_test(&res)?;
    let d = discrepancies(&res)?;
    write_csv(
        &out.join("ks.csv"),
        &["u", "q", "k", "ks_statistic", "p_value", "d1", "d2", "d3"],
        [vec![
            fmt_f64(t.u),
            fmt_f64(t.q),
            t.k.to_string(),
            fmt_f64(ks.statistic),
            fmt_f64(ks.p_value),
            fmt_f64(d.d1),
            fmt_f64(d.d2),
            fmt_f64(d.d3),
        ]],
    )?;
    match fit_tir(&data, &t, DEFAULT_TOL, DEFAULT_MAX_ITER) {
        Ok(tir) => {
            let labels = std::iter::once("intercept".to_string()).chain(data.feature_labels());
            write_csv(
                &out.join("tir_theta.csv"),
                &["term", "theta"],
                labels.zip(&tir.theta).map(|(l, v)| vec![l, fmt_f64(*v)]),
            )?;
        }
        Err(e) => log::warn!("TIR baseline skipped: {e}"),
    }
    SavedModel { ensemble: model, scaling }.save(&out.join("model.json"))
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Vec<f64>> {
    let saved = SavedModel::load(&args.model)?;
    let data = read_dataset(
        &args.input,
        &ColumnSpec {
            features: saved.ensemble.feature_names.clone(),
            ..Default::default()
        },
    )?;
    let out = prepare_output(&args.common, "predict", args)?;
    let gamma = saved.predict_dataset(&data)?;
    write_csv(
        &out.join("predictions.csv"),
        &["row", "gamma"],
        gamma.iter().enumerate().map(|(i, g)| vec![i.to_string(), fmt_f64(*g)]),
    )?;
    Ok(gamma)
}

pub fn cmd_tune(args: &TuneArgs) -> Result<TuneResult> {
    let (data, _) = args.data.load()?;
    let out = prepare_output(&args.common, "tune", args)?;
    let t = args.threshold.fixed_or_default(&data, 0.1)?;
    let r = crate::tuning::cv_tune(&data, &t, &args.boost.grid(args.common.seed))?;
    write_csv(&out.join("cv_table.csv"), &["nu", "L", "m", "cv_loss"], cv_rows(&r))?;
    write_csv(
        &out.join("tune_best.csv"),
        &["u", "q", "k", "nu", "L", "M", "cv_loss"],
        [vec![
            fmt_f64(t.u),
            fmt_f64(t.q),
            t.k.to_string(),
            fmt_f64(r.best.nu),
            r.best.max_leaves.to_string(),
            r.best.n_trees.to_string(),
            fmt_f64(r.best_loss),
        ]],
    )?;
    Ok(r)
}

pub fn cmd_scan(args: &ScanArgs) -> Result<ScanResult> {
    let (data, _) = args.data.load()?;
    let out = prepare_output(&args.common, "scan", args)?;
    let fitter = args.boost.fitter(args.common.seed);
    let scan = scan_thresholds(
        &data,
        fitter.as_ref(),
        &args.threshold.grid(),
        args.threshold.measure,
        args.threshold.min_exceedances,
    )?;
    write_scan(&out.join("scan.csv"), &scan)?;
    Ok(scan)
}

pub fn cmd_importance(args: &ImportanceArgs) -> Result<crate::interpret::ImportanceReport> {
    let (data, _) = args.data.load()?;
    let out = prepare_output(&args.common, "importance", args)?;
    let seed = args.common.seed;
    let t = args.threshold.fixed_or_default(&data, 0.1)?;
    let cfg = match args.boost.fixed(seed) {
        Some(cfg) => cfg,
        None => {
            let r = crate::tuning::cv_tune(&data, &t, &args.boost.grid(seed))?;
            args.boost.base(seed).with_tuning(r.best)
        }
    };
    let rep = modified_importance(&data, &t, &cfg, args.repeats)?;
    write_csv(
        &out.join("importance.csv"),
        &["feature", "raw", "shadow", "corrected"],
        data.feature_labels().into_iter().enumerate().map(|(j, name)| {
            vec![name, fmt_f64(rep.raw[j]), fmt_f64(rep.shadow[j]), fmt_f64(rep.corrected[j])]
        }),
    )?;
    Ok(rep)
}

fn resolve_feature(labels: &[String], key: &str) -> Result<usize> {
    if let Some(j) = labels.iter().position(|l| l == key) {
        return Ok(j);
    }
    match key.parse::<usize>() {
        Ok(j) if j < labels.len() => Ok(j),
        _ => Err(EviError::InvalidConfig(format!("unknown feature '{key}'"))),
    }
}

pub fn cmd_pdp(args: &PdpArgs) -> Result<crate::interpret::PdpCurve> {
    let saved = SavedModel::load(&args.model)?;
    let raw = read_dataset(
        &args.input,
        &ColumnSpec {
            features: saved.ensemble.feature_names.clone(),
            ..Default::default()
        },
    )?;
    let data = match &saved.scaling {
        Some(s) => s.apply(&raw)?,
        None => raw,
    };
    let out = prepare_output(&args.common, "pdp", args)?;
    let labels = data.feature_labels();
    let features: Vec<usize> = args
        .feature
        .iter()
        .map(|f| resolve_feature(&labels, f))
        .collect::<Result<_>>()?;
    let axes: Vec<Vec<f64>> = features
        .iter()
        .map(|&j| default_grid(&data, j, args.points))
        .collect::<Result<_>>()?;
    let mut grid: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let curve = partial_dependence(&saved.ensemble, &data, &features, &grid)?;
    let mut header: Vec<&str> = features.iter().map(|&j| labels[j].as_str()).collect();
    header.push("pdp");
    write_csv(
        &out.join("pdp.csv"),
        &header,
        curve.grid.iter().zip(&curve.values).map(|(p, v)| {
            p.iter().map(|x| fmt_f64(*x)).chain(std::iter::once(fmt_f64(*v))).collect::<Vec<_>>()
        }),
    )?;
    Ok(curve)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<crate::sim::ExperimentReport> {
    let out = prepare_output(&args.common, "simulate", args)?;
    let cfg = SimConfig {
        case: args.case,
        n: args.n,
        n_star: args.n_star,
        p: args.p,
        m: args.m,
        c: args.c,
        q_list: args.q_list.clone(),
        replications: args.r,
        seed: args.common.seed,
        variant: args.dgp_variant,
        tune: args.boost.grid(args.common.seed),
        q_star_grid: default_q_grid(),
    };
    let rep = run_experiment(&cfg)?;
    write_csv(
        &out.join("deltas.csv"),
        &["case", "q", "q_used", "method", "r", "delta"],
        rep.deltas.iter().map(|d| {
            vec![
                d.case.to_string(),
                d.q.clone(),
                fmt_f64(d.q_used),
                d.method.to_string(),
                d.replicate.to_string(),
                fmt_f64(d.delta),
            ]
        }),
    )?;
    write_csv(
        &out.join("summary.csv"),
        &["case", "q", "method", "median", "efficiency", "missing"],
        rep.summary.iter().map(|s| {
            vec![
                s.case.to_string(),
                s.q.clone(),
                s.method.to_string(),
                fmt_f64(s.median),
                fmt_f64(s.efficiency),
                s.missing.to_string(),
            ]
        }),
    )?;
    Ok(rep)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => {
            for g in cmd_predict(a)? {
                println!("{}", fmt_f64(g));
            }
            Ok(())
        }
        Command::Tune(a) => {
            let r = cmd_tune(a)?;
            println!("nu={} L={} M={} cv_loss={}", r.best.nu, r.best.max_leaves, r.best.n_trees, r.best_loss);
            Ok(())
        }
        Command::Scan(a) => {
            let s = cmd_scan(a)?;
            println!("q={} u={} {}={}", s.best_q, s.best_u, s.measure, s.best().discrepancies().measure(s.measure));
            Ok(())
        }
        Command::Importance(a) => cmd_importance(a).map(|_| ()),
        Command::Pdp(a) => cmd_pdp(a).map(|_| ()),
        Command::Simulate(a) => {
            for s in cmd_simulate(a)?.summary {
                println!("case={} q={} {} median={} efficiency={}", s.case, s.q, s.method, s.median, s.efficiency);
            }
            Ok(())
        }
    }
}

/// Parse, run and map the outcome to a process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let args = match expand_args(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
