// End-to-end batch workflow: write a CSV, fit through the command-line
// interface, then reload the saved model and predict.

use std::path::Path;

use eviboost::cli;
use eviboost::error::{EviError, Result};
use eviboost::io::{fmt_f64, write_csv, SavedModel};
use eviboost::sim::{replicate_rng, simulate_dataset, SimConfig};

pub fn run_example_in(dir: &Path) -> Result<Vec<f64>> {
    let (data, _) = simulate_dataset(&mut replicate_rng(9, 0), &SimConfig::default(), 1000)?;
    let mut header: Vec<String> = data.feature_labels();
    header.push("y".into());
    let rows = data.rows().zip(data.responses()).map(|(x, y)| {
        x.iter().chain(std::iter::once(y)).map(|v| fmt_f64(*v)).collect::<Vec<_>>()
    });
    let csv = dir.join("case1.csv");
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&csv, &header, rows)?;

    let out = dir.join("fit");
    let code = cli::run([
        "eviboost", "fit", "--input", csv.to_str().unwrap(), "--target", "y", "--q", "0.1",
        "--trees", "400", "--nu", "0.005", "--leaves", "2", "--output-dir", out.to_str().unwrap(),
    ]);
    if code != 0 {
        return Err(EviError::InvalidConfig(format!("fit exited with {code}")));
    }
    for f in ["model.json", "gamma.csv", "residuals.csv", "ks.csv", "tir_theta.csv", "manifest.txt"] {
        println!("wrote {}", out.join(f).display());
    }
    println!("{}", std::fs::read_to_string(out.join("ks.csv"))?);

    let model = SavedModel::load(&out.join("model.json"))?;
    let pred = model.predict_dataset(&data)?;
    println!("first predictions: {:?}", &pred[..5]);
    Ok(pred)
}

pub fn run_example() -> Result<Vec<f64>> {
    let dir = std::env::temp_dir().join("eviboost-cli-workflow");
    std::fs::create_dir_all(&dir)?;
    run_example_in(&dir)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
