// Choose the tail fraction by minimising residual discrepancies from uniformity.

use eviboost::baseline::tir_fitter;
use eviboost::boost::{fixed_fitter, BoostConfig};
use eviboost::error::Result;
use eviboost::sim::{replicate_rng, simulate_dataset, SimConfig};
use eviboost::threshold::{scan_thresholds, Measure, ScanResult, DEFAULT_MIN_EXCEEDANCES};

pub fn run_example() -> Result<(ScanResult, ScanResult)> {
    let sim = SimConfig {
        m: 15.0,
        ..Default::default()
    };
    let (data, _) = simulate_dataset(&mut replicate_rng(8, 0), &sim, 1000)?;
    let grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();

    let tir = scan_thresholds(&data, &tir_fitter, &grid, Measure::Sum, DEFAULT_MIN_EXCEEDANCES)?;
    let boosted = fixed_fitter(BoostConfig {
        n_trees: 100,
        nu: 0.05,
        max_leaves: 2,
        ..Default::default()
    });
    let evi = scan_thresholds(&data, &boosted, &grid, Measure::Sum, DEFAULT_MIN_EXCEEDANCES)?;

    println!("{:>5} {:>5} {:>10} {:>10}", "q", "k", "TIR sum", "boost sum");
    for a in &tir.reports {
        // grid points whose fit degenerates are skipped, so match on q
        let b = evi
            .reports
            .iter()
            .find(|b| b.q == a.q)
            .map_or("-".to_string(), |b| format!("{:.4}", b.d1 + b.d2 + b.d3));
        println!("{:>5.2} {:>5} {:>10.4} {:>10}", a.q, a.k, a.d1 + a.d2 + a.d3, b);
    }
    println!("selected q: TIR {:.2}, boosted {:.2}", tir.best_q, evi.best_q);
    Ok((tir, evi))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
