// Five-fold cross-validation of shrinkage, leaves and number of trees.

use eviboost::data::ThresholdSpec;
use eviboost::error::Result;
use eviboost::sim::{replicate_rng, simulate_dataset, SimConfig};
use eviboost::tuning::{cv_tune, TuneGrid, TuneResult};

pub fn run_example() -> Result<TuneResult> {
    let sim = SimConfig {
        case: 3,
        ..Default::default()
    };
    let (data, _) = simulate_dataset(&mut replicate_rng(5, 0), &sim, 800)?;
    let t = ThresholdSpec::from_fraction(data.responses(), 0.1)?;
    let grid = TuneGrid {
        nu_values: vec![0.01, 0.05, 0.1],
        leaf_values: vec![2, 4],
        max_trees: 300,
        seed: 3,
        ..Default::default()
    };
    let res = cv_tune(&data, &t, &grid)?;
    println!("{:>6} {:>3} {:>6} {:>12}", "nu", "L", "M", "cv loss");
    for cell in &res.cells {
        println!("{:>6} {:>3} {:>6} {:>12.4}", cell.nu, cell.max_leaves, cell.best_m, cell.best_loss());
    }
    println!(
        "selected nu = {}, L = {}, M = {} (loss {:.4}, M = 0 gives {:.4})",
        res.best.nu,
        res.best.max_leaves,
        res.best.n_trees,
        res.best_loss,
        res.cells[0].curve[0]
    );
    Ok(res)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
