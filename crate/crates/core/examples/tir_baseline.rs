// Exponentially linear tail index regression and the Hill constant.

use eviboost::baseline::{fit_tir, hill, TirModel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use eviboost::data::ThresholdSpec;
use eviboost::error::Result;
use eviboost::sim::{replicate_rng, simulate_dataset, SimConfig};

pub fn run_example() -> Result<TirModel> {
    let sim = SimConfig::default();
    let (data, _) = simulate_dataset(&mut replicate_rng(4, 0), &sim, 5000)?;
    let t = ThresholdSpec::from_fraction(data.responses(), 0.1)?;
    let model = fit_tir(&data, &t, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mut target = vec![0.0; data.p() + 1];
    target[..4].copy_from_slice(&[sim.c.ln(), -0.5, 1.0 / 3.0, -1.0 / 3.0]);
    println!("Hill constant: {:.4}", hill(&data, &t)?);
    println!("Newton iterations: {}, gradient norm {:.2e}", model.iterations, model.grad_norm);
    println!("{:>10} {:>9} {:>9}", "term", "fitted", "true");
    for (j, (a, b)) in model.theta.iter().zip(&target).enumerate() {
        let name = if j == 0 { "intercept".to_string() } else { format!("x{j}") };
        println!("{name:>10} {a:>9.4} {b:>9.4}");
    }
    Ok(model)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
