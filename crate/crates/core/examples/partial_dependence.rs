// Partial dependence of the fitted index on x1, next to the same average
// computed from the true index function.

use eviboost::boost::{fit, BoostConfig};
use eviboost::data::ThresholdSpec;
use eviboost::error::Result;
use eviboost::interpret::{default_grid, partial_dependence_1d, PdpCurve};
use eviboost::sim::{gamma_case, replicate_rng, simulate_dataset, SimConfig};

pub fn run_example() -> Result<(PdpCurve, Vec<f64>)> {
    let sim = SimConfig::default();
    let (data, _) = simulate_dataset(&mut replicate_rng(2, 0), &sim, 2000)?;
    let t = ThresholdSpec::from_fraction(data.responses(), 0.1)?;
    let model = fit(
        &data,
        &t,
        &BoostConfig {
            n_trees: 300,
            nu: 0.02,
            max_leaves: 2,
            ..Default::default()
        },
    )?;
    let grid = default_grid(&data, 0, 15)?;
    let curve = partial_dependence_1d(&model, &data, 0, &grid)?;

    let mut truth = Vec::with_capacity(grid.len());
    let mut x = vec![0.0; data.p()];
    for &v in &grid {
        let mut s = 0.0;
        for row in data.rows() {
            x.copy_from_slice(row);
            x[0] = v;
            s += gamma_case(sim.case, &x, sim.c)?;
        }
        truth.push(s / data.n() as f64);
    }
    println!("{:>8} {:>10} {:>10}", "x1", "fitted", "true");
    for ((g, f), tr) in grid.iter().zip(&curve.values).zip(&truth) {
        println!("{g:>8.3} {f:>10.4} {tr:>10.4}");
    }
    Ok((curve, truth))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
