// Goodness-of-fit checks on the transformed exceedances `(y/u)^(-1/gamma(x))`,
// which are uniform when the index function is right.

use eviboost::baseline::hill;
use eviboost::boost::{fit, BoostConfig};
use eviboost::data::ThresholdSpec;
use eviboost::error::Result;
use eviboost::model::GammaModel;
use eviboost::sim::{gamma_case, replicate_rng, simulate_dataset, SimConfig};
use eviboost::threshold::{discrepancies, ks_uniform_test, u_transform, KsTest};

pub fn run_example() -> Result<Vec<(String, KsTest)>> {
    let sim = SimConfig::default();
    let (data, _) = simulate_dataset(&mut replicate_rng(6, 0), &sim, 2000)?;
    let t = ThresholdSpec::from_fraction(data.responses(), 0.1)?;
    let model = fit(
        &data,
        &t,
        &BoostConfig {
            n_trees: 200,
            nu: 0.02,
            max_leaves: 2,
            ..Default::default()
        },
    )?;
    let h = hill(&data, &t)?;

    let mut out = Vec::new();
    let candidates: [(&str, Box<dyn Fn(&[f64]) -> f64>); 3] = [
        ("true index", Box::new(|x: &[f64]| gamma_case(sim.case, x, sim.c).unwrap())),
        ("boosted", Box::new(|x: &[f64]| model.gamma(x))),
        ("Hill constant", Box::new(move |_: &[f64]| h)),
    ];
    println!("{:>14} {:>8} {:>8} {:>8} {:>8} {:>8}", "index", "KS", "p", "d1", "d2", "d3");
    for (name, g) in candidates {
        let res = u_transform(&data, g, &t)?;
        let ks = ks_uniform_test(&res)?;
        let d = discrepancies(&res)?;
        println!(
            "{name:>14} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            ks.statistic, ks.p_value, d.d1, d.d2, d.d3
        );
        out.push((name.to_string(), ks));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
