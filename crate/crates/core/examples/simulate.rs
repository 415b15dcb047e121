// Small Monte Carlo comparison of the boosted estimator against TIR.
//
// `cargo run --release --example simulate -- <case> <R> <n>`

use eviboost::error::Result;
use eviboost::sim::{run_experiment, ExperimentReport, QChoice, SimConfig};
use eviboost::tuning::TuneGrid;

pub fn config(case: u8, replications: usize, n: usize) -> SimConfig {
    SimConfig {
        case,
        replications,
        n,
        n_star: n,
        q_list: vec![QChoice::Fixed(0.1), QChoice::Optimal],
        seed: 2024,
        ..Default::default()
    }
}

pub fn report(cfg: &SimConfig) -> Result<ExperimentReport> {
    let t0 = std::time::Instant::now();
    let rep = run_experiment(cfg)?;
    for s in &rep.summary {
        println!(
            "case {} q {:<4} {:<8} median {:.4} efficiency {:.3} missing {}",
            s.case,
            s.q,
            s.method.to_string(),
            s.median,
            s.efficiency,
            s.missing
        );
    }
    println!("elapsed {:.1?}", t0.elapsed());
    Ok(rep)
}

/// Quick version with a reduced tuning grid.
pub fn run_example() -> Result<ExperimentReport> {
    let cfg = SimConfig {
        tune: TuneGrid {
            nu_values: vec![0.05, 0.1],
            leaf_values: vec![2, 3],
            max_trees: 200,
            ..Default::default()
        },
        ..config(3, 3, 500)
    };
    report(&cfg)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    if args.len() == 1 {
        return run_example().map(|_| ());
    }
    let arg = |i: usize, d: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    report(&config(arg(1, 1) as u8, arg(2, 20), arg(3, 1000))).map(|_| ())
}
