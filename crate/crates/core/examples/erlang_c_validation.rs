//! Simulated delay fraction of a single-pool M/M/N queue against the
//! Erlang-C formula, below and at critical load.
//!
//! `cargo run --release --example erlang_c_validation`

use qnet::fluid::solve_static_allocation;
use qnet::model::NetworkModel;
use qnet::policy::GreedyBasic;
use qnet::sim::{run_nc_experiment, SimConfig};
use qnet::stats::{erlang_c, mean, std_error};

fn main() -> anyhow::Result<()> {
    let servers = 100u32;
    let horizon = 50.0;
    let cfg = SimConfig::new(horizon).with_warmup(horizon / 2.0).with_sampling(None);
    for load in [0.8, 0.9, 0.95, 1.0] {
        // nu = 1 keeps N = n = 100; the load enters through lambda.
        let model = NetworkModel::new(vec![load], vec![1.0], vec![vec![1.0]])?;
        let sol = solve_static_allocation(&model)?;
        let policy = GreedyBasic::new(&model, &sol);
        let exp = run_nc_experiment(&model, &sol, &policy, &[servers as u64], &cfg, 200, 11)?;
        let frac: Vec<f64> = exp.rows[0].occupancies.iter().map(|o| o / (horizon / 2.0)).collect();
        let (m, se) = (mean(&frac), std_error(&frac));
        let c = erlang_c(servers, load * servers as f64);
        println!(
            "load {load:.2}: simulated {m:.4} +/- {se:.4}, Erlang C {c:.4}, gap {:.1} s.e.",
            (m - c).abs() / se
        );
    }
    Ok(())
}
