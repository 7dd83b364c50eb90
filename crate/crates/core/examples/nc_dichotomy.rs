//! Queue occupancy as the system grows. On a throughput sub-optimal network
//! the negative-path pump makes waiting rarer; on a throughput optimal
//! network it stays put under every policy.
//!
//! `cargo run --release --example nc_dichotomy`

use qnet::fluid::solve_static_allocation;
use qnet::model::NetworkModel;
use qnet::paths::enumerate_simple_paths;
use qnet::policy::{GreedyBasic, Idle, NegativePathPump, Policy};
use qnet::sim::{run_nc_experiment, Experiment, SimConfig};

fn print(title: &str, exp: &Experiment) {
    println!("{title} / {}{}", exp.policy, if exp.heuristic_policy { " (heuristic)" } else { "" });
    for r in &exp.rows {
        println!("  n {:>4}: median {:.4}  [q10 {:.4}, q90 {:.4}]", r.n, r.median, r.q10, r.q90);
    }
}

fn main() -> anyhow::Result<()> {
    let ns = [25, 100, 400];
    let cfg = SimConfig::new(1.0).with_sampling(None);

    let case_a = NetworkModel::new(
        vec![8.0, 4.0],
        vec![1.0, 1.0, 1.0],
        vec![vec![3.0, 10.0, 1.0], vec![1.0, 4.0, 2.0]],
    )?;
    let sol = solve_static_allocation(&case_a)?;
    let paths = enumerate_simple_paths(&case_a, &sol)?;
    let pump = NegativePathPump::new(&case_a, &sol, &paths).expect("negative path");
    let greedy = GreedyBasic::new(&case_a, &sol);
    for p in [&pump as &dyn Policy, &greedy] {
        print("sub-optimal", &run_nc_experiment(&case_a, &sol, p, &ns, &cfg, 30, 1)?);
    }

    // Service rates depend on the class only.
    let optimal = NetworkModel::new(vec![1.5, 1.0], vec![1.0, 1.0], vec![vec![1.0, 1.0], vec![2.0, 2.0]])?;
    let sol = solve_static_allocation(&optimal)?;
    let paths = enumerate_simple_paths(&optimal, &sol)?;
    assert!(NegativePathPump::new(&optimal, &sol, &paths).is_none());
    let greedy = GreedyBasic::new(&optimal, &sol);
    for p in [&greedy as &dyn Policy, &Idle] {
        print("optimal", &run_nc_experiment(&optimal, &sol, p, &ns, &cfg, 30, 1)?);
    }
    Ok(())
}
