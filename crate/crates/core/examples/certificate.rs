//! Checks an explicit allocation as a witness of throughput sub-optimality:
//! it keeps every class's head count at `x*` and every pool within capacity,
//! yet serves faster than customers arrive.

use qnet::fluid::solve_static_allocation;
use qnet::model::NetworkModel;
use qnet::optimality::{check_certificate, max_throughput};

fn main() -> anyhow::Result<()> {
    let model = NetworkModel::new(
        vec![8.0, 4.0],
        vec![1.0, 1.0, 1.0],
        vec![vec![3.0, 10.0, 1.0], vec![1.0, 4.0, 2.0]],
    )?;
    let sol = solve_static_allocation(&model)?;

    for beta in [0.05, 0.1, 0.25, 0.5] {
        let xi = vec![vec![1.0 - beta, 0.5 + beta, 0.0], vec![beta, 0.5 - beta, 1.0]];
        let c = check_certificate(&model, &sol, &xi);
        println!(
            "beta {beta:<4}: feasible {} throughput {:.4} vs arrivals {} -> witness {}",
            c.feasible, c.throughput, c.arrival_total, c.proves_suboptimal
        );
    }

    let best = max_throughput(&sol.x_star, model.nu(), &model)?;
    println!("best achievable throughput at x*: {:.4}", best.value);
    println!("maximizer: {:?}", best.psi);
    Ok(())
}
