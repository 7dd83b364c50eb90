//! One replication of the scaled Case A system: raw counts, their diffusion
//! scaling, and the trajectory CSV.

use qnet::fluid::solve_static_allocation;
use qnet::model::NetworkModel;
use qnet::policy::GreedyBasic;
use qnet::sim::{build_system, scale_result, simulate, write_trajectories_csv, SimConfig};

fn main() -> anyhow::Result<()> {
    let model = NetworkModel::new(
        vec![8.0, 4.0],
        vec![1.0, 1.0, 1.0],
        vec![vec![3.0, 10.0, 1.0], vec![1.0, 4.0, 2.0]],
    )?;
    let sol = solve_static_allocation(&model)?;
    let sys = build_system(&model, &sol, 100)?;
    println!("servers {:?}, X(0) {:?}, Psi(0) {:?}", sys.servers, sys.x0, sys.psi0);

    let res = simulate(&sys, &GreedyBasic::new(&model, &sol), &SimConfig::new(1.0).with_sampling(Some(0.1)), 5)?;
    println!(
        "{} events, occupancy {:.4}, arrivals {:?}, counting identity {}",
        res.events,
        res.queue_occupancy,
        res.arrivals,
        res.counting_identity_holds()
    );
    for s in scale_result(&res, &sys) {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:+.2}")).collect::<Vec<_>>().join(" ");
        println!("t {:.1}  X^ {}  Y^ {}  Z^ {}", s.t, fmt(&s.x_hat), fmt(&s.y_hat), fmt(&s.z_hat));
    }
    write_trajectories_csv(std::io::stdout(), &[res], model.classes(), model.stations())?;
    Ok(())
}
