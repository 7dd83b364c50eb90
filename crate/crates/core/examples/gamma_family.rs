//! Rotating mass around a four-vertex zero path: every member of the family
//! has the same head counts and the same throughput.

use qnet::fluid::solve_static_allocation;
use qnet::model::NetworkModel;
use qnet::optimality::{gamma_family, throughput};
use qnet::paths::enumerate_simple_paths;

fn main() -> anyhow::Result<()> {
    let model = NetworkModel::new(vec![5.0, 1.5], vec![1.0, 1.0], vec![vec![2.0, 4.0], vec![3.0, 5.0]])?;
    let sol = solve_static_allocation(&model)?;
    let paths = enumerate_simple_paths(&model, &sol)?;
    let zero = paths.iter().find(|p| p.is_zero()).expect("zero path");
    println!("zero path {:?}, m = {:?}", zero.labels(model.classes()), zero.m);

    let fam = gamma_family(&model, &sol, zero, 0.01)?;
    println!(
        "delta {:.4}, gamma in [{:.4}, {:.4}], x = {:?}",
        fam.delta, fam.gamma_min, fam.gamma_max, fam.x
    );
    let poly = fam.polytope(&model);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..=10 {
        let gamma = fam.gamma_min + (fam.gamma_max - fam.gamma_min) * k as f64 / 10.0;
        let psi = fam.allocation(gamma);
        let t = throughput(&model, &psi);
        lo = lo.min(t);
        hi = hi.max(t);
        println!("gamma {gamma:.4}: throughput {t:.12} feasible {}", poly.contains(&psi, 1e-9));
    }
    println!("spread {:.3e}, closed form {:.12}", hi - lo, fam.constant_throughput(&model));
    Ok(())
}
