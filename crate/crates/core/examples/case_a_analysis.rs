//! Full analysis of the two-class, three-pool example network and of its
//! variant where class 2 cannot be served at pool 1.
//!
//! Run with `cargo run --example case_a_analysis`.

use qnet::model::NetworkModel;
use qnet::report::analyze_default;

fn main() -> anyhow::Result<()> {
    let lambda = vec![8.0, 4.0];
    let nu = vec![1.0, 1.0, 1.0];

    let case_a = NetworkModel::new(lambda.clone(), nu.clone(), vec![vec![3.0, 10.0, 1.0], vec![1.0, 4.0, 2.0]])?;
    println!("== all six pairs are activities ==");
    println!("{}\n", analyze_default(&case_a)?);

    let case_b = NetworkModel::new(lambda, nu, vec![vec![3.0, 10.0, 1.0], vec![0.0, 4.0, 2.0]])?;
    println!("== pair (2,3) removed ==");
    let report = analyze_default(&case_b)?;
    println!("{report}");

    let open = report.paths.iter().find(|p| p.weight < 0.0).expect("a negative path");
    println!("\nnegative path {:?}: m = {:?}, weight {}", open.vertices, open.m, open.weight);
    Ok(())
}
