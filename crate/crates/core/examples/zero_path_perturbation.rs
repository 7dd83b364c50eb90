//! Zero paths and the mass-shift test that decides whether they can help.
//!
//! The first model has additive service rates, so every closed path weighs
//! zero. The second is a 3x3 model with a zero path that is neither class-
//! nor pool-dependent and whose shift leaves the maximal throughput exactly
//! unchanged, so no verdict can be given.

use qnet::model::NetworkModel;
use qnet::report::analyze_default;

fn show(title: &str, model: &NetworkModel) -> anyhow::Result<()> {
    let r = analyze_default(model)?;
    println!("== {title} ==");
    for (i, p) in r.paths.iter().enumerate() {
        println!("path {i}: {:?} {:?} weight {:+.3} {:?}", p.kind, p.vertices, p.weight, p.dependence);
    }
    for c in &r.perturbation_checks {
        println!(
            "shift along {:?} by kappa {:.2e}: max {:.9} baseline {:.9} satisfied {} strict {}",
            c.path.labels(model.classes()),
            c.kappa,
            c.perturbed_max,
            c.baseline,
            c.satisfied,
            c.strict
        );
        for g in &c.grid {
            println!("    kappa {:.2e} -> {:.12}", g.kappa, g.perturbed_max);
        }
    }
    println!("verdict: {}\n", r.summary);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let additive = NetworkModel::new(vec![5.0, 1.5], vec![1.0, 1.0], vec![vec![2.0, 4.0], vec![3.0, 5.0]])?;
    show("additive 2x2", &additive)?;

    let unresolved = NetworkModel::new(
        vec![8.0, 1.0, 1.0],
        vec![1.0, 1.0, 1.0],
        vec![vec![4.0, 0.0, 5.0], vec![3.0, 2.0, 4.0], vec![2.0, 1.0, 0.0]],
    )?;
    show("unresolved 3x3", &unresolved)
}
