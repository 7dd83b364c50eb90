//! Draws random critically loaded models and compares the LP verdict on
//! throughput optimality with the verdict read off the simple paths.
//!
//! `cargo run --release --example generate_instances -- 300`

use qnet::fluid::{generate_instance, GeneratorConfig, RateFamily};
use qnet::optimality::{throughput_verdict_lp, throughput_verdict_paths};
use qnet::paths::enumerate_simple_paths;

fn main() -> anyhow::Result<()> {
    let count: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100);
    for family in [RateFamily::Uniform, RateFamily::Additive] {
        let (mut agree, mut optimal, mut total) = (0, 0, 0);
        for seed in 0..count {
            let classes = 2 + (seed % 2) as usize;
            let stations = 2 + ((seed / 2) % 2) as usize;
            let g = generate_instance(seed * 1000, &GeneratorConfig::new(classes, stations).with_rates(family))?;
            let paths = enumerate_simple_paths(&g.model, &g.solution)?;
            let lp = throughput_verdict_lp(&g.model, &g.solution)?;
            let by_paths = throughput_verdict_paths(&paths, &g.model);
            total += 1;
            agree += usize::from(lp.optimal == by_paths.optimal);
            optimal += usize::from(lp.optimal);
        }
        println!("{family:?}: {total} instances, {optimal} throughput optimal, verdicts agree on {agree}");
    }

    let g = generate_instance(7, &GeneratorConfig::new(2, 3))?;
    println!("\nsample instance (seed {}):\n{}", g.seed, g.model.to_json());
    println!("planted xi: {:?}", g.planted_xi);
    Ok(())
}
