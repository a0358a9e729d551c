//! Maximal entropy over Lyapunov exponent under moment constraints.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::measures::{maximize_ratio, Constraint, RatioOptions};

fn main() -> thermospec::error::Result<()> {
    let doubling = BranchSystem::linear(&[0.5, 0.5])?;
    let opts = RatioOptions::default();
    for a in [0.1, 0.25, 0.5] {
        let r = maximize_ratio(&doubling, &[Constraint::new(Potential::indicator(1), a, 0.0)], 2, 2, &opts)?;
        println!("doubling, ∫χ_1 = {a}: h/λ = {:.10}", r.stats.ratio);
    }
    let gauss = BranchSystem::gauss();
    let c = Constraint::new(Potential::harmonic(), 0.6, 0.01);
    let r = maximize_ratio(&gauss, &[c], 8, 2, &opts)?;
    println!(
        "Gauss, ∫1/a_1 = 0.6 ± 0.01 over 8 digits, words of length 2: h/λ = {:.6} ({} iterations)",
        r.stats.ratio, r.iterations
    );
    Ok(())
}
