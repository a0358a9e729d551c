//! Periodic-sum pressure of the Gauss map at several `t`, with brackets.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::thermo::{pressure, PressureOptions, Truncation};

fn main() -> thermospec::error::Result<()> {
    let gauss = BranchSystem::gauss();
    let opts = PressureOptions::from_env();
    println!("{:>5} {:>14} {:>14} {:>14}", "t", "estimate", "lower", "upper");
    for t in [0.6, 0.8, 1.0, 1.2] {
        let p = pressure(&gauss, &Potential::zero(), t, Truncation::Finite(200), 2, &opts)?;
        println!("{t:>5} {:>14.8} {:>14.8} {:>14.8}", p.extrapolated, p.bracket[0], p.bracket[1]);
    }
    // the full alphabet through tail series
    let p = pressure(&gauss, &Potential::zero(), 1.0, Truncation::Countable, 2, &opts)?;
    println!("countable, t = 1: {:.8} (levels {:?})", p.extrapolated, p.levels);
    Ok(())
}
