//! Moment targets that are or are not reachable at a truncation.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::measures::feasible;

fn main() -> thermospec::error::Result<()> {
    let gauss = BranchSystem::gauss();
    for (gamma, q) in [(0.6, 3), (0.05, 3), (0.05, 40)] {
        let r = feasible(&gauss, &[Potential::harmonic()], &[gamma], 1e-6, q, 1)?;
        println!("∫1/a_1 = {gamma} with {q} digits: {:?}", r.verdict);
        if let Some(w) = r.witness {
            let words: Vec<_> = w.words().iter().map(|x| x.symbols().to_vec()).collect();
            println!("  witness {words:?} weights {:?}", w.weights());
        }
    }
    Ok(())
}
