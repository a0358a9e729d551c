//! Orbits with prescribed digit frequencies, including a deficient recipe
//! whose missing mass escapes to ever larger digits.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::oracle::{sample_orbit, Recipe};

fn main() -> thermospec::error::Result<()> {
    let gauss = BranchSystem::gauss();
    let phis = [Potential::indicator(1), Potential::indicator(2), Potential::harmonic()];
    let tr = sample_orbit(&gauss, &Recipe::Frequencies(vec![0.6, 0.3]), 5000, &phis)?;
    println!("first symbols {:?}", &tr.symbols[..20]);
    for k in [100, 1000, 5000] {
        let a: Vec<f64> = tr.averages.iter().map(|row| row[k - 1]).collect();
        println!("n = {k}: averages of χ_1, χ_2, 1/a_1 = {a:.5?}, x_n = {:.15}", tr.points[k - 1]);
    }
    let golden = sample_orbit(&gauss, &Recipe::Periodic(vec![1]), 40, &[])?;
    println!("all ones: x_40 = {:.15}", golden.points[39]);
    Ok(())
}
