//! Pressure certificates `P(q(φ - α) - s_inf ln|T'|) <= 0` for the flat part.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::spectrum::{flat_bounds, flat_certificate};

fn main() -> thermospec::error::Result<()> {
    let sys = BranchSystem::flat_example(0.55, 0.6, 0.5)?;
    let chi = Potential::indicator(1);
    let b = flat_bounds(&sys, &chi)?;
    for a in [0.1, b.alpha_lower, 0.5, b.alpha_upper + 0.01, 1.0] {
        let c = flat_certificate(&sys, &chi, a, b.s_inf)?;
        println!("α = {a:.6}: witness {:?}, min {:.3e} at q = {:.6}", c.witness, c.min_value, c.argmin);
    }
    Ok(())
}
