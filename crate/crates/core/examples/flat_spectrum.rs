//! Flat parts of the spectrum of χ_{I_1} on the K = 0.55, C = 0.6 system.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::spectrum::{flat_bounds, spectrum_curve, CurveOptions};

fn main() -> thermospec::error::Result<()> {
    let sys = BranchSystem::flat_example(0.55, 0.6, 0.5)?;
    let chi = Potential::indicator(1);
    let b = flat_bounds(&sys, &chi)?;
    println!("q_- = {:.10}, q_+ = {:.10}", b.q_minus, b.q_plus);
    println!("flat on [0, {:.10}] and [{:.10}, 1]", b.alpha_lower, b.alpha_upper);
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for p in spectrum_curve(&sys, &chi, &grid, &CurveOptions::default())? {
        println!(
            "{:.6} {:.8} {:<10} {}",
            p.alpha,
            p.dim.unwrap_or(f64::NAN),
            p.regime.as_str(),
            p.note.unwrap_or_default()
        );
    }
    Ok(())
}
