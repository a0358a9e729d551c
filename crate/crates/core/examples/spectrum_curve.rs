//! Spectrum of χ_{I_1} for the doubling map written as CSV to stdout.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::cli::curve_csv;
use thermospec::spectrum::{spectrum_curve, CurveOptions};

fn main() {
    let sys = BranchSystem::linear(&[0.5, 0.5]).expect("model");
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let rows = spectrum_curve(&sys, &Potential::indicator(1), &grid, &CurveOptions::default()).expect("curve");
    print!("{}", curve_csv(&rows).expect("csv"));
}
