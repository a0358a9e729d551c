//! Critical exponent of the Gauss map and of a polynomial tail.

use thermospec::branch_systems::{BranchSystem, TailModel};
use thermospec::thermo::s_infinity;

fn main() -> thermospec::error::Result<()> {
    let gauss = s_infinity(&BranchSystem::gauss(), 1e-3)?;
    println!("Gauss: s_inf = {} (scan {}, agree {})", gauss.value, gauss.scan_value, gauss.agree);
    let tail = TailModel { c: 0.1, a: 3.0, b: 1.0, d: 0.0 };
    let sys = BranchSystem::linear_with_tail(&[0.5], Some(tail))?;
    let r = s_infinity(&sys, 1e-6)?;
    println!("diam ~ n^-3: s_inf = {} (certified between {} and {})", r.value, r.certificate.s_lo, r.certificate.s_hi);
    Ok(())
}
