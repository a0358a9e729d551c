//! Dimension of digit-frequency level sets on a countable linear system with
//! s_inf = 1/2: full vectors, deficient vectors and partial constraints.

use thermospec::branch_systems::{BranchSystem, TailModel};
use thermospec::measures::{digit_frequency_dimension, FrequencyMode};

fn main() -> thermospec::error::Result<()> {
    let tail = TailModel { c: 0.1, a: 2.0, b: 1.0, d: 0.0 };
    let sys = BranchSystem::linear_with_tail(&[0.5, 0.3], Some(tail))?;
    for (p, mode) in [
        (vec![0.6, 0.4], FrequencyMode::Full),
        (vec![0.5, 0.4], FrequencyMode::Full),
        (vec![0.6], FrequencyMode::Partial),
        (vec![0.7, 0.4], FrequencyMode::Full),
    ] {
        let r = digit_frequency_dimension(&sys, &p, mode)?;
        println!("{p:?} {mode:?}: dim = {:?}, regime {:?}", r.dimension, r.regime);
    }
    Ok(())
}
