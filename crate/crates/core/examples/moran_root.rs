//! Bowen/Moran roots: closed form against the pressure root finder.

use thermospec::branch_systems::BranchSystem;
use thermospec::oracle::moran_root;
use thermospec::thermo::{pressure_root, RootOptions};

fn main() -> thermospec::error::Result<()> {
    for r in [vec![0.5, 0.25], vec![1.0 / 3.0; 2], vec![0.4, 0.3, 0.2]] {
        let root = pressure_root(&BranchSystem::linear(&r)?, [0.01, 2.0], &RootOptions::default())?;
        println!("{r:?}: pressure root {:.12}, Moran {:.12}", root.t, moran_root(&r));
    }
    Ok(())
}
