//! Dimension of continued fractions with all digits >= N against
//! 1/2 + ln ln N / (2 ln N).

use thermospec::branch_systems::BranchSystem;
use thermospec::thermo::{pressure_root, RootMethod, RootOptions};

fn main() -> thermospec::error::Result<()> {
    let gauss = BranchSystem::gauss();
    let opts = RootOptions {
        method: Some(RootMethod::Countable { n: 2 }),
        ..Default::default()
    };
    for n in [10u64, 100, 1000, 10_000] {
        let r = pressure_root(&gauss.restricted_system(n)?, [0.5 + 1e-9, 1.0], &opts)?;
        let nf = n as f64;
        let asym = nf.ln().ln() / (2.0 * nf.ln());
        println!("N = {n:>6}: t* = {:.8}, (t* - 1/2)/asym = {:.4}", r.t, (r.t - 0.5) / asym);
    }
    Ok(())
}
