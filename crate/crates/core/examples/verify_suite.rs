//! Runs every oracle comparison and prints the failures.

use thermospec::oracle::{verify, Suite};
use thermospec::thermo::PressureOptions;

fn main() {
    let reports = verify(Suite::All, &PressureOptions::from_env());
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    println!("{} checks, {} failed", reports.len(), failed.len());
    for r in failed {
        println!("FAIL {}: oracle {} module {}", r.quantity, r.oracle, r.module);
    }
}
