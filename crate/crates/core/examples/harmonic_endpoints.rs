//! Level sets of the average of 1/a_n for continued fractions: the
//! endpoints, the interior curve and a mixture of an E_N equilibrium state
//! with the golden-mean Dirac measure.

use thermospec::branch_systems::{BranchSystem, Potential};
use thermospec::measures::{equilibrium_stats, golden_dirac_stats, mixture_lower_bound, MomentWindow};
use thermospec::spectrum::{LegendreOptions, SpectrumSolver};
use thermospec::thermo::{pressure_root, RootMethod, RootOptions};

fn main() -> thermospec::error::Result<()> {
    let gauss = BranchSystem::gauss();
    let phi = Potential::harmonic();
    let solver = SpectrumSolver::new(&gauss, &phi, &LegendreOptions::default())?;
    for a in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let p = solver.point(a);
        println!("α = {a}: dim {:?} ({})", p.dim, p.regime.as_str());
    }
    let dirac = golden_dirac_stats();
    let opts = RootOptions {
        method: Some(RootMethod::Countable { n: 2 }),
        ..Default::default()
    };
    let schedule: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
    for n in [20u64, 1000, 100_000] {
        let sys = gauss.restricted_system(n)?;
        let t = pressure_root(&sys, [0.5 + 1e-9, 1.0], &opts)?.t;
        let base = equilibrium_stats(&sys, t, std::slice::from_ref(&phi))?;
        let best = mixture_lower_bound(&[base], &dirac, &schedule, Some(MomentWindow { index: 0, lo: 0.9, hi: 1.0 }))?;
        if let Some(b) = best {
            println!("N = {n}: best ratio {:.4} at p = {} (moment {:.4})", b.stats.ratio, b.p, b.stats.moments[0]);
        }
    }
    Ok(())
}
