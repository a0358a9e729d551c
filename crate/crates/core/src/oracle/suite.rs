//! Shipped validation suites.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{besicovitch_eggleston, moran_root, sample_orbit, truncation_ladder_check, OracleReport, Recipe};
use crate::branch_systems::{BranchSystem, Potential, Word};
use crate::error::{Error, Result};
use crate::measures::{
    self, digit_frequency_dimension, feasible, maximize_ratio, mixture, Constraint, FrequencyMode, RatioOptions,
};
use crate::spectrum::{flat_bounds, LegendreOptions, Regime, SpectrumSolver};
use crate::thermo::{
    pressure, pressure_locally_constant, pressure_root, s_infinity, PressureOptions, RootMethod, RootOptions, Truncation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Thermo,
    Spectrum,
    Measures,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "thermo" => Ok(Suite::Thermo),
            "spectrum" => Ok(Suite::Spectrum),
            "measures" => Ok(Suite::Measures),
            other => Err(Error::Precondition(format!("unknown suite {other:?}"))),
        }
    }
}

/// Runs the selected suite.
pub fn verify(suite: Suite, opts: &PressureOptions) -> Vec<OracleReport> {
    let mut out = Vec::new();
    if matches!(suite, Suite::All | Suite::Thermo) {
        thermo(&mut out, opts);
    }
    if matches!(suite, Suite::All | Suite::Measures) {
        measures_suite(&mut out);
    }
    if matches!(suite, Suite::All | Suite::Spectrum) {
        spectrum(&mut out);
    }
    if suite == Suite::All {
        orbits(&mut out);
    }
    out
}

fn push(out: &mut Vec<OracleReport>, name: &str, oracle: f64, tol: f64, value: Result<f64>) {
    out.push(match value {
        Ok(v) => OracleReport::new(name, oracle, v, tol),
        Err(e) => OracleReport::failed(name, oracle, &e.to_string()),
    });
}

fn h2(p: f64) -> f64 {
    -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
}

fn doubling() -> BranchSystem {
    BranchSystem::linear(&[0.5, 0.5]).expect("doubling")
}

fn moran_pair() -> BranchSystem {
    BranchSystem::linear(&[0.5, 0.25]).expect("pair")
}

/// `|(T^n)'|` at the periodic point of `w` from the continued fraction
/// `x = [0; w_1, w_2, …]` computed by fixed-point iteration.
fn gauss_periodic_log_derivative(w: &[u64]) -> f64 {
    let n = w.len();
    let mut pts = vec![0.0; n];
    for (j, x_j) in pts.iter_mut().enumerate() {
        // x_j = 1/(w_j + x_{j+1}), unrolled over many periods
        let mut x = 0.5;
        for _ in 0..100 {
            for k in (0..n).rev() {
                x = 1.0 / (w[(j + k) % n] as f64 + x);
            }
        }
        *x_j = x;
    }
    pts.iter().map(|x| -2.0 * x.ln()).sum()
}

fn thermo(out: &mut Vec<OracleReport>, opts: &PressureOptions) {
    let r = [0.5, 0.25];
    push(
        out,
        "Moran root of (1/2, 1/4)",
        moran_root(&r),
        1e-9,
        pressure_root(&moran_pair(), [0.1, 2.0], &RootOptions::default()).map(|x| x.t),
    );
    let zero = Potential::zero();
    out.extend(truncation_ladder_check(
        "doubling P(-ln|T'|)",
        |q, n| Ok(pressure(&doubling(), &zero, 1.0, Truncation::Finite(q), n, opts)?.levels[n - 1]),
        &(1..=8).map(|n| (2, n)).collect::<Vec<_>>(),
    ));
    push(
        out,
        "doubling P(-ln|T'|) at n=8",
        0.0,
        1e-14,
        pressure(&doubling(), &zero, 1.0, Truncation::Finite(2), 8, opts).map(|p| p.levels[7]),
    );
    let gauss = BranchSystem::gauss();
    out.extend(truncation_ladder_check(
        "Gauss v_2 at t=1",
        |q, n| Ok(pressure(&gauss, &zero, 1.0, Truncation::Finite(q), n, opts)?.levels[n - 1]),
        &[(10, 2), (50, 2), (200, 2)],
    ));
    for w in [&[1u64, 2][..], &[3, 1, 4], &[2, 7]] {
        let word = Word::new(w.to_vec()).expect("word");
        push(
            out,
            &format!("Gauss ln|(T^n)'| at the periodic point of {w:?}"),
            gauss_periodic_log_derivative(w),
            1e-12,
            gauss.periodic_log_derivative(&word),
        );
    }
    match s_infinity(&gauss, 1e-3) {
        Ok(s) => {
            out.push(OracleReport::new("Gauss s_inf", 0.5, s.value, 1e-3));
            out.push(OracleReport::new("Gauss s_inf pressure scan", 0.5, s.scan_value, 1e-3));
        }
        Err(e) => out.push(OracleReport::failed("Gauss s_inf", 0.5, &e.to_string())),
    }
    match BranchSystem::flat_example(0.55, 0.6, 0.5) {
        Ok(flat) => push(
            out,
            "flat example P(χ_1 - ln|T'|/2)",
            (0.55 * 1f64.exp() + 0.6).ln(),
            1e-12,
            pressure_locally_constant(&flat, &Potential::indicator(1), 0.5, None).map(|p| p.value),
        ),
        Err(e) => out.push(OracleReport::failed("flat example", f64::NAN, &e.to_string())),
    }
    let root = gauss
        .restricted_system(20)
        .and_then(|s| pressure_root(&s, [0.5, 0.75], &RootOptions { method: Some(RootMethod::Countable { n: 2 }), ..Default::default() }));
    match root {
        Ok(r) => out.push(OracleReport::new("Gauss E_20 root inside [0.5, 0.75]", 0.625, r.t, 0.125)),
        Err(e) => out.push(OracleReport::failed("Gauss E_20 root", 0.625, &e.to_string())),
    }
}

fn measures_suite(out: &mut Vec<OracleReport>) {
    let chi = Potential::indicator(1);
    let ro = RatioOptions::default();
    for a in [0.1, 0.25, 0.4] {
        push(
            out,
            &format!("doubling max h/λ at ∫χ_1 = {a}"),
            besicovitch_eggleston(&[a, 1.0 - a], &[0.5, 0.5]),
            1e-9,
            maximize_ratio(&doubling(), &[Constraint::new(chi.clone(), a, 0.0)], 2, 1, &ro).map(|r| r.stats.ratio),
        );
    }
    push(
        out,
        "unconstrained max h/λ on (1/2, 1/4) vs Moran root",
        moran_root(&[0.5, 0.25]),
        2e-3,
        maximize_ratio(&moran_pair(), &[], 2, 2, &ro).map(|r| r.stats.ratio),
    );
    push(
        out,
        "Gauss ∫1/a_1 = 0.6 witness weight on digit 1",
        0.2,
        2e-6,
        feasible(&BranchSystem::gauss(), &[Potential::harmonic()], &[0.6], 1e-6, 3, 1).and_then(|r| {
            r.witness
                .map(|w| w.weights()[0])
                .ok_or_else(|| Error::Numerical("no witness".into()))
        }),
    );
    push(
        out,
        "doubling frequency dimension of (1/4, 3/4)",
        h2(0.25) / 2f64.ln(),
        1e-12,
        digit_frequency_dimension(&doubling(), &[0.25, 0.75], FrequencyMode::Full).and_then(|r| {
            r.dimension.ok_or_else(|| Error::Numerical("empty".into()))
        }),
    );
    let g = measures::golden_dirac_stats();
    out.push(OracleReport::new("golden Dirac entropy", 0.0, g.entropy, 0.0));
    out.push(OracleReport::new("golden Dirac ∫1/a_1", 1.0, g.moments[0], 0.0));
    out.push(OracleReport::new(
        "golden Dirac λ",
        2.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln(),
        g.lyapunov,
        1e-15,
    ));
    // affinity of mixtures in (h, λ, moments)
    let a = measures::MeasureStats::from_parts(0.7, 1.3, vec![0.2]);
    let b = measures::MeasureStats::from_parts(0.1, 2.9, vec![0.9]);
    let m = mixture(&a, &b, 0.3);
    out.push(OracleReport::new("mixture entropy", 0.3 * 0.7 + 0.7 * 0.1, m.entropy, 1e-14));
    out.push(OracleReport::new("mixture λ", 0.3 * 1.3 + 0.7 * 2.9, m.lyapunov, 1e-14));
    out.push(OracleReport::new("mixture moment", 0.3 * 0.2 + 0.7 * 0.9, m.moments[0], 1e-14));
}

fn spectrum(out: &mut Vec<OracleReport>) {
    let chi = Potential::indicator(1);
    match SpectrumSolver::new(&doubling(), &chi, &LegendreOptions::default()) {
        Ok(s) => {
            for a in [0.05, 0.25, 0.5, 0.8] {
                let p = s.point(a);
                push(
                    out,
                    &format!("doubling spectrum at α = {a}"),
                    h2(a) / 2f64.ln(),
                    1e-9,
                    p.dim.ok_or_else(|| Error::Numerical(p.note.unwrap_or_default())),
                );
            }
            for a in [0.0, 1.0] {
                push(out, &format!("doubling spectrum endpoint α = {a}"), 0.0, 0.0, s.point(a).dim.ok_or(Error::EmptySequence));
            }
        }
        Err(e) => out.push(OracleReport::failed("doubling spectrum", f64::NAN, &e.to_string())),
    }
    let flat = match BranchSystem::flat_example(0.55, 0.6, 0.5) {
        Ok(f) => f,
        Err(e) => {
            out.push(OracleReport::failed("flat example", f64::NAN, &e.to_string()));
            return;
        }
    };
    match flat_bounds(&flat, &chi) {
        Ok(b) => {
            out.push(OracleReport::new("flat q_-", (0.4f64 / 0.55).ln(), b.q_minus, 1e-9));
            out.push(OracleReport::new("flat q_+", (0.6f64 / 0.45).ln(), b.q_plus, 1e-9));
            out.push(OracleReport::new("flat root of α(q) = 0", b.q_minus, b.q_minus_root, 1e-9));
            out.push(OracleReport::new("flat root of α(q) = 1", b.q_plus, b.q_plus_root, 1e-9));
            match SpectrumSolver::new(&flat, &chi, &LegendreOptions::default()) {
                Ok(s) => {
                    let c = s.certificate(b.alpha_upper + 0.01, b.s_inf);
                    out.push(OracleReport::new(
                        "flat certificate above α^*",
                        0.0,
                        c.min_value.max(0.0),
                        1e-12,
                    ));
                    let c = s.certificate(0.5 * (b.alpha_lower + b.alpha_upper), b.s_inf);
                    out.push(OracleReport::at_least("no flat certificate inside", 0.0, c.min_value, 0.0));
                    let c = s.certificate(1.0, b.s_inf);
                    out.push(OracleReport::new("flat certificate at α = 1", 0.0, c.min_value.max(0.0), 1e-12));
                    let mid = s.point(0.5 * (b.alpha_lower + b.alpha_upper));
                    out.push(OracleReport::at_least(
                        "flat spectrum inside the band above 1/2",
                        0.5 + 1e-3,
                        mid.dim.unwrap_or(f64::NAN),
                        0.0,
                    ));
                }
                Err(e) => out.push(OracleReport::failed("flat spectrum", f64::NAN, &e.to_string())),
            }
        }
        Err(e) => out.push(OracleReport::failed("flat bounds", f64::NAN, &e.to_string())),
    }
    match SpectrumSolver::new(&BranchSystem::gauss(), &Potential::harmonic(), &LegendreOptions::default()) {
        Ok(s) => {
            for a in [0.0, 1.0] {
                let p = s.point(a);
                let v = if p.regime == Regime::Endpoint { p.dim.ok_or(Error::EmptySequence) } else { Err(Error::Numerical("not an endpoint".into())) };
                push(out, &format!("Gauss harmonic endpoint α = {a}"), 0.5, 1e-12, v);
            }
        }
        Err(e) => out.push(OracleReport::failed("Gauss harmonic spectrum", f64::NAN, &e.to_string())),
    }
}

fn orbits(out: &mut Vec<OracleReport>) {
    let chi = Potential::indicator(1);
    push(
        out,
        "doubling orbit average of χ_1",
        0.5,
        2e-3,
        sample_orbit(&doubling(), &Recipe::Frequencies(vec![0.5, 0.5]), 1000, &[chi]).map(|t| t.averages[0][999]),
    );
    push(
        out,
        "Gauss all-ones orbit point",
        (5f64.sqrt() - 1.0) / 2.0,
        1e-15,
        sample_orbit(&BranchSystem::gauss(), &Recipe::Periodic(vec![1]), 60, &[]).map(|t| t.points[59]),
    );
    let r = [0.5, 0.25, 0.125];
    let t = moran_root(&r);
    for p in [[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]] {
        out.push(OracleReport::at_least(
            format!("Moran root above the frequency dimension of {p:?}"),
            besicovitch_eggleston(&p, &r),
            t,
            0.0,
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures_and_spectrum_suites_pass() {
        let mut r = verify(Suite::Measures, &PressureOptions::default());
        r.extend(verify(Suite::Spectrum, &PressureOptions::default()));
        for x in &r {
            assert!(x.pass, "{x:?}");
        }
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("x".parse::<Suite>().is_err());
    }
}
