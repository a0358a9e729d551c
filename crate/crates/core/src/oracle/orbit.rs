//! Deterministic symbolic orbits with prescribed digit frequencies.

use serde::{Deserialize, Serialize};

use crate::branch_systems::{BranchSystem, Potential};
use crate::error::{Error, Result};

/// Where the symbols come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Target frequency of the branch at each position. Missing mass goes to
    /// escape digits `m, 2m, 4m, …` (`m` the first label after the listed
    /// ones), one new digit per visit.
    Frequencies(Vec<f64>),
    /// This word repeated forever.
    Periodic(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub symbols: Vec<u64>,
    /// `x_k = g_{ω_1} ∘ … ∘ g_{ω_k}(1/2)`, a point of the cylinder `C_k(ω)`.
    pub points: Vec<f64>,
    /// `averages[i][k]`: `A_{k+1} φ_i` along the symbol stream.
    pub averages: Vec<Vec<f64>>,
}

/// Labels stay exactly representable as `f64`.
const LABEL_CAP: u64 = 1 << 52;

fn symbols(system: &BranchSystem, recipe: &Recipe, horizon: usize) -> Result<Vec<u64>> {
    match recipe {
        Recipe::Periodic(w) => {
            if w.is_empty() {
                return Err(Error::Precondition("periodic word must be nonempty".into()));
            }
            for &s in w {
                system.branch(s)?;
            }
            Ok(w.iter().copied().cycle().take(horizon).collect())
        }
        Recipe::Frequencies(p) => {
            if p.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Precondition("frequencies must be non-negative".into()));
            }
            let total: f64 = p.iter().sum();
            if total > 1.0 + 1e-12 {
                return Err(Error::Precondition(format!("frequencies sum to {total} > 1")));
            }
            let deficit = (1.0 - total).max(0.0);
            let labels = (0..p.len())
                .map(|i| {
                    system.label_at(i).ok_or(Error::TruncationTooLarge {
                        requested: p.len(),
                        available: system.branch_count().unwrap_or(0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut escape = None;
            if deficit > 1e-12 {
                let m = system
                    .label_at(p.len())
                    .ok_or_else(|| Error::Precondition("no branches left for the missing mass".into()))?;
                if system.is_finite() {
                    return Err(Error::Precondition("missing mass needs infinitely many branches".into()));
                }
                escape = Some(m.max(1));
            }
            let mut counts = vec![0.0; p.len()];
            let mut escapes = 0.0;
            let mut out = Vec::with_capacity(horizon);
            for j in 1..=horizon {
                let jf = j as f64;
                // largest deficit between target and actual counts; ties go to the lowest position
                let mut best: Option<(usize, f64)> = None;
                for (i, (&pi, &c)) in p.iter().zip(&counts).enumerate() {
                    let d = jf * pi - c;
                    if best.is_none_or(|(_, bd)| d > bd) {
                        best = Some((i, d));
                    }
                }
                let esc = escape.map(|_| jf * deficit - escapes);
                let take_escape = match (best, esc) {
                    (_, None) => false,
                    (None, Some(_)) => true,
                    (Some((_, bd)), Some(ed)) => ed > bd,
                };
                if take_escape {
                    let m = escape.expect("escape digit");
                    out.push(m);
                    escapes += 1.0;
                    escape = Some(if m <= LABEL_CAP / 2 { 2 * m } else { m + 1 });
                } else if let Some((i, _)) = best {
                    out.push(labels[i]);
                    counts[i] += 1.0;
                } else {
                    return Err(Error::Precondition("empty recipe".into()));
                }
            }
            Ok(out)
        }
    }
}

/// Symbol stream, cylinder points and running Birkhoff averages of level-1
/// potentials over the first `horizon` symbols.
pub fn sample_orbit(system: &BranchSystem, recipe: &Recipe, horizon: usize, potentials: &[Potential]) -> Result<OrbitTrace> {
    for phi in potentials {
        phi.validate()?;
        if phi.level() > 1 || phi.log_derivative_coef() != 0.0 {
            return Err(Error::Unsupported("orbit averages need level-1 potentials without ln|T'|".into()));
        }
    }
    let symbols = symbols(system, recipe, horizon)?;
    let mut points = Vec::with_capacity(horizon);
    for k in 1..=symbols.len() {
        let mut y = 0.5;
        for &s in symbols[..k].iter().rev() {
            y = system.inverse(s, y)?;
        }
        points.push(y);
    }
    let mut averages = Vec::with_capacity(potentials.len());
    for phi in potentials {
        let mut sum = 0.0;
        let mut row = Vec::with_capacity(horizon);
        for (k, &s) in symbols.iter().enumerate() {
            sum += phi.level1_value(s as f64)?;
            row.push(sum / (k + 1) as f64);
        }
        averages.push(row);
    }
    Ok(OrbitTrace {
        symbols,
        points,
        averages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_alternation() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let tr = sample_orbit(&sys, &Recipe::Frequencies(vec![0.5, 0.5]), 1000, &[Potential::indicator(1)]).unwrap();
        assert_eq!(&tr.symbols[..4], &[1, 2, 1, 2]);
        assert!((tr.averages[0].last().unwrap() - 0.5).abs() <= 0.002);
    }

    #[test]
    fn golden_point() {
        let g = BranchSystem::gauss();
        let tr = sample_orbit(&g, &Recipe::Periodic(vec![1]), 60, &[Potential::harmonic()]).unwrap();
        let x = (5f64.sqrt() - 1.0) / 2.0;
        assert!((tr.points.last().unwrap() - x).abs() < 1e-15);
        assert!(tr.averages[0].iter().all(|&a| a == 1.0));
    }

    #[test]
    fn escape_schedule() {
        let g = BranchSystem::gauss();
        let p = [0.5, 0.3, 0.1];
        let n = 2000;
        let tr = sample_orbit(&g, &Recipe::Frequencies(p.to_vec()), n, &[]).unwrap();
        for (i, &pi) in p.iter().enumerate() {
            let c = tr.symbols.iter().filter(|&&s| s == i as u64 + 1).count() as f64;
            assert!((c / n as f64 - pi).abs() <= 2.0 / n as f64, "{i} {c}");
        }
        let esc: Vec<u64> = tr.symbols.iter().copied().filter(|&s| s > 3).collect();
        assert!(esc.len() >= 190 && esc.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(&esc[..3], &[4, 8, 16]);
    }

    #[test]
    fn points_stay_in_cylinders() {
        let sys = BranchSystem::linear(&[0.5, 0.25, 0.125]).unwrap();
        let tr = sample_orbit(&sys, &Recipe::Frequencies(vec![0.2, 0.5, 0.3]), 50, &[]).unwrap();
        for (k, &x) in tr.points.iter().enumerate() {
            let ends = [0.0, 1.0].map(|y| tr.symbols[..=k].iter().rev().fold(y, |y, &s| sys.inverse(s, y).unwrap()));
            assert!(ends[0].min(ends[1]) <= x && x <= ends[0].max(ends[1]));
        }
    }
}
