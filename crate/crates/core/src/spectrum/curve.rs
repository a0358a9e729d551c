//! Spectrum on a grid of `α`, with transition rows.

use super::legendre::{LegendreOptions, SpectrumSolver};
use super::{Regime, SpectrumPoint};
use crate::branch_systems::{BranchSystem, Potential};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct CurveOptions {
    pub legendre: LegendreOptions,
    /// Adds rows where the curve leaves or rejoins the `s_∞` floor and at the
    /// moment `α̃` of the equilibrium state for `dim Λ`.
    pub transitions: bool,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            legendre: LegendreOptions::default(),
            transitions: true,
        }
    }
}

/// Spectrum rows for every `α` in `alphas` (plus transitions), sorted by `α`.
pub fn spectrum_curve(
    system: &BranchSystem,
    phi: &Potential,
    alphas: &[f64],
    opts: &CurveOptions,
) -> Result<Vec<SpectrumPoint>> {
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::Precondition("α grid must be finite".into()));
    }
    let solver = SpectrumSolver::new(system, phi, &opts.legendre)?;
    curve_with(&solver, alphas, opts.transitions)
}

pub(crate) fn curve_with(solver: &SpectrumSolver, alphas: &[f64], transitions: bool) -> Result<Vec<SpectrumPoint>> {
    let mut grid = alphas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut rows: Vec<SpectrumPoint> = grid.iter().map(|&a| solver.point(a)).collect();
    if transitions {
        let mut extra = Vec::new();
        for pair in rows.windows(2) {
            let (l, r) = (&pair[0], &pair[1]);
            let floor_l = l.regime == Regime::FlatFloor;
            let floor_r = r.regime == Regime::FlatFloor;
            let legendre_l = l.regime == Regime::Legendre;
            let legendre_r = r.regime == Regime::Legendre;
            let name = if floor_l && legendre_r {
                "alpha_lower"
            } else if legendre_l && floor_r {
                "alpha_upper"
            } else {
                continue;
            };
            if let Some(a) = transition(solver, l.alpha, r.alpha) {
                let mut p = solver.point(a);
                p.note = Some(name.into());
                extra.push(p);
            }
        }
        if let Ok((_, alpha)) = solver.equilibrium_moment() {
            let lo = grid.first().copied().unwrap_or(alpha);
            let hi = grid.last().copied().unwrap_or(alpha);
            if alpha > lo && alpha < hi {
                let tol = 1e-12 * alpha.abs().max(1.0);
                match rows.iter_mut().find(|r| (r.alpha - alpha).abs() <= tol && r.note.is_none()) {
                    Some(r) => r.note = Some("alpha_tilde".into()),
                    None => {
                        let mut p = solver.point(alpha);
                        p.note = Some("alpha_tilde".into());
                        extra.push(p);
                    }
                }
            }
        }
        rows.extend(extra);
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    }
    Ok(rows)
}

/// Bisection on `above_floor` between two grid points of opposite status.
fn transition(solver: &SpectrumSolver, mut a: f64, mut b: f64) -> Option<f64> {
    let side_a = solver.above_floor(a)?;
    if solver.above_floor(b)? == side_a {
        return None;
    }
    while b - a > 1e-12 * a.abs().max(1.0) {
        let mid = 0.5 * (a + b);
        match solver.above_floor(mid) {
            Some(s) if s == side_a => a = mid,
            Some(_) => b = mid,
            None => return None,
        }
    }
    // report the floor side so the row sits on the flat part
    Some(if side_a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::flat_bounds;

    #[test]
    fn flat_example_curve() {
        let sys = BranchSystem::flat_example(0.55, 0.6, 0.5).unwrap();
        let phi = Potential::indicator(1);
        let b = flat_bounds(&sys, &phi).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let rows = spectrum_curve(&sys, &phi, &grid, &CurveOptions::default()).unwrap();
        let lower = rows.iter().find(|r| r.note.as_deref() == Some("alpha_lower")).unwrap();
        let upper = rows.iter().find(|r| r.note.as_deref() == Some("alpha_upper")).unwrap();
        assert!((lower.alpha - b.alpha_lower).abs() < 1e-7, "{} {}", lower.alpha, b.alpha_lower);
        assert!((upper.alpha - b.alpha_upper).abs() < 1e-7, "{} {}", upper.alpha, b.alpha_upper);
        let tilde = rows.iter().find(|r| r.note.as_deref() == Some("alpha_tilde")).unwrap();
        let top = tilde.dim.unwrap();
        for r in &rows {
            match r.regime {
                Regime::Legendre => {
                    let d = r.dim.unwrap();
                    assert!(d > 0.5 && d <= top + 1e-9, "{r:?}");
                    let [r1, r2] = r.residuals.unwrap();
                    assert!(r1 <= 1e-9 && r2 <= 1e-9, "{r:?}");
                }
                Regime::FlatFloor | Regime::Endpoint => assert!((r.dim.unwrap() - 0.5).abs() < 1e-6, "{r:?}"),
                _ => panic!("{r:?}"),
            }
        }
        // increasing before α̃, decreasing after
        let leg: Vec<&SpectrumPoint> = rows.iter().filter(|r| r.regime == Regime::Legendre).collect();
        for w in leg.windows(2) {
            let (d0, d1) = (w[0].dim.unwrap(), w[1].dim.unwrap());
            if w[1].alpha <= tilde.alpha {
                assert!(d1 >= d0 - 1e-12);
            } else if w[0].alpha >= tilde.alpha {
                assert!(d1 <= d0 + 1e-12);
            }
        }
    }
}
