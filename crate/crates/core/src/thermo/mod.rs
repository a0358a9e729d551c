//! Topological pressure from periodic-word sums, the critical exponent `s_∞`
//! and roots of `t ↦ P(-t ln|T'|)`.

pub mod countable;
mod root;
mod sinf;
pub mod words;

use serde::{Deserialize, Serialize};

use crate::branch_systems::{BranchSystem, Potential};
use crate::error::{Error, Result};
use crate::numfmt;
pub use countable::{level1_log_sums, nested_log_sum, tail_converges, Geometry};
pub use root::{pressure_root, RootMethod, RootOptions, RootResult};
pub use sinf::{s_infinity, SInfinityCertificate, SInfinityResult};
pub use words::WordTable;

/// Default cap on word evaluations per pressure call.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// How the alphabet is cut down before summing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// First `q` branches, exhaustive word enumeration.
    Finite(usize),
    /// Full alphabet through tail series.
    Countable,
}

#[derive(Clone, Copy, Debug)]
pub struct PressureOptions {
    pub budget: u64,
    pub workers: usize,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            workers: 1,
        }
    }
}

impl PressureOptions {
    /// Defaults with the budget taken from `THERMOSPEC_BUDGET` when set.
    pub fn from_env() -> Self {
        let mut o = Self::default();
        if let Some(b) = std::env::var("THERMOSPEC_BUDGET").ok().and_then(|s| s.trim().parse::<u64>().ok()) {
            o.budget = b.max(1);
        }
        o
    }

    pub fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .expect("thread pool")
    }
}

/// Per-level periodic sums with an extrapolated limit and a bracket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub truncation: Truncation,
    /// `v_1, …, v_n`.
    #[serde(with = "numfmt::vec_f64_ext")]
    pub levels: Vec<f64>,
    #[serde(with = "numfmt::f64_ext")]
    pub extrapolated: f64,
    /// Size of the last extrapolation correction.
    #[serde(with = "numfmt::f64_ext")]
    pub extrapolation_error: f64,
    /// `[max_n (v_n - D_n/n), min_n (v_n + D_n/n)]` with `D_n = Σ_{j<=n} var_j`.
    #[serde(with = "numfmt::pair_f64_ext")]
    pub bracket: [f64; 2],
    /// The untruncated pressure is infinite (tail series diverges).
    pub infinite: bool,
}

impl PressureEstimate {
    /// Combines level values and cumulative variations into an estimate.
    pub fn from_levels(truncation: Truncation, levels: Vec<f64>, dist_sums: &[f64], infinite: bool) -> Self {
        let n = levels.len();
        assert!(n >= 1 && dist_sums.len() == n);
        if levels.iter().any(|v| v.is_infinite() && *v > 0.0) {
            return Self {
                truncation,
                levels,
                extrapolated: f64::INFINITY,
                extrapolation_error: 0.0,
                bracket: [f64::INFINITY, f64::INFINITY],
                infinite: true,
            };
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (i, (&v, &d)) in levels.iter().zip(dist_sums).enumerate() {
            let k = (i + 1) as f64;
            lo = lo.max(v - d / k);
            hi = hi.min(v + d / k);
        }
        let (mut est, err) = extrapolate(&levels);
        if hi < lo {
            // rounding in degenerate cases
            let mid = 0.5 * (lo + hi);
            lo = mid;
            hi = mid;
        }
        est = est.clamp(lo, hi);
        Self {
            truncation,
            levels,
            extrapolated: est,
            extrapolation_error: err,
            bracket: [lo, hi],
            infinite,
        }
    }
}

/// Aitken Δ² on the increments `r_n = n v_n - (n-1) v_{n-1}`.
pub fn extrapolate(levels: &[f64]) -> (f64, f64) {
    let n = levels.len();
    let r: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                levels[0]
            } else {
                (i + 1) as f64 * levels[i] - i as f64 * levels[i - 1]
            }
        })
        .collect();
    match n {
        1 => (r[0], 0.0),
        2 => (r[1], (r[1] - r[0]).abs()),
        _ => {
            let (a, b, c) = (r[n - 3], r[n - 2], r[n - 1]);
            let d1 = c - b;
            let d2 = c - 2.0 * b + a;
            let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
            if d2.abs() <= 1e-14 * scale || (d1 / d2).abs() > 9.0 {
                // no geometric signal: increments already converged or oscillate
                (c, d1.abs())
            } else {
                let lim = c - d1 * d1 / d2;
                (lim, (lim - c).abs())
            }
        }
    }
}

/// Periodic-sum pressure of `φ - t ln|T'|`.
///
/// With [`Truncation::Finite`] all words over the first `q` branches are
/// enumerated for each level `1..=n_max`; the `infinite` flag reports
/// divergence of the untruncated level-1 series. With
/// [`Truncation::Countable`] level-1 potentials on linear systems use the
/// exact level-1 formula and Möbius systems use nested tail series.
pub fn pressure(
    system: &BranchSystem,
    potential: &Potential,
    t: f64,
    truncation: Truncation,
    n_max: usize,
    opts: &PressureOptions,
) -> Result<PressureEstimate> {
    if n_max == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    if potential.level() > n_max {
        return Err(Error::Precondition(format!(
            "potential level {} exceeds n_max {n_max}",
            potential.level()
        )));
    }
    let geo_t = t - potential.log_derivative_coef();
    let phi = potential.without_log_derivative();
    let dist_sums: Vec<f64> = (1..=n_max)
        .map(|n| {
            geo_t.abs() * system.distortion().sum(n) + (1..=n).map(|j| phi.variation(j, system)).sum::<f64>()
        })
        .collect();
    let tail_diverges = system.tail().is_some_and(|tl| !tail_converges(tl, geo_t));
    match truncation {
        Truncation::Finite(q) => {
            let mut levels = Vec::with_capacity(n_max);
            let mut used: u64 = 0;
            let pool = opts.pool();
            let eval = phi.evaluator();
            for n in 1..=n_max {
                let words = (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
                if used.saturating_add(words) > opts.budget {
                    if levels.is_empty() {
                        return Err(Error::BudgetExceeded {
                            budget: opts.budget,
                            level: n,
                            partial: Box::new(PressureEstimate {
                                truncation,
                                levels: Vec::new(),
                                extrapolated: f64::NAN,
                                extrapolation_error: f64::NAN,
                                bracket: [f64::NEG_INFINITY, f64::INFINITY],
                                infinite: tail_diverges,
                            }),
                        });
                    }
                    let k = levels.len();
                    return Err(Error::BudgetExceeded {
                        budget: opts.budget,
                        level: n,
                        partial: Box::new(PressureEstimate::from_levels(
                            truncation,
                            levels,
                            &dist_sums[..k],
                            tail_diverges,
                        )),
                    });
                }
                used += words;
                let table = WordTable::build(system, q, n, std::slice::from_ref(&eval), &pool)?;
                levels.push(table.log_sum(&[1.0], -geo_t, &pool) / n as f64);
            }
            Ok(PressureEstimate::from_levels(truncation, levels, &dist_sums, tail_diverges))
        }
        Truncation::Countable => {
            if tail_diverges {
                return Ok(PressureEstimate::from_levels(truncation, vec![f64::INFINITY], &[0.0], true));
            }
            if system.is_linear() && phi.level() == 1 {
                let v = pressure_locally_constant(system, &phi, geo_t, None)?;
                return Ok(PressureEstimate::from_levels(
                    truncation,
                    vec![v.value; n_max],
                    &dist_sums,
                    false,
                ));
            }
            if phi.level() > 1 {
                return Err(Error::Unsupported("countable mode needs a level-1 potential".into()));
            }
            let levels = (1..=n_max)
                .map(|n| nested_log_sum(system, &phi, geo_t, n).map(|s| s / n as f64))
                .collect::<Result<Vec<_>>>()?;
            Ok(PressureEstimate::from_levels(truncation, levels, &dist_sums, false))
        }
    }
}

/// Level-1 pressure `ln Σ_i e^{φ(i)} diam(I_i)^t` of a linear system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level1Pressure {
    #[serde(with = "numfmt::f64_ext")]
    pub value: f64,
    #[serde(with = "numfmt::pair_f64_ext")]
    pub bracket: [f64; 2],
}

/// Closed-form pressure for linear systems and level-1 potentials; the sum
/// runs over the first `q` branches or over all branches with a certified
/// tail bracket. Returns `+∞` when the tail series diverges.
pub fn pressure_locally_constant(system: &BranchSystem, potential: &Potential, t: f64, q: Option<usize>) -> Result<Level1Pressure> {
    if !system.is_linear() {
        return Err(Error::Unsupported("closed-form pressure needs a linear system".into()));
    }
    if potential.level() > 1 {
        return Err(Error::Unsupported("closed-form pressure needs a level-1 potential".into()));
    }
    let t = t - potential.log_derivative_coef();
    let phi = potential.without_log_derivative();
    let sys = match q {
        Some(q) => system.truncate(q)?,
        None => system.clone(),
    };
    let value = level1_log_sums::<1>(&sys, Geometry::Diameter, t, phi.max_label(), |x, _| {
        [phi.level1_value(x).unwrap_or(0.0)]
    });
    Ok(match value {
        None => Level1Pressure {
            value: f64::INFINITY,
            bracket: [f64::INFINITY, f64::INFINITY],
        },
        Some([s]) => Level1Pressure {
            value: s.estimate,
            bracket: [s.lower, s.upper],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_closed_forms() {
        let sys = BranchSystem::linear(&[0.5, 0.25]).unwrap();
        let p = pressure(&sys, &Potential::zero(), 1.0, Truncation::Finite(2), 4, &PressureOptions::default()).unwrap();
        for v in &p.levels {
            assert!((v - 0.75f64.ln()).abs() < 1e-14);
        }
        assert!((p.extrapolated - 0.75f64.ln()).abs() < 1e-14);
        let d = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let p = pressure(&d, &Potential::zero(), 0.0, Truncation::Finite(2), 3, &PressureOptions::default()).unwrap();
        assert!((p.extrapolated - 2f64.ln()).abs() < 1e-14);
        let l1 = pressure_locally_constant(&d, &Potential::zero(), 1.0, None).unwrap();
        assert!(l1.value.abs() < 1e-15);
    }

    #[test]
    fn flat_example_level1_values() {
        let sys = BranchSystem::flat_example(0.55, 0.6, 0.5).unwrap();
        let p0 = pressure_locally_constant(&sys, &Potential::zero(), 0.5, None).unwrap();
        assert!((p0.value - 1.15f64.ln()).abs() < 1e-12, "{}", p0.value);
        let p1 = pressure_locally_constant(&sys, &Potential::indicator(1), 0.5, None).unwrap();
        let want = (0.55 * 1f64.exp() + 0.6).ln();
        assert!((p1.value - want).abs() < 1e-12);
        assert!(p1.bracket[0] <= p1.value && p1.value <= p1.bracket[1]);
        let below = pressure_locally_constant(&sys, &Potential::zero(), 0.49, None).unwrap();
        assert!(below.value.is_infinite());
    }

    #[test]
    fn gauss_pressure_at_one() {
        // oracle: v_n from the explicit product of 1/x_j^2 along periodic orbits
        let g = BranchSystem::gauss();
        let q = 40;
        let p = pressure(&g, &Potential::zero(), 1.0, Truncation::Finite(q), 3, &PressureOptions::default()).unwrap();
        let mut acc = 0.0;
        for a in 1..=q as u64 {
            for b in 1..=q as u64 {
                // periodic point of (a, b): x = 1/(a + 1/(b + x))
                let mut x = 0.5f64;
                for _ in 0..200 {
                    x = 1.0 / (a as f64 + 1.0 / (b as f64 + x));
                }
                let y = 1.0 / x - a as f64;
                acc += (x * y).powi(2);
            }
        }
        assert!((p.levels[1] - acc.ln() / 2.0).abs() < 1e-12);
        assert!(p.bracket[0] <= 0.0 && 0.0 <= p.bracket[1] + 0.05);
        assert!(p.extrapolated < 0.0 && p.extrapolated > -0.1, "{p:?}");
        assert!(!p.infinite);
    }

    #[test]
    fn extrapolation_of_geometric_increments() {
        // n v_n = n P + c + ρ^n
        let (p, c, rho) = (0.3, 0.7, -0.3f64);
        let levels: Vec<f64> = (1..=4).map(|n| (n as f64 * p + c + rho.powi(n)) / n as f64).collect();
        let (est, _) = extrapolate(&levels);
        assert!((est - p).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let g = BranchSystem::gauss();
        let opts = PressureOptions { budget: 1000, workers: 1 };
        match pressure(&g, &Potential::zero(), 1.0, Truncation::Finite(30), 3, &opts) {
            Err(Error::BudgetExceeded { level, partial, .. }) => {
                assert_eq!(level, 3);
                assert_eq!(partial.levels.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }
}
