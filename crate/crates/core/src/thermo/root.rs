//! Roots of `t ↦ P(-t ln|T'|)` (Bowen/Moran equation).

use serde::{Deserialize, Serialize};

use super::countable::{level1_log_sums, nested_log_sum, Geometry};
use super::words::WordTable;
use super::{PressureEstimate, PressureOptions, Truncation};
use crate::branch_systems::{BranchSystem, Potential};
use crate::error::{Error, Result};
use crate::numfmt;

/// How `P(-t ln|T'|)` is evaluated during root finding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RootMethod {
    /// Linear systems: exact level-1 sum (tails by series).
    Level1,
    /// All words of length `1..=n` over the first `q` branches.
    Enumerated { q: usize, n: usize },
    /// Nested tail series up to level `n` over the full alphabet.
    Countable { n: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// `None` picks level 1 for linear systems, enumeration for finite
    /// analytic systems and nested series otherwise.
    pub method: Option<RootMethod>,
    /// Target `|P(-t* ln|T'|)|`.
    pub tol: f64,
    pub pressure: PressureOptions,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            method: None,
            tol: 1e-10,
            pressure: PressureOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    /// Root of the extrapolated pressure.
    pub t: f64,
    /// Interval certified by the pressure brackets.
    #[serde(with = "numfmt::pair_f64_ext")]
    pub interval: [f64; 2],
    /// Pressure estimate at `t`.
    pub pressure: PressureEstimate,
    pub method: RootMethod,
    pub evaluations: usize,
}

impl RootMethod {
    pub fn auto(system: &BranchSystem) -> Self {
        if system.is_linear() {
            RootMethod::Level1
        } else if let Some(q) = system.branch_count() {
            RootMethod::Enumerated { q, n: 3 }
        } else {
            RootMethod::Countable { n: 2 }
        }
    }
}

struct Evaluator<'a> {
    system: &'a BranchSystem,
    method: RootMethod,
    tables: Vec<WordTable>,
    pool: rayon::ThreadPool,
    calls: usize,
}

impl<'a> Evaluator<'a> {
    fn new(system: &'a BranchSystem, method: RootMethod, opts: &PressureOptions) -> Result<Self> {
        let pool = opts.pool();
        let mut tables = Vec::new();
        if let RootMethod::Enumerated { q, n } = method {
            if n == 0 || q == 0 {
                return Err(Error::Precondition("q and n must be positive".into()));
            }
            let mut used = 0u64;
            for k in 1..=n {
                used = used.saturating_add((q as u64).checked_pow(k as u32).unwrap_or(u64::MAX));
                if used > opts.budget {
                    let partial = super::pressure(system, &Potential::zero(), 1.0, Truncation::Finite(q), k - 1, opts)
                        .ok()
                        .filter(|_| k > 1);
                    return Err(Error::BudgetExceeded {
                        budget: opts.budget,
                        level: k,
                        partial: Box::new(partial.unwrap_or(PressureEstimate {
                            truncation: Truncation::Finite(q),
                            levels: Vec::new(),
                            extrapolated: f64::NAN,
                            extrapolation_error: f64::NAN,
                            bracket: [f64::NEG_INFINITY, f64::INFINITY],
                            infinite: false,
                        })),
                    });
                }
                tables.push(WordTable::build(system, q, k, &[], &pool)?);
            }
        }
        if method == RootMethod::Level1 && !system.is_linear() {
            return Err(Error::Unsupported("level-1 root finding needs a linear system".into()));
        }
        Ok(Self {
            system,
            method,
            tables,
            pool,
            calls: 0,
        })
    }

    fn eval(&mut self, t: f64) -> Result<PressureEstimate> {
        self.calls += 1;
        let dist = |n: usize| t.abs() * self.system.distortion().sum(n);
        Ok(match self.method {
            RootMethod::Level1 => match level1_log_sums::<1>(self.system, Geometry::Diameter, t, 0, |_, _| [0.0]) {
                None => PressureEstimate::from_levels(Truncation::Countable, vec![f64::INFINITY], &[0.0], true),
                Some([s]) => PressureEstimate {
                    truncation: Truncation::Countable,
                    levels: vec![s.estimate],
                    extrapolated: s.estimate,
                    extrapolation_error: 0.0,
                    bracket: [s.lower, s.upper],
                    infinite: false,
                },
            },
            RootMethod::Enumerated { q, n } => {
                let levels: Vec<f64> = self
                    .tables
                    .iter()
                    .enumerate()
                    .map(|(i, tb)| tb.log_sum(&[], -t, &self.pool) / (i + 1) as f64)
                    .collect();
                let d: Vec<f64> = (1..=n).map(dist).collect();
                let infinite = self.system.tail().is_some_and(|tl| !super::tail_converges(tl, t));
                PressureEstimate::from_levels(Truncation::Finite(q), levels, &d, infinite)
            }
            RootMethod::Countable { n } => {
                let levels = (1..=n)
                    .map(|k| nested_log_sum(self.system, &Potential::zero(), t, k).map(|s| s / k as f64))
                    .collect::<Result<Vec<_>>>()?;
                let d: Vec<f64> = (1..=n).map(dist).collect();
                PressureEstimate::from_levels(Truncation::Countable, levels, &d, false)
            }
        })
    }
}

/// Bisection for `P(-t* ln|T'|) = 0` on `[t_lo, t_hi]`.
///
/// The bracket must straddle a sign change of the extrapolated pressure; an
/// infinite pressure at `t_lo` counts as positive. The reported interval
/// contains every `t` not excluded by the rigorous pressure brackets.
pub fn pressure_root(system: &BranchSystem, bracket: [f64; 2], opts: &RootOptions) -> Result<RootResult> {
    let [t_lo, t_hi] = bracket;
    if !(t_lo < t_hi) {
        return Err(Error::Precondition(format!("empty bracket [{t_lo}, {t_hi}]")));
    }
    let method = opts.method.unwrap_or_else(|| RootMethod::auto(system));
    let mut ev = Evaluator::new(system, method, &opts.pressure)?;
    let p_lo = ev.eval(t_lo)?;
    let p_hi = ev.eval(t_hi)?;
    let f_lo = p_lo.extrapolated;
    let f_hi = p_hi.extrapolated;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Bracket {
            lo: t_lo,
            hi: t_hi,
            f_lo,
            f_hi,
        });
    }
    let (mut a, mut b) = (t_lo, t_hi);
    let mut at_root = p_hi;
    let mut t = 0.5 * (a + b);
    for _ in 0..200 {
        t = 0.5 * (a + b);
        let p = ev.eval(t)?;
        let v = p.extrapolated;
        at_root = p;
        if v.abs() <= opts.tol && b - a <= opts.tol.max(1e-13) {
            break;
        }
        if v > 0.0 {
            a = t;
        } else {
            b = t;
        }
        if b - a <= 1e-15 {
            break;
        }
    }

    // left end: largest t with certified positive pressure, right end: smallest
    // t with certified negative pressure
    let width = 1e-9;
    let left = {
        let lo_at = |e: &mut Evaluator, s: f64| e.eval(s).map(|p| p.bracket[0]);
        if lo_at(&mut ev, t_lo)? > 0.0 {
            let (mut x, mut y) = (t_lo, t);
            while y - x > width {
                let m = 0.5 * (x + y);
                if lo_at(&mut ev, m)? > 0.0 {
                    x = m;
                } else {
                    y = m;
                }
            }
            x
        } else {
            t_lo
        }
    };
    let right = {
        let hi_at = |e: &mut Evaluator, s: f64| e.eval(s).map(|p| p.bracket[1]);
        if hi_at(&mut ev, t_hi)? < 0.0 {
            let (mut x, mut y) = (t, t_hi);
            while y - x > width {
                let m = 0.5 * (x + y);
                if hi_at(&mut ev, m)? < 0.0 {
                    y = m;
                } else {
                    x = m;
                }
            }
            y
        } else {
            t_hi
        }
    };
    Ok(RootResult {
        t,
        interval: [left.min(t), right.max(t)],
        pressure: at_root,
        method,
        evaluations: ev.calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moran_pair() {
        let sys = BranchSystem::linear(&[0.5, 0.25]).unwrap();
        let r = pressure_root(&sys, [0.1, 2.0], &RootOptions::default()).unwrap();
        // x + x^2 = 1 with x = 2^{-t}
        let x = (5f64.sqrt() - 1.0) / 2.0;
        let want = -x.log2();
        assert!((r.t - want).abs() < 1e-10);
        assert!((0.5f64.powf(r.t) + 0.25f64.powf(r.t) - 1.0).abs() < 1e-10);
        assert!(r.interval[0] <= want && want <= r.interval[1]);
    }

    #[test]
    fn doubling_root_is_one() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let r = pressure_root(&sys, [0.5, 1.5], &RootOptions::default()).unwrap();
        assert!((r.t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bracket_must_straddle() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        assert!(matches!(
            pressure_root(&sys, [1.1, 1.5], &RootOptions::default()),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn restricted_gauss_twenty_between_moran_bounds() {
        // finite-truncation Moran sums over digits 20..M sandwich the root:
        // Σ diam^t over 20..M is below the full sum, and the full sum at t is
        // at most the truncated sum plus Σ_{n>M} n^{-2t}.
        let e20 = BranchSystem::gauss().restricted_system(20).unwrap();
        let r = pressure_root(&e20, [0.51, 0.99], &RootOptions::default()).unwrap();
        assert!(r.t > 0.5 && r.t < 0.75, "{r:?}");
        assert!(r.interval[0] <= r.t && r.t <= r.interval[1]);
    }
}
