//! Flat parts of the spectrum for `φ = χ_{I_1}` on systems where
//! `P(q(φ - α) - s_∞ ln|T'|) = ln(K e^q + C) - αq` with
//! `K = |I_1|^{s_∞}`, `C = Σ_{i>=2} |I_i|^{s_∞}`.

use serde::{Deserialize, Serialize};

use super::legendre::{LegendreOptions, SpectrumSolver};
use crate::branch_systems::{BranchSystem, Observable, Potential};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::series::log_add;
use crate::thermo::countable::{level1_log_sums, Geometry};
use crate::thermo::s_infinity;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatBounds {
    pub k: f64,
    pub c: f64,
    pub s_inf: f64,
    /// Upper end of the lower flat interval `[0, α_*]`: `sup_{q<q_-} α(q)`.
    pub alpha_lower: f64,
    /// Lower end of the upper flat interval `[α^*, 1]`: `inf_{q>q_+} α(q)`.
    pub alpha_upper: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    /// Numerical roots of `α(q) = 0` and `α(q) = 1`.
    pub q_minus_root: f64,
    pub q_plus_root: f64,
    /// Where the extrema of `α(q)` are attained.
    pub q_at_lower: f64,
    pub q_at_upper: f64,
}

/// `α(q) = ln(K e^q + C) / q`.
fn alpha_of(log_k: f64, log_c: f64, q: f64) -> f64 {
    log_add(log_k + q, log_c) / q
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Coarse grid scan followed by golden-section refinement around the best
/// grid point.
fn maximize(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> f64 {
    let n = 2000;
    let h = (b - a) / n as f64;
    let best = (1..n)
        .map(|i| a + i as f64 * h)
        .max_by(|x, y| f(*x).total_cmp(&f(*y)))
        .expect("grid");
    golden_max(f, (best - h).max(a), (best + h).min(b), 1e-12)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) < 0 < f(hi) or the reverse; keeps the sign pattern
    let s = f(lo).signum();
    while (hi - lo).abs() > 1e-15 * lo.abs().max(hi.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid).signum() == s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Flat-interval ends for the indicator of the first branch.
pub fn flat_bounds(system: &BranchSystem, phi: &Potential) -> Result<FlatBounds> {
    let first = system
        .label_at(0)
        .ok_or_else(|| Error::Precondition("system has no branches".into()))?;
    let is_indicator = phi.terms.len() == 1
        && phi.terms[0].coef == 1.0
        && phi.terms[0].observable == Observable::Indicator { label: first };
    if !is_indicator || !system.is_linear() || system.is_finite() {
        return Err(Error::Precondition(
            "flat bounds need χ of the first branch on a countable linear system".into(),
        ));
    }
    let s_inf = s_infinity(system, 1e-9)?.value;
    let log_k = s_inf * system.log_diameter(first)?;
    let [rest] = level1_log_sums::<1>(system, Geometry::Diameter, s_inf, first, |x, _| {
        [if x == first as f64 { f64::NEG_INFINITY } else { 0.0 }]
    })
    .ok_or_else(|| Error::Precondition("Σ_{i>=2} |I_i|^{s_∞} diverges".into()))?;
    let log_c = rest.estimate;
    let (k, c) = (log_k.exp(), log_c.exp());
    if !(c < 1.0 && k + c > 1.0) {
        return Err(Error::Precondition(format!("need C < 1 and K + C > 1 (K={k}, C={c})")));
    }
    let q_minus = ((1.0 - c) / k).ln();
    let q_plus = (c / (1.0 - k)).ln();
    // ln(K e^q + C) = 0 on q < 0 and ln(K + C e^{-q}) = 0 on q > 0, each monotone
    let q_minus_root = bisect(|q| log_add(log_k + q, log_c), -60.0, 0.0);
    let q_plus_root = bisect(|q| log_add(log_k, log_c - q), 0.0, 60.0 + (-log_k).max(0.0));
    if (q_minus_root - q_minus).abs() > 1e-9 || (q_plus_root - q_plus).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "closed-form q± ({q_minus}, {q_plus}) disagree with roots ({q_minus_root}, {q_plus_root})"
        )));
    }
    let alpha = |q: f64| alpha_of(log_k, log_c, q);
    let q_at_lower = maximize(alpha, q_minus - 200.0, q_minus);
    let q_at_upper = maximize(|q| -alpha(q), q_plus, q_plus + 200.0);
    Ok(FlatBounds {
        k,
        c,
        s_inf,
        alpha_lower: alpha(q_at_lower),
        alpha_upper: alpha(q_at_upper),
        q_minus,
        q_plus,
        q_minus_root,
        q_plus_root,
        q_at_lower,
        q_at_upper,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatCertificate {
    pub alpha: f64,
    pub delta: f64,
    /// `q̂` with `P(q̂(φ - α) - δ ln|T'|) <= 0`.
    #[serde(with = "numfmt::opt_f64_ext")]
    pub witness: Option<f64>,
    /// Minimizer of `q ↦ P(q(φ - α) - δ ln|T'|)` (clamped to `|q| <= q_max`).
    pub argmin: f64,
    #[serde(with = "numfmt::f64_ext")]
    pub min_value: f64,
}

impl SpectrumSolver {
    /// Minimizes the convex `q ↦ f(δ, q) - qα`. A non-positive minimum
    /// certifies `sup h/λ <= δ` over measures with `∫φ = α`.
    pub fn certificate(&self, alpha: f64, delta: f64) -> FlatCertificate {
        let surface = self.surface();
        let value = |q: f64| surface.value(delta, q) - q * alpha;
        let q = match self.inner(delta, alpha) {
            Some(s) => s.q,
            None => {
                // α outside the slope range at δ: the minimum is at an end
                let v0 = surface.eval(delta, 0.0);
                if !v0.f.is_finite() {
                    return FlatCertificate {
                        alpha,
                        delta,
                        witness: None,
                        argmin: 0.0,
                        min_value: f64::INFINITY,
                    };
                }
                let q_max = 1e4;
                if v0.slope < alpha {
                    q_max
                } else {
                    -q_max
                }
            }
        };
        let min_value = value(q);
        FlatCertificate {
            alpha,
            delta,
            witness: (min_value <= 1e-12).then_some(q),
            argmin: q,
            min_value,
        }
    }
}

/// Certificate search at `δ` with a default solver.
pub fn flat_certificate(system: &BranchSystem, phi: &Potential, alpha: f64, delta: f64) -> Result<FlatCertificate> {
    Ok(SpectrumSolver::new(system, phi, &LegendreOptions::default())?.certificate(alpha, delta))
}
