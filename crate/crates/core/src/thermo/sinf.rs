//! The critical exponent `s_∞ = inf{s : Σ diam(I_i)^s < ∞}`.

use serde::{Deserialize, Serialize};

use super::countable::{level1_log_sums, tail_converges, tail_geometry, Geometry};
use crate::branch_systems::{BranchSystem, Tail};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::series::{log_add, log_integral_log_panels, LogAcc};

/// Preset bound the divergent partial sum must exceed.
const DIVERGENCE_BOUND: f64 = 1e6;
/// Horizon `ln N` and blow-up threshold for the pressure-finiteness scan.
const SCAN_HORIZON: f64 = 1e6;
const SCAN_BOUND: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SInfinityCertificate {
    /// Exponent at which the series diverges.
    pub s_lo: f64,
    /// `ln N` such that `Σ_{i<=N} diam^{s_lo} >= bound`; absent for finite systems.
    #[serde(with = "numfmt::opt_f64_ext")]
    pub log_n: Option<f64>,
    /// Logarithm of a certified lower bound of that partial sum.
    #[serde(with = "numfmt::opt_f64_ext")]
    pub log_partial_lower: Option<f64>,
    /// Logarithm of the preset bound.
    pub log_bound: f64,
    /// Exponent at which the series converges.
    pub s_hi: f64,
    /// Logarithm of an upper bound for `Σ diam^{s_hi}`.
    #[serde(with = "numfmt::f64_ext")]
    pub log_series_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SInfinityResult {
    pub value: f64,
    pub method: String,
    pub certificate: SInfinityCertificate,
    /// Estimate from the level-1 pressure-finiteness scan.
    pub scan_value: f64,
    /// Whether both methods agree within the tolerance.
    pub agree: bool,
    pub tol: f64,
}

/// Computes `s_∞` from the tail exponents, certifies it by a divergent
/// partial sum below and a convergent series bound above, and cross-checks
/// with a scan of `t ↦ P(-t ln|T'|) < ∞` at level 1.
pub fn s_infinity(system: &BranchSystem, tol: f64) -> Result<SInfinityResult> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let Some(tail) = system.tail().copied() else {
        let [s] = level1_log_sums::<1>(system, Geometry::Diameter, 0.0, 0, |_, _| [0.0]).expect("finite sum");
        return Ok(SInfinityResult {
            value: 0.0,
            method: "series-exponent".into(),
            certificate: SInfinityCertificate {
                s_lo: 0.0,
                log_n: None,
                log_partial_lower: None,
                log_bound: DIVERGENCE_BOUND.ln(),
                s_hi: 0.0,
                log_series_upper: s.upper,
            },
            scan_value: 0.0,
            agree: true,
            tol,
        });
    };
    if !tail_converges(&tail, 1.0) {
        return Err(Error::Undetermined("series diverges at s = 1".into()));
    }
    let (alpha, _) = tail.exponents();
    let exact = 1.0 / alpha;

    // series-exponent bisection on the integral-test classification
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if tail_converges(&tail, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let value = exact.clamp(lo, hi);

    let (log_n, log_partial) = divergence_witness(system, &tail, lo)
        .ok_or_else(|| Error::Undetermined(format!("no divergence witness at s = {lo}")))?;
    let [upper] = level1_log_sums::<1>(system, Geometry::Diameter, hi, 0, |_, _| [0.0])
        .ok_or_else(|| Error::Undetermined(format!("series does not converge at s = {hi}")))?;

    let scan_value = pressure_scan(system, &tail, tol.min(1e-4));
    Ok(SInfinityResult {
        value,
        method: "series-exponent".into(),
        certificate: SInfinityCertificate {
            s_lo: lo,
            log_n: Some(log_n),
            log_partial_lower: Some(log_partial),
            log_bound: DIVERGENCE_BOUND.ln(),
            s_hi: hi,
            log_series_upper: upper.upper,
        },
        scan_value,
        agree: (scan_value - value).abs() <= tol,
        tol,
    })
}

/// Log-density in `u = ln x` of the tail terms `exp(-s G(x))`.
fn tail_density(tail: &Tail, geometry: Geometry, s: f64, u: f64) -> f64 {
    let x = u.exp();
    let (alpha, rest) = tail_geometry(tail, geometry, x, u);
    (1.0 - s * alpha) * u - s * rest
}

fn head_log_sum(system: &BranchSystem, geometry: Geometry, s: f64) -> f64 {
    let mut acc = LogAcc::new();
    for b in system.head() {
        let g = match geometry {
            Geometry::Diameter => -system.log_diameter(b.index).expect("head label"),
            Geometry::Periodic => system
                .periodic_log_derivative(&crate::branch_systems::Word::new(vec![b.index]).expect("label"))
                .expect("head label"),
        };
        acc.add(-s * g);
    }
    acc.value()
}

/// Finds `ln N` with `Σ_{i<=N} diam^s >= bound` using the integral lower
/// bound `∫_{first}^{N} diam(x)^s dx` for decreasing tail terms.
fn divergence_witness(system: &BranchSystem, tail: &Tail, s: f64) -> Option<(f64, f64)> {
    let u0 = (tail.first as f64).ln().max(1e-3);
    let head = head_log_sum(system, Geometry::Diameter, s);
    let target = DIVERGENCE_BOUND.ln();
    let mut u1 = 16.0f64;
    while u1 < 1e12 {
        let lower = log_integral_log_panels(u0, u1, 0.01, |u| tail_density(tail, Geometry::Diameter, s, u));
        let total = log_add(head, lower);
        if total >= target {
            return Some((u1, total));
        }
        u1 *= 2.0;
    }
    None
}

/// Bisection on finiteness of the level-1 pressure `P(-t ln|T'|)`: the tail
/// contribution up to the horizon `ln N = 10^6` must stay below a bound.
fn pressure_scan(system: &BranchSystem, tail: &Tail, tol: f64) -> f64 {
    let u0 = (tail.first as f64).ln().max(1e-3);
    let finite = |t: f64| {
        let v = log_integral_log_panels(u0, SCAN_HORIZON, 0.01, |u| tail_density(tail, Geometry::Periodic, t, u));
        log_add(head_log_sum(system, Geometry::Periodic, t), v) <= SCAN_BOUND.ln()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if finite(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch_systems::TailModel;

    #[test]
    fn finite_system_is_zero() {
        let r = s_infinity(&BranchSystem::linear(&[0.5, 0.25]).unwrap(), 1e-3).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn gauss_is_half() {
        let r = s_infinity(&BranchSystem::gauss(), 1e-3).unwrap();
        assert!((r.value - 0.5).abs() <= 1e-3);
        assert!(r.agree, "{r:?}");
        let c = &r.certificate;
        assert!(c.s_lo <= r.value && r.value <= c.s_hi && c.s_hi - c.s_lo <= 1e-3);
        assert!(c.log_partial_lower.unwrap() >= c.log_bound);
        assert!(c.log_series_upper.is_finite());
    }

    #[test]
    fn log_corrected_tail_converges_at_critical_value() {
        let tail = TailModel {
            c: 0.05,
            a: 2.0,
            b: 1.0,
            d: 4.0,
        };
        let sys = BranchSystem::linear_with_tail(&[0.3], Some(tail)).unwrap();
        let r = s_infinity(&sys, 1e-4).unwrap();
        assert!((r.value - 0.5).abs() <= 1e-4);
        assert!(r.agree, "{r:?}");
        assert!(super::super::tail_converges(sys.tail().unwrap(), 0.5));
    }
}
