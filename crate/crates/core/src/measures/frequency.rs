//! Dimension of sets of points with prescribed digit frequencies on linear
//! systems: `max{s_∞, α_3(p)}`.

use serde::{Deserialize, Serialize};

use super::shannon;
use crate::branch_systems::BranchSystem;
use crate::error::{Error, Result};
use crate::numfmt;
use crate::thermo::countable::{level1_log_sums, Geometry};
use crate::thermo::s_infinity;

const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyMode {
    /// Every frequency is given; missing entries are zero.
    Full,
    /// Only the listed frequencies are pinned; the rest are free.
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "variational")]
    Variational,
    #[serde(rename = "s_inf-floor")]
    SInfFloor,
    #[serde(rename = "empty")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqDimResult {
    /// `None` when the set is empty.
    #[serde(with = "numfmt::opt_f64_ext")]
    pub dimension: Option<f64>,
    pub s_inf: f64,
    /// Supremum of `h/λ` over invariant measures with the pinned
    /// frequencies; `None` when no such measure exists.
    #[serde(with = "numfmt::opt_f64_ext")]
    pub alpha3: Option<f64>,
    pub regime: Regime,
}

/// Frequencies `p[i]` refer to the branch at position `i`.
pub fn digit_frequency_dimension(system: &BranchSystem, p: &[f64], mode: FrequencyMode) -> Result<FreqDimResult> {
    if !system.is_linear() {
        return Err(Error::Unsupported("digit frequencies need a linear system".into()));
    }
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Precondition(format!("frequency {v} is negative")));
    }
    let labels = (0..p.len())
        .map(|i| {
            system.label_at(i).ok_or(Error::TruncationTooLarge {
                requested: p.len(),
                available: system.branch_count().unwrap_or(0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let s_inf = s_infinity(system, 1e-6)?.value;
    let total: f64 = p.iter().sum();
    let empty = FreqDimResult {
        dimension: None,
        s_inf,
        alpha3: None,
        regime: Regime::Empty,
    };
    if total > 1.0 + SUM_TOL {
        return Ok(empty);
    }
    let ell: Vec<f64> = labels
        .iter()
        .map(|&l| system.log_diameter(l).map(|v| -v))
        .collect::<Result<_>>()?;
    let pinned_h = shannon(p);
    let pinned_l: f64 = p.iter().zip(&ell).map(|(a, b)| a * b).sum();
    let free = 1.0 - total;

    let alpha3 = if free <= SUM_TOL {
        Some(pinned_h / pinned_l)
    } else {
        match mode {
            FrequencyMode::Full => None,
            FrequencyMode::Partial => partial_alpha3(system, &labels, pinned_h, pinned_l, free, s_inf),
        }
    };
    let Some(a3) = alpha3 else {
        return Ok(match mode {
            FrequencyMode::Full => FreqDimResult {
                dimension: Some(s_inf),
                s_inf,
                alpha3: None,
                regime: Regime::SInfFloor,
            },
            FrequencyMode::Partial => empty,
        });
    };
    let (dimension, regime) = if a3 > s_inf { (a3, Regime::Variational) } else { (s_inf, Regime::SInfFloor) };
    Ok(FreqDimResult {
        dimension: Some(dimension),
        s_inf,
        alpha3: Some(a3),
        regime,
    })
}

/// Root of `F(r) = H_pin - r L_pin + m ln Z_r - m ln m`, with
/// `Z_r = Σ_{free i} diam(I_i)^r`: the optimal free mass is spread as
/// `m diam^r / Z_r`. `F` decreases in `r`, `F(1) <= 0`, and `F = ∞` where
/// `Z_r` diverges, so the supremum is at least `s_∞` on infinite alphabets.
fn partial_alpha3(system: &BranchSystem, pinned: &[u64], h: f64, l: f64, m: f64, s_inf: f64) -> Option<f64> {
    let max_label = pinned.iter().copied().max().unwrap_or(0);
    let is_pinned = |x: f64| x.fract() == 0.0 && x <= max_label as f64 && pinned.contains(&(x as u64));
    let free_count = system.branch_count().map(|c| c - pinned.len());
    if free_count == Some(0) {
        return None;
    }
    let f = |r: f64| -> f64 {
        match level1_log_sums::<1>(system, Geometry::Diameter, r, max_label, |x, _| {
            [if is_pinned(x) { f64::NEG_INFINITY } else { 0.0 }]
        }) {
            None => f64::INFINITY,
            Some([z]) => h - r * l + m * (z.estimate - m.ln()),
        }
    };
    let (mut lo, mut hi) = (s_inf, 1.0);
    if f(lo) <= 0.0 {
        return Some(lo);
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch_systems::TailModel;

    fn quarter_entropy() -> f64 {
        -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln())
    }

    #[test]
    fn doubling_full_vector() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let r = digit_frequency_dimension(&sys, &[0.25, 0.75], FrequencyMode::Full).unwrap();
        assert!((r.dimension.unwrap() - quarter_entropy() / 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.regime, Regime::Variational);
    }

    #[test]
    fn over_full_is_empty() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let r = digit_frequency_dimension(&sys, &[0.5, 0.6], FrequencyMode::Full).unwrap();
        assert_eq!(r.regime, Regime::Empty);
        assert!(r.dimension.is_none());
    }

    fn half_tail() -> BranchSystem {
        let tail = TailModel {
            c: 0.1,
            a: 2.0,
            b: 1.0,
            d: 0.0,
        };
        BranchSystem::linear_with_tail(&[0.3, 0.2], Some(tail)).unwrap()
    }

    #[test]
    fn deficient_vector_gives_floor() {
        let sys = half_tail();
        let r = digit_frequency_dimension(&sys, &[0.5, 0.4], FrequencyMode::Full).unwrap();
        assert_eq!(r.dimension, Some(r.s_inf));
        assert!((r.s_inf - 0.5).abs() < 1e-6);
        assert_eq!(r.regime, Regime::SInfFloor);
        let dirac = digit_frequency_dimension(&sys, &[1.0], FrequencyMode::Full).unwrap();
        assert_eq!(dirac.dimension, Some(r.s_inf));
    }

    #[test]
    fn partial_mode_matches_dinkelbach_on_finite_system() {
        // pin p_1 = 0.2 on diameters (1/2, 1/4, 1/8); free mass on 2 and 3
        // is spread as 0.8 d^r / Z_r; check F(r) = 0 at the returned value
        let sys = BranchSystem::linear(&[0.5, 0.25, 0.125]).unwrap();
        let r = digit_frequency_dimension(&sys, &[0.2], FrequencyMode::Partial).unwrap();
        let a = r.alpha3.unwrap();
        let ln2 = 2f64.ln();
        let z = 0.25f64.powf(a) + 0.125f64.powf(a);
        let f = -0.2 * 0.2f64.ln() - a * 0.2 * ln2 + 0.8 * (z.ln() - 0.8f64.ln());
        assert!(f.abs() < 1e-12, "{f}");
        // and the maximizing Bernoulli vector attains that ratio
        let p2 = 0.8 * 0.25f64.powf(a) / z;
        let p = [0.2, p2, 0.8 - p2];
        let ratio = shannon(&p) / ((0.2 + 2.0 * p[1] + 3.0 * p[2]) * ln2);
        assert!((ratio - a).abs() < 1e-12);
    }
}
