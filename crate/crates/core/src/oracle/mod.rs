//! Closed forms, brute-force checks and orbit sampling used to validate the
//! other modules on small instances.

mod orbit;
mod suite;

use serde::{Deserialize, Serialize};

pub use orbit::{sample_orbit, OrbitTrace, Recipe};
pub use suite::{verify, Suite};

use crate::error::Result;
use crate::numfmt;

/// One comparison between an oracle value and a module value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    #[serde(with = "numfmt::f64_ext")]
    pub oracle: f64,
    #[serde(with = "numfmt::f64_ext")]
    pub module: f64,
    #[serde(with = "numfmt::f64_ext")]
    pub difference: f64,
    #[serde(with = "numfmt::f64_ext")]
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, oracle: f64, module: f64, tolerance: f64) -> Self {
        let difference = if oracle == module { 0.0 } else { (oracle - module).abs() };
        Self {
            quantity: quantity.into(),
            oracle,
            module,
            difference,
            tolerance,
            pass: difference <= tolerance,
        }
    }

    /// A one-sided check `module >= oracle - tolerance`; the difference is
    /// the size of the violation.
    pub fn at_least(quantity: impl Into<String>, oracle: f64, module: f64, tolerance: f64) -> Self {
        let difference = (oracle - module).max(0.0);
        Self {
            quantity: quantity.into(),
            oracle,
            module,
            difference,
            tolerance,
            pass: difference <= tolerance,
        }
    }

    /// A report for a computation that failed outright.
    pub fn failed(quantity: impl Into<String>, oracle: f64, message: &str) -> Self {
        Self {
            quantity: format!("{} ({message})", quantity.into()),
            oracle,
            module: f64::NAN,
            difference: f64::INFINITY,
            tolerance: 0.0,
            pass: false,
        }
    }
}

/// `(-Σ p_i ln p_i) / (-Σ p_i ln r_i)`; zero for an atomic vector.
pub fn besicovitch_eggleston(p: &[f64], r: &[f64]) -> f64 {
    assert_eq!(p.len(), r.len(), "one diameter per frequency");
    let mut h = 0.0;
    let mut lambda = 0.0;
    for (&pi, &ri) in p.iter().zip(r) {
        if pi > 0.0 {
            h -= pi * pi.ln();
            lambda -= pi * ri.ln();
        }
    }
    if h <= 0.0 || lambda <= 0.0 {
        0.0
    } else {
        h / lambda
    }
}

/// Root of `Σ r_i^t = 1` by bisection on `ln Σ r_i^t`.
pub fn moran_root(r: &[f64]) -> f64 {
    assert!(!r.is_empty() && r.iter().all(|&x| x > 0.0 && x < 1.0), "diameters must lie in (0, 1)");
    let logs: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let f = |t: f64| {
        let m = logs.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(t * l));
        m + logs.iter().map(|&l| (t * l - m).exp()).sum::<f64>().ln()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Evaluates a quantity along increasing truncations `(q, n)` and reports a
/// violation of `v_{k+1} >= v_k` beyond `1e-12` at each rung, followed by the
/// last gap `|v_K - v_{K-1}|` (informational, always passing).
pub fn truncation_ladder_check(
    name: &str,
    mut evaluate: impl FnMut(usize, usize) -> Result<f64>,
    ladder: &[(usize, usize)],
) -> Vec<OracleReport> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    let mut last_gap = None;
    for (k, &(q, n)) in ladder.iter().enumerate() {
        if k > 0 {
            let (pq, pn) = ladder[k - 1];
            if q < pq || n < pn || (q, n) == (pq, pn) {
                out.push(OracleReport::failed(format!("{name} ladder"), f64::NAN, "ladder not increasing"));
                return out;
            }
        }
        let label = format!("{name} monotone at q={q} n={n}");
        match evaluate(q, n) {
            Ok(v) => {
                if let Some(p) = prev {
                    out.push(OracleReport::at_least(label, p, v, 1e-12));
                    last_gap = Some((v - p).abs());
                }
                prev = Some(v);
            }
            Err(e) => {
                out.push(OracleReport::failed(label, prev.unwrap_or(f64::NAN), &e.to_string()));
                return out;
            }
        }
    }
    if let Some(g) = last_gap {
        out.push(OracleReport::new(format!("{name} final gap"), 0.0, g, f64::INFINITY));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(besicovitch_eggleston(&[0.5, 0.5], &[0.5, 0.5]), 1.0);
        assert_eq!(besicovitch_eggleston(&[1.0, 0.0], &[0.3, 0.2]), 0.0);
        let h = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((besicovitch_eggleston(&[0.25, 0.75], &[0.5, 0.5]) - h / 2f64.ln()).abs() < 1e-15);
        assert!((moran_root(&[0.5, 0.5]) - 1.0).abs() < 1e-12);
        assert!((moran_root(&[1.0 / 3.0; 3]) - 1.0).abs() < 1e-12);
        // x + x² = 1 with x = 2^{-t}
        let x = (5f64.sqrt() - 1.0) / 2.0;
        assert!((moran_root(&[0.5, 0.25]) + x.log2()).abs() < 1e-12);
    }

    #[test]
    fn variational_inequality() {
        let r = [0.5, 0.25, 0.125];
        let t = moran_root(&r);
        for p in [[0.2, 0.3, 0.5], [0.6, 0.3, 0.1], [1.0 / 3.0; 3]] {
            assert!(besicovitch_eggleston(&p, &r) <= t + 1e-15);
        }
        let p: Vec<f64> = r.iter().map(|x: &f64| x.powf(t)).collect();
        assert!((besicovitch_eggleston(&p, &r) - t).abs() < 1e-12);
    }

    #[test]
    fn ladder_reports() {
        let r = truncation_ladder_check("const", |_, _| Ok(1.0), &[(2, 1), (2, 2), (2, 3)]);
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|x| x.pass));
        let r = truncation_ladder_check("down", |q, _| Ok(-(q as f64)), &[(1, 1), (2, 1)]);
        assert!(!r[0].pass);
        let r = truncation_ladder_check("bad", |_, _| Ok(0.0), &[(2, 1), (1, 1)]);
        assert!(!r[0].pass);
    }
}
