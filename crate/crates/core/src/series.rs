//! Log-space summation of positive series over countable branch families.
//!
//! Tails are handled as an explicit block of integer terms followed by an
//! Euler-Maclaurin remainder whose integral part is computed with exp-sinh
//! quadrature in the variable `v = ln(x / M)`. Every term is supplied as a
//! logarithm evaluated at `(x, ln x)`, so tails far beyond the `f64` range of
//! `x` stay representable when the caller works in `ln x`.

use std::f64::consts::FRAC_PI_2;

/// Streaming log-sum-exp accumulator. Addition order is the caller's order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogAcc {
    max: f64,
    sum: f64,
}

impl Default for LogAcc {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAcc {
    pub const fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogAcc) {
        if other.sum == 0.0 {
            return;
        }
        if self.sum == 0.0 {
            *self = *other;
            return;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Fixed-order pairwise reduction of partial accumulators.
pub fn pairwise_merge(mut parts: Vec<LogAcc>) -> LogAcc {
    if parts.is_empty() {
        return LogAcc::new();
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        for pair in parts.chunks(2) {
            let mut acc = pair[0];
            if let Some(b) = pair.get(1) {
                acc.merge(b);
            }
            next.push(acc);
        }
        parts = next;
    }
    parts[0]
}

/// `ln(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    let mut acc = LogAcc::new();
    acc.add(a);
    acc.add(b);
    acc.value()
}

/// Logarithm of a positive series sum with a bracket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSum {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl LogSum {
    pub fn exact(v: f64) -> Self {
        Self {
            estimate: v,
            lower: v,
            upper: v,
        }
    }

    pub fn zero() -> Self {
        Self::exact(f64::NEG_INFINITY)
    }

    pub fn combine(&self, other: &LogSum) -> LogSum {
        LogSum {
            estimate: log_add(self.estimate, other.estimate),
            lower: log_add(self.lower, other.lower),
            upper: log_add(self.upper, other.upper),
        }
    }
}

/// Options for [`log_tail_sum`].
#[derive(Clone, Copy, Debug)]
pub struct TailOptions {
    /// Integer terms summed explicitly before switching to the remainder.
    pub explicit: u64,
    /// Largest `ln x` at which the term function may be evaluated; beyond
    /// it the log-density in `ln x` is extrapolated linearly.
    pub max_log_index: Option<f64>,
    /// Relative tolerance for quadrature refinement.
    pub rel_tol: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            explicit: 256,
            max_log_index: None,
            rel_tol: 1e-14,
        }
    }
}

/// Sums `K` positive series `sum_{m >= first} exp(term(m)[k])` sharing nodes.
///
/// The term function is called as `term(x, ln x, w)` and must return
/// `ln(term) + w ln x`, with the `w ln x` part folded in analytically so that
/// cancellation against the decay rate is exact for large `ln x`.
///
/// The terms must be eventually decreasing in `m` for the bracket to hold;
/// the bracket ignores quadrature error.
pub fn log_tail_sum<const K: usize, F>(first: u64, opts: TailOptions, term: F) -> [LogSum; K]
where
    F: Fn(f64, f64, f64) -> [f64; K],
{
    let mut explicit = [LogAcc::new(); K];
    for m in first..first + opts.explicit {
        let x = m as f64;
        let vals = term(x, x.ln(), 0.0);
        for k in 0..K {
            explicit[k].add(vals[k]);
        }
    }
    let big_m = (first + opts.explicit) as f64;
    let ln_m = big_m.ln();

    let integral = exp_sinh_integral::<K, _>(ln_m, opts, &term);

    // Euler-Maclaurin boundary corrections relative to h(M).
    let h0 = term(big_m, ln_m, 0.0);
    let delta = 0.5;
    let stencil: Vec<[f64; K]> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|s| {
            let x = big_m + s * delta;
            term(x, x.ln(), 0.0)
        })
        .collect();

    let mut out = [LogSum::zero(); K];
    for k in 0..K {
        let base = h0[k];
        let explicit_log = explicit[k].value();
        if base == f64::NEG_INFINITY && integral[k] == f64::NEG_INFINITY {
            out[k] = LogSum::exact(explicit_log);
            continue;
        }
        let r = |i: usize| (stencil[i][k] - base).exp();
        let (rm2, rm1, rp1, rp2) = (r(0), r(1), r(2), r(3));
        let d1 = (-rp2 + 8.0 * rp1 - 8.0 * rm1 + rm2) / (12.0 * delta);
        let d3 = (rp2 - 2.0 * rp1 + 2.0 * rm1 - rm2) / (2.0 * delta.powi(3));
        let mut corr = 0.5 - d1 / 12.0 + d3 / 720.0;
        if !corr.is_finite() || corr <= 0.0 {
            corr = 0.5;
        }
        let tail_est = log_add(integral[k], base + corr.ln());
        let tail_hi = log_add(integral[k], base);
        out[k] = LogSum {
            estimate: log_add(explicit_log, tail_est),
            lower: log_add(explicit_log, integral[k]),
            upper: log_add(explicit_log, tail_hi),
        };
    }
    out
}

/// `ln ∫_M^∞ exp(term(x))[k] dx` with `x = M e^v`, `v = exp(π/2 sinh τ)`.
fn exp_sinh_integral<const K: usize, F>(ln_m: f64, opts: TailOptions, term: &F) -> [f64; K]
where
    F: Fn(f64, f64, f64) -> [f64; K],
{
    // Beyond the evaluation limit the log-density is continued linearly,
    // which is exact up to terms of order exp(-limit) for the tail families.
    let continuation: Option<(f64, [f64; K], [f64; K])> = opts.max_log_index.filter(|l| *l > ln_m + 1.0).map(|limit| {
        let a = term(limit.exp(), limit, 1.0);
        let b = term((limit - 1.0).exp(), limit - 1.0, 1.0);
        (limit, a, std::array::from_fn(|k| a[k] - b[k]))
    });
    let node = |tau: f64| -> Option<[f64; K]> {
        let s = FRAC_PI_2 * tau.sinh();
        if s > 690.0 {
            return None;
        }
        let v = s.exp();
        let u = ln_m + v;
        if !u.is_finite() {
            return None;
        }
        let jac = s + (FRAC_PI_2 * tau.cosh()).ln();
        let vals = match continuation {
            Some((limit, at, slope)) if u > limit => std::array::from_fn(|k| {
                if slope[k] >= 0.0 {
                    f64::INFINITY
                } else {
                    at[k] + slope[k] * (u - limit)
                }
            }),
            _ => term(u.exp(), u, 1.0),
        };
        let mut out = [f64::NEG_INFINITY; K];
        for k in 0..K {
            out[k] = vals[k] + jac;
        }
        Some(out)
    };

    // Collect nodes on a grid of step h, walking outward until contributions vanish.
    let sweep = |h: f64, offset: f64, accs: &mut [LogAcc; K]| {
        for dir in [1.0f64, -1.0] {
            let mut j = if dir > 0.0 { 0 } else { 1 };
            if offset != 0.0 {
                j = 0;
            }
            let mut best = f64::NEG_INFINITY;
            let mut quiet = 0;
            loop {
                let tau = dir * (j as f64 * h + offset);
                if tau.abs() > 7.5 {
                    break;
                }
                match node(tau) {
                    None => break,
                    Some(vals) => {
                        let mut hi = f64::NEG_INFINITY;
                        for k in 0..K {
                            accs[k].add(vals[k] + h.ln());
                            hi = hi.max(vals[k]);
                        }
                        best = best.max(hi);
                        if hi < best - 46.0 {
                            quiet += 1;
                            if quiet > 3 {
                                break;
                            }
                        } else {
                            quiet = 0;
                        }
                    }
                }
                j += 1;
            }
        }
    };

    let mut h = 0.5;
    let mut accs = [LogAcc::new(); K];
    sweep(h, 0.0, &mut accs);
    let mut current: [f64; K] = std::array::from_fn(|k| accs[k].value());
    loop {
        // Refine: previous nodes at step h keep weight h/2, new midpoints added.
        let mut refined = [LogAcc::new(); K];
        for k in 0..K {
            refined[k].add(current[k] - std::f64::consts::LN_2);
        }
        let mut mids = [LogAcc::new(); K];
        sweep(h, h / 2.0, &mut mids);
        for k in 0..K {
            let m = mids[k].value();
            refined[k].add(m - std::f64::consts::LN_2);
        }
        let next: [f64; K] = std::array::from_fn(|k| refined[k].value());
        h /= 2.0;
        let converged = (0..K).all(|k| {
            if next[k] == f64::NEG_INFINITY {
                return true;
            }
            (next[k] - current[k]).abs() <= opts.rel_tol
        });
        current = next;
        if converged || h < 1.0 / 512.0 {
            break;
        }
    }

    current
}

/// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// `ln ∫_{u0}^{u1} exp(f(u)) du` for `0 < u0 < u1`, panels uniform in `ln u`.
///
/// Suitable for integrands growing or decaying like `exp(c u)` over very long
/// ranges of `u`.
pub fn log_integral_log_panels<F: Fn(f64) -> f64>(u0: f64, u1: f64, panel: f64, f: F) -> f64 {
    assert!(u0 > 0.0 && u1 > u0);
    let (w0, w1) = (u0.ln(), u1.ln());
    let n = ((w1 - w0) / panel).ceil().max(1.0) as usize;
    let width = (w1 - w0) / n as f64;
    let mut acc = LogAcc::new();
    for i in 0..n {
        let a = w0 + i as f64 * width;
        let mid = a + width / 2.0;
        for (node, weight) in GL8 {
            let w = mid + node * width / 2.0;
            let u = w.exp();
            acc.add(f(u) + w + (weight * width / 2.0).ln());
        }
    }
    acc.value()
}
