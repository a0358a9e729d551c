//! Sums over the full countable alphabet: explicit head terms plus tail series.

use crate::branch_systems::{Analytic, BranchKind, BranchSystem, Mobius, Potential, ScaledMobius, Tail, TailFamily};
use crate::error::{Error, Result};
use crate::series::{self, log_add, LogAcc, LogSum, TailOptions};

/// Which branch size enters level-1 sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// `diam(I_i)`.
    Diameter,
    /// `1/|T'(x̄_i)|` at the fixed point of branch `i`.
    Periodic,
}

/// Splits `G(x) = α ln x + R(x)` for the tail family, where `G` is
/// `-ln diam` or `ln|T'(x̄)|`, so that exponents combine without cancellation.
pub(crate) fn tail_geometry(tail: &Tail, geometry: Geometry, x: f64, u: f64) -> (f64, f64) {
    match (tail.family, geometry) {
        (TailFamily::Linear(m), _) => (m.a, -m.c.ln() + m.d * m.log_log_term(x, u)),
        (TailFamily::Gauss, Geometry::Diameter) => (2.0, (-u).exp().ln_1p()),
        (TailFamily::Gauss, Geometry::Periodic) => {
            let r = if x < 1e8 {
                2.0 * (x / 2.0).asinh() - 2.0 * u
            } else {
                let e = (-2.0 * u).exp();
                2.0 * (((1.0 + 4.0 * e).sqrt() - 1.0) / 2.0).ln_1p()
            };
            (2.0, r)
        }
    }
}

/// Whether `Σ_{tail} exp(-t · G(i))` converges (bounded factors ignored).
pub fn tail_converges(tail: &Tail, t: f64) -> bool {
    match tail.family {
        TailFamily::Linear(m) => m.a * t > 1.0 || (m.a * t == 1.0 && m.d * t > 1.0),
        TailFamily::Gauss => 2.0 * t > 1.0,
    }
}

fn head_geometry(system: &BranchSystem, label: u64, geometry: Geometry) -> f64 {
    match geometry {
        Geometry::Diameter => -system.log_diameter(label).expect("head label"),
        Geometry::Periodic => {
            let w = crate::branch_systems::Word::new(vec![label]).expect("label");
            system.periodic_log_derivative(&w).expect("head label")
        }
    }
}

/// `ln Σ_i F_k(i) exp(-t · G(i))` over all branches for `K` factor
/// functions given as logarithms `ln F_k(x)` of real labels `x = e^u`, called as `(x, u)`. Returns `None`
/// when the tail series diverges.
pub fn level1_log_sums<const K: usize>(
    system: &BranchSystem,
    geometry: Geometry,
    t: f64,
    max_label: u64,
    log_factor: impl Fn(f64, f64) -> [f64; K],
) -> Option<[LogSum; K]> {
    let mut head = [LogAcc::new(); K];
    for b in system.head() {
        let g = head_geometry(system, b.index, geometry);
        let f = log_factor(b.index as f64, (b.index as f64).ln());
        for k in 0..K {
            head[k].add(f[k] - t * g);
        }
    }
    let mut out: [LogSum; K] = std::array::from_fn(|k| LogSum::exact(head[k].value()));
    if let Some(tail) = system.tail() {
        if !tail_converges(tail, t) {
            return None;
        }
        let explicit = 256u64.max((max_label + 1).saturating_sub(tail.first));
        let opts = TailOptions {
            explicit,
            ..TailOptions::default()
        };
        let tail = *tail;
        let sums = series::log_tail_sum::<K, _>(tail.first, opts, |x, u, w| {
            let (alpha, rest) = tail_geometry(&tail, geometry, x, u);
            let f = log_factor(x, u);
            let base = (w - t * alpha) * u - t * rest;
            std::array::from_fn(|k| f[k] + base)
        });
        for k in 0..K {
            out[k] = out[k].combine(&sums[k]);
        }
    }
    Some(out)
}

/// Level-`n` periodic-word sum `ln Σ_{|w|=n} exp(S_n φ(w̄) - t S_n ln|T'|(w̄))`
/// over the full countable alphabet of a Möbius system, by nested series.
pub fn nested_log_sum(system: &BranchSystem, phi: &Potential, t: f64, n: usize) -> Result<f64> {
    if phi.level() > 1 || phi.log_derivative_coef() != 0.0 {
        return Err(Error::Unsupported("countable sums need a level-1 potential without ln|T'| terms".into()));
    }
    let mut heads = Vec::new();
    for b in system.head() {
        match b.kind {
            BranchKind::Analytic(Analytic::Mobius(m)) => heads.push((b.index, m)),
            BranchKind::Linear { diameter } => {
                // y ↦ left + diameter · y
                let left = system.left_endpoint(b.index)?;
                heads.push((b.index, Mobius::new(diameter, left, 0.0, 1.0)))
            }
            _ => return Err(Error::Unsupported("countable sums need Möbius or linear branches".into())),
        }
    }
    let tail = system.tail().copied();
    if let Some(tl) = tail {
        if !tail_converges(&tl, t) {
            return Ok(f64::INFINITY);
        }
    }
    let ctx = Nested {
        heads,
        tail,
        phi,
        t,
        explicit: 32u64.max((phi.max_label() + 1).saturating_sub(tail.map_or(0, |tl| tl.first))),
    };
    Ok(ctx.sum(ScaledMobius::identity(), 0.0, n))
}

struct Nested<'a> {
    heads: Vec<(u64, Mobius)>,
    tail: Option<Tail>,
    phi: &'a Potential,
    t: f64,
    explicit: u64,
}

impl Nested<'_> {
    fn sum(&self, prefix: ScaledMobius, phi_acc: f64, remaining: usize) -> f64 {
        if remaining == 0 {
            return phi_acc - self.t * prefix.periodic_log_derivative();
        }
        let mut acc = LogAcc::new();
        for &(label, m) in &self.heads {
            let v = self.phi.level1_value(label as f64).unwrap_or(0.0);
            acc.add(self.sum(prefix.then(&m), phi_acc + v, remaining - 1));
        }
        let mut total = acc.value();
        if let Some(tail) = self.tail {
            let branch = |x: f64| match tail.family {
                TailFamily::Gauss => Mobius::gauss(x),
                TailFamily::Linear(_) => unreachable!("linear tails use closed forms"),
            };
            let opts = TailOptions {
                explicit: self.explicit,
                max_log_index: Some(690.0),
                rel_tol: 1e-11,
            };
            let [s] = series::log_tail_sum::<1, _>(tail.first, opts, |x, u, w| {
                let v = self.phi.level1_value(x).unwrap_or(0.0);
                [self.sum(prefix.then(&branch(x)), phi_acc + v, remaining - 1) + w * u]
            });
            total = log_add(total, s.estimate);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_level1_periodic_matches_direct() {
        // Σ_k x̄_k^{2t}, x̄_k = (sqrt(k^2+4)-k)/2
        let g = BranchSystem::gauss();
        let t = 0.8;
        let [s] = level1_log_sums::<1>(&g, Geometry::Periodic, t, 0, |_, _| [0.0]).unwrap();
        let mut direct = 0.0;
        for k in (1..2_000_000u64).rev() {
            let kf = k as f64;
            let x = 2.0 / (kf + (kf * kf + 4.0).sqrt());
            direct += x.powf(2.0 * t);
        }
        // remainder ≈ ∫_{N}^∞ x^{-1.6} dx
        direct += 2e6f64.powf(-0.6) / 0.6;
        assert!((s.estimate.exp() / direct - 1.0).abs() < 1e-8, "{} {}", s.estimate.exp(), direct);
        assert!(level1_log_sums::<1>(&g, Geometry::Periodic, 0.5, 0, |_, _| [0.0]).is_none());
    }

    #[test]
    fn nested_level1_matches_level1_sum() {
        let g = BranchSystem::gauss().restricted_system(3).unwrap();
        let t = 0.9;
        let a = nested_log_sum(&g, &Potential::zero(), t, 1).unwrap();
        let [b] = level1_log_sums::<1>(&g, Geometry::Periodic, t, 0, |_, _| [0.0]).unwrap();
        assert!((a - b.estimate).abs() < 1e-9, "{a} {}", b.estimate);
    }

    #[test]
    fn nested_level2_matches_truncated_enumeration_plus_bound() {
        // Gauss at t = 1: level-2 periodic sum over digits >= 5, compared with
        // a brute-force double sum over digits < 4000 plus a crude tail bound.
        let g = BranchSystem::gauss().restricted_system(5).unwrap();
        let t = 1.0;
        let nested = nested_log_sum(&g, &Potential::zero(), t, 2).unwrap().exp();
        let cap = 4000u64;
        let mut brute = 0.0;
        for i in 5..cap {
            for j in 5..cap {
                let mut acc = ScaledMobius::identity();
                acc = acc.then(&Mobius::gauss(i as f64)).then(&Mobius::gauss(j as f64));
                brute += (-t * acc.periodic_log_derivative()).exp();
            }
        }
        // missing terms with max(i,j) >= cap are below 2 Σ_{i>=5} i^-2 Σ_{j>=cap} j^-2
        let bound = 2.0 * (1.0 / 4.0) * (1.0 / (cap as f64 - 1.0));
        assert!(nested >= brute && nested <= brute + bound, "{nested} {brute} {bound}");
    }
}
