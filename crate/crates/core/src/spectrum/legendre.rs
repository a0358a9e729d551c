//! Nested solve of `f(t,q) = qα`, `∂f/∂q(t,q) = α`.
//!
//! Inner: for fixed `t`, `q ↦ ∂f/∂q` is increasing (convexity of `f_t`), so
//! `q(t)` is found by safeguarded Newton inside a bisection bracket. Outer:
//! `g(t) = f(t, q(t)) - q(t)α` is decreasing in `t`, root by Illinois
//! regula falsi.

use super::{moment_labels, moment_range, PressureSurface, Regime, SpectrumPoint, SurfaceKind, SurfaceValue};
use crate::branch_systems::{BranchSystem, Potential};
use crate::error::{Error, Result};
use crate::thermo::{s_infinity, PressureOptions};

#[derive(Clone, Copy, Debug)]
pub struct LegendreOptions {
    /// Target for both residuals.
    pub tol: f64,
    /// Largest `|q|` tried when bracketing the inner equation.
    pub q_max: f64,
    /// Overrides the computed `s_∞`.
    pub s_inf: Option<f64>,
    pub surface: Option<SurfaceKind>,
    pub pressure: PressureOptions,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            q_max: 1e4,
            s_inf: None,
            surface: None,
            pressure: PressureOptions::default(),
        }
    }
}

/// Pressure surface plus the data shared by every `α`.
pub struct SpectrumSolver {
    surface: PressureSurface,
    s_inf: f64,
    range: Option<(f64, f64)>,
    tol: f64,
    q_max: f64,
}

/// Inner solution at fixed `t`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Inner {
    pub q: f64,
    pub v: SurfaceValue,
}

impl SpectrumSolver {
    pub fn new(system: &BranchSystem, phi: &Potential, opts: &LegendreOptions) -> Result<Self> {
        let surface = match opts.surface {
            Some(kind) => PressureSurface::new(system, phi, kind, &opts.pressure)?,
            None => PressureSurface::auto(system, phi, &opts.pressure)?,
        };
        let s_inf = match opts.s_inf {
            Some(s) => s,
            None => s_infinity(system, 1e-6)?.value,
        };
        let range = if phi.level() <= 1 { Some(moment_range(system, phi)?) } else { None };
        Ok(Self {
            surface,
            s_inf,
            range,
            tol: opts.tol,
            q_max: opts.q_max,
        })
    }

    pub fn s_inf(&self) -> f64 {
        self.s_inf
    }

    pub fn surface(&self) -> &PressureSurface {
        &self.surface
    }

    /// `[inf φ, sup φ]` over branches when the potential is level 1.
    pub fn moment_range(&self) -> Option<(f64, f64)> {
        self.range
    }

    /// Smallest `t` at which the surface is evaluated.
    pub fn t_floor(&self) -> f64 {
        if self.surface.value(self.s_inf, 0.0).is_finite() {
            self.s_inf
        } else {
            self.s_inf + 1e-6
        }
    }

    /// Solves `∂f/∂q(t, q) = α`; `None` when `α` is not reached for
    /// `|q| <= q_max` or the surface is infinite.
    pub(crate) fn inner(&self, t: f64, alpha: f64) -> Option<Inner> {
        let at = |q: f64| self.surface.eval(t, q);
        let v0 = at(0.0);
        if !v0.f.is_finite() {
            return None;
        }
        if v0.slope == alpha {
            return Some(Inner { q: 0.0, v: v0 });
        }
        let dir = if v0.slope < alpha { 1.0 } else { -1.0 };
        let (mut a, mut va) = (0.0, v0);
        let mut step = 1.0;
        let (mut b, mut vb);
        loop {
            b = dir * step;
            vb = at(b);
            if !vb.f.is_finite() {
                return None;
            }
            if (vb.slope - alpha) * dir >= 0.0 {
                break;
            }
            a = b;
            va = vb;
            step *= 2.0;
            if step > self.q_max {
                return None;
            }
        }
        // keep a on the side with slope < α
        if dir < 0.0 {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut va, &mut vb);
        }
        let (mut lo, mut hi) = (a, b);
        let (mut q, mut v) = if (va.slope - alpha).abs() < (vb.slope - alpha).abs() { (a, va) } else { (b, vb) };
        for _ in 0..200 {
            let r = v.slope - alpha;
            if r.abs() <= 1e-14 * alpha.abs().max(1.0) {
                break;
            }
            if r < 0.0 {
                lo = q;
            } else {
                hi = q;
            }
            if (hi - lo).abs() <= 1e-15 * q.abs().max(1.0) {
                break;
            }
            let newton = q - r / v.curvature;
            q = if v.curvature > 0.0 && newton > lo.min(hi) && newton < lo.max(hi) {
                newton
            } else {
                0.5 * (lo + hi)
            };
            v = at(q);
        }
        Some(Inner { q, v })
    }

    /// `g(t) = f(t, q(t)) - q(t) α` with the inner solution.
    fn outer(&self, t: f64, alpha: f64) -> Option<(f64, Inner)> {
        self.inner(t, alpha).map(|s| (s.v.f - s.q * alpha, s))
    }

    /// Whether the outer equation has a root above `s_∞`, i.e. `g(t_floor) > 0`.
    pub fn above_floor(&self, alpha: f64) -> Option<bool> {
        self.outer(self.t_floor(), alpha).map(|(g, _)| g > 0.0)
    }

    /// Dimension of the level set at an end of the moment range: `max{s_∞, t}`
    /// with `Σ_{φ(i) = extreme} diam(I_i)^t = 1` over the branches attaining
    /// the extreme (`t = 0` when at most one does, e.g. an extreme reached
    /// only as the label tends to infinity).
    fn endpoint(&self, alpha: f64) -> SpectrumPoint {
        let system = self.surface.system();
        let phi = self.surface.potential();
        let tol = 1e-12 * alpha.abs().max(1.0);
        let logs: Vec<f64> = moment_labels(system, phi)
            .into_iter()
            .filter(|&l| phi.level1_value(l as f64).is_ok_and(|v| (v - alpha).abs() <= tol))
            .filter_map(|l| system.log_diameter(l).ok())
            .collect();
        let log_sum = |t: f64| {
            let m = logs.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(t * l));
            m + logs.iter().map(|&l| (t * l - m).exp()).sum::<f64>().ln()
        };
        let t = if logs.len() <= 1 {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if log_sum(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut p = SpectrumPoint::bare(alpha, Regime::Endpoint, self.s_inf);
        p.t = Some(t);
        p.dim = Some(t.max(self.s_inf));
        p
    }

    /// Spectrum point at `α`: empty outside the moment range, endpoint at its
    /// ends, otherwise the Legendre solution or the `s_∞` floor.
    pub fn point(&self, alpha: f64) -> SpectrumPoint {
        match self.try_point(alpha) {
            Ok(p) => p,
            Err(e) => {
                let mut p = SpectrumPoint::bare(alpha, Regime::Error, self.s_inf);
                p.note = Some(e.to_string());
                p
            }
        }
    }

    fn try_point(&self, alpha: f64) -> Result<SpectrumPoint> {
        if let Some((lo, hi)) = self.range {
            let eps = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            if alpha < lo - eps || alpha > hi + eps {
                return Ok(SpectrumPoint::bare(alpha, Regime::Empty, self.s_inf));
            }
            if (alpha - lo).abs() <= eps || (alpha - hi).abs() <= eps {
                return Ok(self.endpoint(alpha));
            }
        }
        let t_lo = self.t_floor();
        let unreachable = || Error::Numerical(format!("∂f/∂q = {alpha} not reached on this surface"));
        let (g_lo, s_lo) = self.outer(t_lo, alpha).ok_or_else(unreachable)?;
        if g_lo <= 0.0 {
            let mut p = SpectrumPoint::bare(alpha, Regime::FlatFloor, self.s_inf);
            p.t = Some(self.s_inf);
            p.dim = Some(self.s_inf);
            return Ok(p);
        }
        let mut t_hi = 1.0f64;
        let (mut g_hi, mut s_hi) = self.outer(t_hi, alpha).ok_or_else(unreachable)?;
        while g_hi > 0.0 && t_hi < 4.0 {
            t_hi += 0.5;
            (g_hi, s_hi) = self.outer(t_hi, alpha).ok_or_else(unreachable)?;
        }
        if g_hi > 0.0 {
            return Err(Error::Numerical("outer equation not bracketed".into()));
        }
        // Illinois regula falsi on the decreasing g
        let (mut a, mut ga) = (t_lo, g_lo);
        let (mut b, mut gb) = (t_hi, g_hi);
        let mut side = 0i8;
        let mut best = if ga.abs() < gb.abs() { (a, ga, s_lo) } else { (b, gb, s_hi) };
        for _ in 0..200 {
            if best.1.abs() <= 0.01 * self.tol || (b - a) <= 1e-15 {
                break;
            }
            let mut t = (a * gb - b * ga) / (gb - ga);
            if !(t > a && t < b) {
                t = 0.5 * (a + b);
            }
            let (g, s) = self.outer(t, alpha).ok_or_else(unreachable)?;
            if g.abs() < best.1.abs() {
                best = (t, g, s);
            }
            if g > 0.0 {
                a = t;
                ga = g;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            } else {
                b = t;
                gb = g;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            }
        }
        let (t, g, s) = best;
        let mut p = SpectrumPoint::bare(alpha, Regime::Legendre, self.s_inf);
        p.t = Some(t);
        p.q = Some(s.q);
        p.dim = Some(t.max(self.s_inf));
        p.residuals = Some([g.abs(), (s.v.slope - alpha).abs()]);
        Ok(p)
    }

    /// Root `t*` of `f(t, 0) = 0` above the floor (`dim Λ`) and the moment
    /// `α̃ = ∂f/∂q(t*, 0)` of the corresponding equilibrium state.
    pub fn equilibrium_moment(&self) -> Result<(f64, f64)> {
        let f0 = |t: f64| self.surface.value(t, 0.0);
        let (mut lo, mut hi) = (self.t_floor(), 1.0f64);
        if f0(lo) <= 0.0 {
            return Err(Error::Numerical("f(t, 0) <= 0 at the floor".into()));
        }
        while f0(hi) > 0.0 && hi < 4.0 {
            hi += 0.5;
        }
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if f0(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        Ok((t, self.surface.eval(t, 0.0).slope))
    }
}

/// Solves the Legendre system at `α` with default options.
pub fn legendre_solve(system: &BranchSystem, phi: &Potential, alpha: f64) -> Result<SpectrumPoint> {
    Ok(SpectrumSolver::new(system, phi, &LegendreOptions::default())?.point(alpha))
}
