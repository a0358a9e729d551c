//! Multifractal spectrum `α ↦ dim Λ_α` of Birkhoff averages of a single
//! potential: Legendre system, flat-region certificates and curves.

mod curve;
mod flat;
mod legendre;

use serde::{Deserialize, Serialize};

pub use curve::{spectrum_curve, CurveOptions};
pub use flat::{flat_bounds, flat_certificate, FlatBounds, FlatCertificate};
pub use legendre::{legendre_solve, LegendreOptions, SpectrumSolver};

use crate::branch_systems::{BranchSystem, Potential};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::thermo::countable::{level1_log_sums, Geometry};
use crate::thermo::{PressureOptions, WordTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Legendre,
    FlatFloor,
    Endpoint,
    Empty,
    Error,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Legendre => "legendre",
            Regime::FlatFloor => "flat-floor",
            Regime::Endpoint => "endpoint",
            Regime::Empty => "empty",
            Regime::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub alpha: f64,
    /// `max{s_∞, t}`; absent on empty and error rows.
    #[serde(with = "numfmt::opt_f64_ext")]
    pub dim: Option<f64>,
    #[serde(with = "numfmt::opt_f64_ext")]
    pub t: Option<f64>,
    #[serde(with = "numfmt::opt_f64_ext")]
    pub q: Option<f64>,
    /// `(|f(t,q) - qα|, |∂f/∂q - α|)`.
    pub residuals: Option<[f64; 2]>,
    pub regime: Regime,
    pub s_inf: f64,
    /// Transition marker (`alpha_lower`, `alpha_upper`, `alpha_tilde`) or
    /// an error message.
    pub note: Option<String>,
}

impl SpectrumPoint {
    fn bare(alpha: f64, regime: Regime, s_inf: f64) -> Self {
        Self {
            alpha,
            dim: None,
            t: None,
            q: None,
            residuals: None,
            regime,
            s_inf,
            note: None,
        }
    }
}

/// How `f(t, q) = P(qφ - t ln|T'|)` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    /// Linear systems: exact level-1 sum over all branches.
    Level1,
    /// `(1/n) ln Σ_{|w|=n}` over words on the first `q` branches.
    Enumerated { q: usize, n: usize },
}

/// `f(t, q)` together with `∂f/∂q` and `∂²f/∂q²`.
pub struct PressureSurface {
    system: BranchSystem,
    phi: Potential,
    kind: SurfaceKind,
    lower: f64,
    table: Option<WordTable>,
    pool: rayon::ThreadPool,
}

#[derive(Clone, Copy, Debug)]
pub struct SurfaceValue {
    pub f: f64,
    pub slope: f64,
    pub curvature: f64,
}

impl PressureSurface {
    pub fn new(system: &BranchSystem, phi: &Potential, kind: SurfaceKind, opts: &PressureOptions) -> Result<Self> {
        phi.validate()?;
        if phi.log_derivative_coef() != 0.0 {
            return Err(Error::Unsupported("spectra need potentials without ln|T'| terms".into()));
        }
        let (lo, hi) = phi.bounds(system);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Unsupported("spectra need bounded potentials".into()));
        }
        let pool = opts.pool();
        let table = match kind {
            SurfaceKind::Level1 => {
                if !system.is_linear() {
                    return Err(Error::Unsupported("level-1 surface needs a linear system".into()));
                }
                if phi.level() > 1 {
                    return Err(Error::Unsupported("level-1 surface needs a level-1 potential".into()));
                }
                None
            }
            SurfaceKind::Enumerated { q, n } => {
                let count = (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
                if count > opts.budget {
                    return Err(Error::Precondition(format!("{q}^{n} words exceed the budget {}", opts.budget)));
                }
                Some(WordTable::build(system, q, n, &[phi.evaluator()], &pool)?)
            }
        };
        Ok(Self {
            system: system.clone(),
            phi: phi.clone(),
            kind,
            lower: lo,
            table,
            pool,
        })
    }

    /// Level-1 surface for linear systems, otherwise enumeration over the
    /// first 200 branches (or all of them) at word length 2.
    pub fn auto(system: &BranchSystem, phi: &Potential, opts: &PressureOptions) -> Result<Self> {
        let kind = if system.is_linear() && phi.level() <= 1 {
            SurfaceKind::Level1
        } else {
            let q = system.branch_count().unwrap_or(200).min(200);
            SurfaceKind::Enumerated { q, n: phi.level().max(2) }
        };
        Self::new(system, phi, kind, opts)
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn system(&self) -> &BranchSystem {
        &self.system
    }

    pub fn potential(&self) -> &Potential {
        &self.phi
    }

    /// `f(t, q)`, `+∞` where the defining series diverges.
    pub fn value(&self, t: f64, q: f64) -> f64 {
        match self.kind {
            SurfaceKind::Level1 => {
                let phi = &self.phi;
                match level1_log_sums::<1>(&self.system, Geometry::Diameter, t, phi.max_label(), |x, _| {
                    [q * phi.level1_value(x).unwrap_or(0.0)]
                }) {
                    Some([s]) => s.estimate,
                    None => f64::INFINITY,
                }
            }
            SurfaceKind::Enumerated { n, .. } => {
                self.table.as_ref().expect("table").log_sum(&[q], -t, &self.pool) / n as f64
            }
        }
    }

    /// `f`, `∂f/∂q` and `∂²f/∂q²` (Gibbs mean and variance of `φ`).
    pub fn eval(&self, t: f64, q: f64) -> SurfaceValue {
        match self.kind {
            SurfaceKind::Level1 => {
                let phi = &self.phi;
                let lo = self.lower;
                let sums = level1_log_sums::<3>(&self.system, Geometry::Diameter, t, phi.max_label(), |x, _| {
                    let v = phi.level1_value(x).unwrap_or(lo);
                    let e = (v - lo).max(0.0).ln();
                    [q * v, q * v + e, q * v + 2.0 * e]
                });
                match sums {
                    None => SurfaceValue {
                        f: f64::INFINITY,
                        slope: f64::NAN,
                        curvature: f64::NAN,
                    },
                    Some([z, m1, m2]) => {
                        let a = (m1.estimate - z.estimate).exp();
                        let b = (m2.estimate - z.estimate).exp();
                        SurfaceValue {
                            f: z.estimate,
                            slope: a + lo,
                            curvature: (b - a * a).max(0.0),
                        }
                    }
                }
            }
            SurfaceKind::Enumerated { n, .. } => {
                let s = self.table.as_ref().expect("table").weighted_stats(&[q], -t, &self.pool);
                let nf = n as f64;
                SurfaceValue {
                    f: s.log_z / nf,
                    slope: s.mean[0] / nf,
                    curvature: s.cov[0][0].max(0.0) / nf,
                }
            }
        }
    }
}

/// Head labels plus the first `max(256, max_label)` tail labels.
pub(crate) fn moment_labels(system: &BranchSystem, phi: &Potential) -> Vec<u64> {
    let mut labels: Vec<u64> = system.head().iter().map(|b| b.index).collect();
    if let Some(tail) = system.tail() {
        labels.extend(tail.first..=tail.first + 256u64.max(phi.max_label()));
    }
    labels
}

/// Range `[inf_i φ(i), sup_i φ(i)]` of `∫φ dμ` over invariant measures,
/// for a level-1 potential.
pub fn moment_range(system: &BranchSystem, phi: &Potential) -> Result<(f64, f64)> {
    if phi.level() > 1 || phi.log_derivative_coef() != 0.0 {
        return Err(Error::Unsupported("moment range needs a level-1 potential without ln|T'|".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    if system.tail().is_some() {
        let v = phi.level1_value(f64::INFINITY)?;
        lo = v;
        hi = v;
    }
    for l in moment_labels(system, phi) {
        let v = phi.level1_value(l as f64)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}
