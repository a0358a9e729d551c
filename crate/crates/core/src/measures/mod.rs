//! Bernoulli measures on cylinders: entropy, Lyapunov exponent, moments,
//! constrained maximization of `h/λ`, feasibility of moment targets and
//! affine mixtures.

pub mod feasibility;
pub mod frequency;
pub mod lp;
pub mod mixture;
pub mod ratio;

use serde::{Deserialize, Serialize};

pub use feasibility::{feasible, FeasibilityReport, Verdict};
pub use frequency::{digit_frequency_dimension, FreqDimResult, FrequencyMode, Regime};
pub use mixture::{mixture, mixture_lower_bound, sequence_lower_bound, MixtureResult, MomentWindow};
pub use ratio::{maximize_ratio, Constraint, RatioOptions, RatioResult};

use crate::branch_systems::{BranchSystem, Potential, Word};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::thermo::countable::{level1_log_sums, tail_geometry, Geometry};

/// A Bernoulli measure on words of length `n`: the block `w_j` is drawn with
/// probability `p_j`, independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderMeasure {
    level: usize,
    words: Vec<Word>,
    weights: Vec<f64>,
}

impl CylinderMeasure {
    pub fn new(words: Vec<Word>, weights: Vec<f64>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidMeasure("empty word set".into()));
        }
        if words.len() != weights.len() {
            return Err(Error::InvalidMeasure("words and weights differ in length".into()));
        }
        let level = words[0].len();
        if words.iter().any(|w| w.len() != level) {
            return Err(Error::InvalidMeasure("words of different lengths".into()));
        }
        if let Some(p) = weights.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weight {p} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        let mut sorted = words.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != words.len() {
            return Err(Error::InvalidMeasure("repeated word".into()));
        }
        Ok(Self { level, words, weights })
    }

    /// Point mass on the periodic orbit of `word`.
    pub fn dirac(word: Word) -> Self {
        Self {
            level: word.len(),
            words: vec![word],
            weights: vec![1.0],
        }
    }

    /// Bernoulli measure with level-1 probabilities `p` on the given labels;
    /// zero entries are dropped.
    pub fn bernoulli(labels: &[u64], p: &[f64]) -> Result<Self> {
        if labels.len() != p.len() {
            return Err(Error::InvalidMeasure("labels and weights differ in length".into()));
        }
        let mut words = Vec::new();
        let mut weights = Vec::new();
        for (&l, &pi) in labels.iter().zip(p) {
            if pi < 0.0 {
                return Err(Error::InvalidMeasure(format!("weight {pi} is negative")));
            }
            if pi > 0.0 {
                words.push(Word::new(vec![l])?);
                weights.push(pi);
            }
        }
        Self::new(words, weights)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureStats {
    /// Entropy in nats.
    pub entropy: f64,
    /// Lyapunov exponent in nats.
    pub lyapunov: f64,
    /// Bounds on `λ` from cylinder diameter brackets.
    #[serde(with = "numfmt::pair_f64_ext")]
    pub lyapunov_bounds: [f64; 2],
    pub moments: Vec<f64>,
    pub ratio: f64,
    #[serde(with = "numfmt::pair_f64_ext")]
    pub ratio_bounds: [f64; 2],
}

impl MeasureStats {
    /// Builds stats from `h`, `λ` and moments with degenerate brackets.
    pub fn from_parts(entropy: f64, lyapunov: f64, moments: Vec<f64>) -> Self {
        let ratio = entropy / lyapunov;
        Self {
            entropy,
            lyapunov,
            lyapunov_bounds: [lyapunov, lyapunov],
            moments,
            ratio,
            ratio_bounds: [ratio, ratio],
        }
    }

    fn with_bounds(entropy: f64, lyapunov: f64, bounds: [f64; 2], moments: Vec<f64>) -> Self {
        Self {
            entropy,
            lyapunov,
            lyapunov_bounds: bounds,
            moments,
            ratio: entropy / lyapunov,
            ratio_bounds: [entropy / bounds[1], entropy / bounds[0]],
        }
    }
}

/// `-Σ p log p` with `0 log 0 = 0`.
pub(crate) fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// Entropy, Lyapunov exponent and moments of a cylinder measure.
///
/// `h = -(1/n) Σ p_j ln p_j`, `λ = -(1/n) Σ p_j ln diam(C_j)` and
/// `∫φ_i = (1/n) Σ p_j S_n φ_i(w̄_j)`.
pub fn stats(system: &BranchSystem, measure: &CylinderMeasure, potentials: &[Potential]) -> Result<MeasureStats> {
    let n = measure.level as f64;
    let mut lam = 0.0;
    let mut lam_lo = 0.0;
    let mut lam_hi = 0.0;
    let mut moments = vec![0.0; potentials.len()];
    for (w, &p) in measure.words.iter().zip(&measure.weights) {
        let d = system.cylinder_diameter(w)?;
        lam -= p * d.log_estimate;
        lam_lo -= p * d.upper.ln();
        lam_hi -= p * d.lower.ln();
        for (m, phi) in moments.iter_mut().zip(potentials) {
            *m += p * system.birkhoff_sum(phi, w)?;
        }
    }
    for m in &mut moments {
        *m /= n;
    }
    let h = shannon(&measure.weights) / n;
    Ok(MeasureStats::with_bounds(h, lam / n, [lam_lo / n, lam_hi / n], moments))
}

/// Point mass at the golden-mean fixed point `(√5-1)/2` of the Gauss map,
/// with the moment of `1/a_1`.
pub fn golden_dirac_stats() -> MeasureStats {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    MeasureStats::from_parts(0.0, 2.0 * golden.ln(), vec![1.0])
}

/// Stats of the level-1 Bernoulli measure `p_i ∝ diam(I_i)^t` over the full
/// alphabet. Potentials must be level 1 and bounded below.
pub fn equilibrium_stats(system: &BranchSystem, t: f64, potentials: &[Potential]) -> Result<MeasureStats> {
    let tail = system.tail().copied();
    let ell = |x: f64, u: f64| -> f64 {
        match tail {
            Some(tl) if x >= tl.first as f64 => {
                let (a, r) = tail_geometry(&tl, Geometry::Diameter, x, u);
                a * u + r
            }
            _ => -system.log_diameter(x as u64).unwrap_or(f64::NAN),
        }
    };
    let diverges = || Error::Precondition(format!("Σ diam^t diverges at t = {t}"));
    let [z, l] = level1_log_sums::<2>(system, Geometry::Diameter, t, 0, |x, u| [0.0, ell(x, u).ln()]).ok_or_else(diverges)?;
    let log_z = z.estimate;
    let lam = (l.estimate - log_z).exp();
    let h = t * lam + log_z;
    let mut moments = Vec::with_capacity(potentials.len());
    for phi in potentials {
        if phi.level() > 1 || phi.log_derivative_coef() != 0.0 {
            return Err(Error::Unsupported("equilibrium moments need level-1 potentials".into()));
        }
        let (lo, _) = phi.bounds(system);
        if !lo.is_finite() {
            return Err(Error::Unsupported("potential unbounded below".into()));
        }
        let [s] = level1_log_sums::<1>(system, Geometry::Diameter, t, phi.max_label(), |x, _| {
            [(phi.level1_value(x).unwrap_or(lo) - lo).max(0.0).ln()]
        })
        .ok_or_else(diverges)?;
        moments.push((s.estimate - log_z).exp() + lo);
    }
    Ok(MeasureStats::from_parts(h, lam, moments))
}
