//! Affine combinations of invariant measures and limsup lower bounds.

use serde::{Deserialize, Serialize};

use super::MeasureStats;
use crate::error::{Error, Result};

/// Stats of `p·a + (1-p)·b`. Entropy, Lyapunov exponent and moments are
/// affine in the measure.
pub fn mixture(a: &MeasureStats, b: &MeasureStats, p: f64) -> MeasureStats {
    let mix = |x: f64, y: f64| p * x + (1.0 - p) * y;
    let entropy = mix(a.entropy, b.entropy);
    let lyapunov = mix(a.lyapunov, b.lyapunov);
    let lb = [
        mix(a.lyapunov_bounds[0], b.lyapunov_bounds[0]),
        mix(a.lyapunov_bounds[1], b.lyapunov_bounds[1]),
    ];
    let moments = a.moments.iter().zip(&b.moments).map(|(x, y)| mix(*x, *y)).collect();
    MeasureStats {
        entropy,
        lyapunov,
        lyapunov_bounds: lb,
        moments,
        ratio: entropy / lyapunov,
        ratio_bounds: [entropy / lb[1], entropy / lb[0]],
    }
}

/// Open window `lo < ∫φ_index < hi` on a moment of the mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentWindow {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

impl MomentWindow {
    fn admits(&self, s: &MeasureStats) -> bool {
        s.moments.get(self.index).is_some_and(|m| *m > self.lo && *m < self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureResult {
    pub p: f64,
    pub base_index: usize,
    pub stats: MeasureStats,
}

/// Best ratio of `p·base[i] + (1-p)·bump` over the schedule of `p`, subject
/// to an optional moment window. `None` when no mixture fits the window.
pub fn mixture_lower_bound(
    base: &[MeasureStats],
    bump: &MeasureStats,
    schedule: &[f64],
    window: Option<MomentWindow>,
) -> Result<Option<MixtureResult>> {
    if base.is_empty() || schedule.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(p) = schedule.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Precondition(format!("weight {p} outside [0, 1]")));
    }
    let mut best: Option<MixtureResult> = None;
    for (i, b) in base.iter().enumerate() {
        for &p in schedule {
            let s = mixture(b, bump, p);
            if window.is_some_and(|w| !w.admits(&s)) {
                continue;
            }
            if best.as_ref().is_none_or(|r| s.ratio > r.stats.ratio) {
                best = Some(MixtureResult { p, base_index: i, stats: s });
            }
        }
    }
    Ok(best)
}

/// Lower bound for `limsup h(μ_j)/λ(μ_j)` from a finite sequence: the
/// supremum over its second half.
pub fn sequence_lower_bound(stats: &[MeasureStats]) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::EmptySequence);
    }
    let start = stats.len() / 2;
    Ok(stats[start..].iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max))
}
