//! Linear feasibility of moment targets over Bernoulli measures on words.

use serde::{Deserialize, Serialize};

use super::lp::{self, LpStatus};
use super::ratio::{Constraint, WordData};
use super::CylinderMeasure;
use crate::branch_systems::{BranchSystem, Potential};
use crate::error::{Error, Result};
use crate::thermo::DEFAULT_BUDGET;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    FeasibleWithWitness,
    /// Not a proof that the target is unattainable: larger `q` or `n` may
    /// still succeed.
    InfeasibleAtTruncation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub gamma: Vec<f64>,
    pub eps: f64,
    pub q: usize,
    pub n: usize,
    pub verdict: Verdict,
    pub witness: Option<CylinderMeasure>,
    /// Witness moments.
    pub moments: Option<Vec<f64>>,
    /// `max_i |∫φ_i - γ_i|` of the witness.
    pub max_residual: Option<f64>,
}

/// Looks for a probability vector on words of length `n` over the first `q`
/// branches with `|∫φ_i - γ_i| <= ε`. Among feasible vertices the one with
/// the smallest Lyapunov exponent is returned.
pub fn feasible(
    system: &BranchSystem,
    potentials: &[Potential],
    gamma: &[f64],
    eps: f64,
    q: usize,
    n: usize,
) -> Result<FeasibilityReport> {
    if potentials.is_empty() || potentials.len() != gamma.len() {
        return Err(Error::Precondition("need one target per potential and at least one".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Precondition("ε must be non-negative".into()));
    }
    let constraints: Vec<Constraint> = potentials
        .iter()
        .zip(gamma)
        .map(|(p, &g)| Constraint::new(p.clone(), g, eps))
        .collect();
    let pots: Vec<&Potential> = constraints.iter().map(|c| &c.potential).collect();
    let data = WordData::build(system, &pots, q, n, DEFAULT_BUDGET)?;
    let nw = data.len();
    let k = constraints.len();
    // columns: p (nw), then per constraint slack s_i and complement s'_i when ε > 0
    let slacks = if eps > 0.0 { 2 * k } else { 0 };
    let cols = nw + slacks;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row = vec![0.0; cols];
    row[..nw].fill(1.0);
    a.push(row);
    b.push(1.0);
    for (i, c) in constraints.iter().enumerate() {
        let mut row = vec![0.0; cols];
        row[..nw].copy_from_slice(&data.moments[i]);
        if eps > 0.0 {
            row[nw + 2 * i] = -1.0;
            a.push(row);
            b.push(c.gamma - eps);
            let mut row = vec![0.0; cols];
            row[nw + 2 * i] = 1.0;
            row[nw + 2 * i + 1] = 1.0;
            a.push(row);
            b.push(2.0 * eps);
        } else {
            a.push(row);
            b.push(c.gamma);
        }
    }
    let mut cost = vec![0.0; cols];
    cost[..nw].copy_from_slice(&data.ell);
    let sol = lp::solve(&a, &b, &cost);
    let infeasible = FeasibilityReport {
        gamma: gamma.to_vec(),
        eps,
        q,
        n,
        verdict: Verdict::InfeasibleAtTruncation,
        witness: None,
        moments: None,
        max_residual: None,
    };
    if sol.status != LpStatus::Optimal {
        return Ok(infeasible);
    }
    let total: f64 = sol.x[..nw].iter().sum();
    let mut words = Vec::new();
    let mut weights = Vec::new();
    for j in 0..nw {
        if sol.x[j] > 0.0 {
            words.push(data.words[j].clone());
            weights.push(sol.x[j] / total);
        }
    }
    let moments: Vec<f64> = (0..k)
        .map(|i| {
            words
                .iter()
                .zip(&weights)
                .map(|(w, p)| p * system.birkhoff_sum(&potentials[i], w).unwrap_or(f64::NAN) / n as f64)
                .sum()
        })
        .collect();
    let residual = moments.iter().zip(gamma).map(|(m, g)| (m - g).abs()).fold(0.0, f64::max);
    if !(residual <= eps + 1e-12 * (1.0 + gamma.iter().fold(0.0f64, |m, g| m.max(g.abs())))) {
        return Ok(infeasible);
    }
    Ok(FeasibilityReport {
        gamma: gamma.to_vec(),
        eps,
        q,
        n,
        verdict: Verdict::FeasibleWithWitness,
        witness: Some(CylinderMeasure::new(words, weights)?),
        moments: Some(moments),
        max_residual: Some(residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch_systems::Word;

    #[test]
    fn doubling_target() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let r = feasible(&sys, &[Potential::indicator(1)], &[0.3], 0.0, 2, 1).unwrap();
        assert_eq!(r.verdict, Verdict::FeasibleWithWitness);
        let w = r.witness.unwrap();
        assert!((w.weights()[0] - 0.3).abs() < 1e-15 && (w.weights()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_target() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        for n in 1..=3 {
            let r = feasible(&sys, &[Potential::indicator(1)], &[1.5], 0.0, 2, n).unwrap();
            assert_eq!(r.verdict, Verdict::InfeasibleAtTruncation);
            assert!(r.witness.is_none());
        }
    }

    #[test]
    fn gauss_harmonic_mix() {
        let g = BranchSystem::gauss();
        let r = feasible(&g, &[Potential::harmonic()], &[0.6], 1e-6, 3, 1).unwrap();
        assert_eq!(r.verdict, Verdict::FeasibleWithWitness);
        let w = r.witness.unwrap();
        assert_eq!(w.words(), &[Word::from(&[1u64][..]), Word::from(&[2u64][..])]);
        // p + (1-p)/2 = 0.6 ± 1e-6
        assert!((w.weights()[0] - 0.2).abs() <= 2e-6);
        assert!(r.max_residual.unwrap() <= 1e-6 + 1e-15);
    }
}
