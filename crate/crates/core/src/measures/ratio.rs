//! Maximization of `h/λ` over Bernoulli measures on `n`-words under moment
//! constraints.
//!
//! Outer loop: Dinkelbach iteration `r ← h(p_r)/λ(p_r)` where `p_r`
//! maximizes the concave function `H(p) - r Σ p_j ℓ_j`. Inner problem: for
//! each pattern of active box sides, the maximizer restricted to the minimal
//! face of the simplex compatible with the active equalities is a Gibbs
//! vector `p_j ∝ exp(-r ℓ_j + y·m_j)`, with `y` found by Newton's method on
//! the convex dual. The best pattern whose solution meets every box wins.

use serde::{Deserialize, Serialize};

use super::lp::{self, LpStatus};
use super::{shannon, stats, CylinderMeasure, MeasureStats};
use crate::branch_systems::{BranchSystem, Potential, Word};
use crate::error::{Error, Result};
use crate::thermo::DEFAULT_BUDGET;

/// `|∫φ dμ - γ| <= ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub potential: Potential,
    pub gamma: f64,
    #[serde(default)]
    pub eps: f64,
}

impl Constraint {
    pub fn new(potential: Potential, gamma: f64, eps: f64) -> Self {
        Self { potential, gamma, eps }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RatioOptions {
    /// Maximal number of words `q^n`.
    pub budget: u64,
    pub max_iterations: usize,
}

impl Default for RatioOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            max_iterations: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub measure: CylinderMeasure,
    pub stats: MeasureStats,
    pub q: usize,
    pub n: usize,
    pub iterations: usize,
}

/// Words of length `n` over the first `q` branches, with `ℓ_j = -ln diam`
/// and the normalized Birkhoff sums of each potential.
pub(crate) struct WordData {
    pub words: Vec<Word>,
    pub ell: Vec<f64>,
    /// `moments[i][j]`
    pub moments: Vec<Vec<f64>>,
}

impl WordData {
    pub fn build(system: &BranchSystem, potentials: &[&Potential], q: usize, n: usize, budget: u64) -> Result<Self> {
        if q == 0 || n == 0 {
            return Err(Error::Precondition("q and n must be positive".into()));
        }
        let count = (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
        if count > budget {
            return Err(Error::Precondition(format!("{q}^{n} words exceed the budget {budget}")));
        }
        let labels = (0..q)
            .map(|p| {
                system.label_at(p).ok_or(Error::TruncationTooLarge {
                    requested: q,
                    available: system.branch_count().unwrap_or(0),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let count = count as usize;
        let mut words = Vec::with_capacity(count);
        let mut ell = Vec::with_capacity(count);
        let mut moments = vec![Vec::with_capacity(count); potentials.len()];
        let mut digits = vec![0usize; n];
        for _ in 0..count {
            let w = Word::new(digits.iter().map(|&d| labels[d]).collect())?;
            ell.push(-system.cylinder_diameter(&w)?.log_estimate);
            for (m, phi) in moments.iter_mut().zip(potentials) {
                m.push(system.birkhoff_sum(phi, &w)? / n as f64);
            }
            words.push(w);
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < q {
                    break;
                }
                *d = 0;
            }
        }
        Ok(Self { words, ell, moments })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }
}

#[derive(Clone, Copy, Debug)]
enum Side {
    Inactive,
    Equal(f64),
}

struct Pattern {
    /// `(constraint index, target)` of active rows
    active: Vec<(usize, f64)>,
    /// indices of words on the minimal face
    face: Vec<usize>,
    /// dual warm start
    y: Vec<f64>,
}

/// Maximizes `h/λ` over Bernoulli measures on words of length `n` over the
/// first `q` branches subject to the moment boxes.
pub fn maximize_ratio(
    system: &BranchSystem,
    constraints: &[Constraint],
    q: usize,
    n: usize,
    opts: &RatioOptions,
) -> Result<RatioResult> {
    for c in constraints {
        c.potential.validate()?;
        if !(c.eps >= 0.0) || !c.gamma.is_finite() {
            return Err(Error::Precondition("constraint needs finite γ and ε >= 0".into()));
        }
    }
    let pots: Vec<&Potential> = constraints.iter().map(|c| &c.potential).collect();
    let data = WordData::build(system, &pots, q, n, opts.budget)?;
    if let Some(l) = data.ell.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::Precondition(format!("cylinder with -ln diam = {l}")));
    }
    let mut patterns = Vec::new();
    for sides in side_patterns(constraints) {
        let active: Vec<(usize, f64)> = sides
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Side::Equal(v) => Some((i, *v)),
                Side::Inactive => None,
            })
            .collect();
        let face = minimal_face(&data, &active);
        if !face.is_empty() {
            let y = vec![0.0; active.len()];
            patterns.push(Pattern { active, face, y });
        }
    }

    let mut r = 0.0;
    let mut best: Option<Vec<f64>> = None;
    let mut iterations = 0;
    for _ in 0..opts.max_iterations {
        iterations += 1;
        let Some(p) = inner(&data, constraints, &mut patterns, r) else {
            break;
        };
        let h = shannon(&p);
        let lam: f64 = p.iter().zip(&data.ell).map(|(a, b)| a * b).sum();
        let next = h / lam;
        let done = (next - r).abs() <= 1e-15 * next.max(1.0);
        best = Some(p);
        if done || next < r {
            break;
        }
        r = next;
    }
    let p = best.ok_or(Error::Infeasible { q, n })?;
    let mut words = Vec::new();
    let mut weights = Vec::new();
    for (j, &pj) in p.iter().enumerate() {
        if pj > 0.0 {
            words.push(data.words[j].clone());
            weights.push(pj);
        }
    }
    let total: f64 = weights.iter().sum();
    for v in &mut weights {
        *v /= total;
    }
    let measure = CylinderMeasure::new(words, weights)?;
    let potentials: Vec<Potential> = constraints.iter().map(|c| c.potential.clone()).collect();
    let stats = stats(system, &measure, &potentials)?;
    Ok(RatioResult {
        measure,
        stats,
        q,
        n,
        iterations,
    })
}

fn side_patterns(constraints: &[Constraint]) -> Vec<Vec<Side>> {
    let mut out = vec![Vec::new()];
    for c in constraints {
        let options = if c.eps == 0.0 {
            vec![Side::Equal(c.gamma)]
        } else {
            vec![Side::Inactive, Side::Equal(c.gamma + c.eps), Side::Equal(c.gamma - c.eps)]
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |s| {
                    let mut v = prefix.clone();
                    v.push(*s);
                    v
                })
            })
            .collect();
    }
    out
}

/// Words that can carry positive weight in some probability vector meeting
/// the active equalities. Repeatedly finds `d` with `d·(m_j - c) >= 0` for
/// all `j` and drops words where the inequality is strict.
fn minimal_face(data: &WordData, active: &[(usize, f64)]) -> Vec<usize> {
    let mut face: Vec<usize> = (0..data.len()).collect();
    let k = active.len();
    if k == 0 {
        return face;
    }
    let g = |j: usize| -> Vec<f64> { active.iter().map(|&(i, c)| data.moments[i][j] - c).collect() };
    loop {
        if face.is_empty() {
            return face;
        }
        // min y_0 s.t. Σ_j y_j g_j - y_0 ĝ = -ĝ, y >= 0, ĝ = Σ_j g_j
        let cols: Vec<Vec<f64>> = face.iter().map(|&j| g(j)).collect();
        let mut sum = vec![0.0; k];
        for c in &cols {
            for (s, v) in sum.iter_mut().zip(c) {
                *s += v;
            }
        }
        let a: Vec<Vec<f64>> = (0..k)
            .map(|r| {
                let mut row: Vec<f64> = cols.iter().map(|c| c[r]).collect();
                row.push(-sum[r]);
                row
            })
            .collect();
        let b: Vec<f64> = sum.iter().map(|v| -v).collect();
        let mut cost = vec![0.0; face.len() + 1];
        cost[face.len()] = 1.0;
        let sol = lp::solve(&a, &b, &cost);
        if sol.status != LpStatus::Optimal || sol.objective < 0.5 {
            return face;
        }
        let d: Vec<f64> = sol.duals.iter().map(|v| -v).collect();
        let proj: Vec<f64> = cols.iter().map(|c| c.iter().zip(&d).map(|(x, y)| x * y).sum()).collect();
        let scale = proj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-9 * scale;
        let keep: Vec<usize> = face.iter().zip(&proj).filter(|(_, v)| **v <= tol).map(|(j, _)| *j).collect();
        if keep.len() == face.len() {
            return face;
        }
        face = keep;
    }
}

/// Maximizer of `H(p) - r Σ p ℓ` over the feasible polytope.
fn inner(data: &WordData, constraints: &[Constraint], patterns: &mut [Pattern], r: f64) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for pat in patterns.iter_mut() {
        let p = gibbs(data, pat, r);
        let feasible = constraints.iter().enumerate().all(|(i, c)| {
            let m: f64 = p.iter().zip(&data.moments[i]).map(|(a, b)| a * b).sum();
            (m - c.gamma).abs() <= c.eps + 1e-9 * (1.0 + c.gamma.abs())
        });
        if !feasible {
            continue;
        }
        let lam: f64 = p.iter().zip(&data.ell).map(|(a, b)| a * b).sum();
        let obj = shannon(&p) - r * lam;
        if best.as_ref().is_none_or(|(v, _)| obj > *v) {
            best = Some((obj, p));
        }
    }
    best.map(|(_, p)| p)
}

/// Gibbs vector `p_j ∝ exp(-r ℓ_j + y·(m_j - c))` on the face, with `y`
/// minimizing the dual `ln Σ_j exp(-r ℓ_j + y·(m_j - c))`.
fn gibbs(data: &WordData, pat: &mut Pattern, r: f64) -> Vec<f64> {
    let k = pat.active.len();
    let g: Vec<Vec<f64>> = pat
        .face
        .iter()
        .map(|&j| pat.active.iter().map(|&(i, c)| data.moments[i][j] - c).collect())
        .collect();
    let base: Vec<f64> = pat.face.iter().map(|&j| -r * data.ell[j]).collect();
    let weights = |y: &[f64]| -> (f64, Vec<f64>) {
        let e: Vec<f64> = base
            .iter()
            .zip(&g)
            .map(|(b, gj)| b + gj.iter().zip(y).map(|(a, c)| a * c).sum::<f64>())
            .collect();
        let mx = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = e.iter().map(|v| (v - mx).exp()).collect();
        let z: f64 = w.iter().sum();
        (mx + z.ln(), w.into_iter().map(|v| v / z).collect())
    };
    let gradient = |p: &[f64]| -> Vec<f64> {
        let mut grad = vec![0.0; k];
        for (pj, gj) in p.iter().zip(&g) {
            for (a, b) in grad.iter_mut().zip(gj) {
                *a += pj * b;
            }
        }
        grad
    };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut y = pat.y.clone();
    let (mut dual, mut p) = weights(&y);
    let gscale = g.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for _ in 0..200 {
        if k == 0 {
            break;
        }
        let grad = gradient(&p);
        if norm(&grad) <= 1e-15 * gscale {
            break;
        }
        let mut hess = vec![vec![0.0; k]; k];
        for (pj, gj) in p.iter().zip(&g) {
            for a in 0..k {
                for b in 0..k {
                    hess[a][b] += pj * (gj[a] - grad[a]) * (gj[b] - grad[b]);
                }
            }
        }
        let trace: f64 = (0..k).map(|a| hess[a][a]).sum();
        for (a, row) in hess.iter_mut().enumerate() {
            row[a] += 1e-14 * trace.max(1e-300);
        }
        let step = solve_small(hess, grad.iter().map(|v| -v).collect());
        let slope: f64 = step.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(&step).map(|(a, b)| a + s * b).collect();
            let (d, q) = weights(&trial);
            // near the optimum the dual decrease drowns in rounding; a
            // smaller gradient is then the acceptance test
            let armijo = d <= dual + 1e-4 * s * slope;
            let flat = (d - dual).abs() <= 1e-13 * dual.abs().max(1.0) && norm(&gradient(&q)) < norm(&grad);
            if armijo || flat {
                moved = d < dual || q != p;
                y = trial;
                dual = d;
                p = q;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            break;
        }
    }
    pat.y = y;
    let mut full = vec![0.0; data.len()];
    for (&j, pj) in pat.face.iter().zip(p) {
        full[j] = pj;
    }
    full
}

/// Gaussian elimination with partial pivoting.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d == 0.0 {
            continue;
        }
        for row in col + 1..k {
            let f = a[row][col] / d;
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = if a[row][row] == 0.0 { 0.0 } else { (b[row] - s) / a[row][row] };
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entropy2(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn besicovitch_eggleston_quarter() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let c = Constraint::new(Potential::indicator(1), 0.25, 0.0);
        for n in 1..=3 {
            let r = maximize_ratio(&sys, std::slice::from_ref(&c), 2, n, &RatioOptions::default()).unwrap();
            let want = entropy2(0.25) / 2f64.ln();
            assert!((r.stats.ratio - want).abs() < 1e-10, "n={n}: {} vs {want}", r.stats.ratio);
            assert!((r.stats.moments[0] - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn unconstrained_equals_moran_root() {
        let sys = BranchSystem::linear(&[0.5, 0.25]).unwrap();
        let r = maximize_ratio(&sys, &[], 2, 1, &RatioOptions::default()).unwrap();
        let x = (5f64.sqrt() - 1.0) / 2.0;
        assert!((r.stats.ratio + x.log2()).abs() < 1e-12, "{}", r.stats.ratio);
    }

    #[test]
    fn gauss_boundary_moment_forces_dirac() {
        let g = BranchSystem::gauss();
        let c = Constraint::new(Potential::harmonic(), 1.0, 0.0);
        let r = maximize_ratio(&g, &[c], 2, 1, &RatioOptions::default()).unwrap();
        assert_eq!(r.measure.words(), &[Word::from(&[1u64][..])]);
        assert_eq!(r.stats.ratio, 0.0);
        // also at level 2: only the word 11 stays
        let c = Constraint::new(Potential::harmonic(), 1.0, 0.0);
        let r = maximize_ratio(&g, &[c], 3, 2, &RatioOptions::default()).unwrap();
        assert_eq!(r.measure.words().len(), 1);
    }

    #[test]
    fn box_constraint_inactive_and_active() {
        let sys = BranchSystem::linear(&[0.5, 0.25]).unwrap();
        // unconstrained optimum has p_1 = x ≈ 0.618, inside the box
        let x = (5f64.sqrt() - 1.0) / 2.0;
        let c = Constraint::new(Potential::indicator(1), 0.6, 0.05);
        let r = maximize_ratio(&sys, &[c], 2, 1, &RatioOptions::default()).unwrap();
        assert!((r.stats.moments[0] - x).abs() < 1e-9);
        // box away from it: optimum sits on the nearer side
        let c = Constraint::new(Potential::indicator(1), 0.3, 0.05);
        let r = maximize_ratio(&sys, &[c], 2, 1, &RatioOptions::default()).unwrap();
        assert!((r.stats.moments[0] - 0.35).abs() < 1e-9);
        let want = entropy2(0.35) / ((0.35 + 2.0 * 0.65) * 2f64.ln());
        assert!((r.stats.ratio - want).abs() < 1e-12, "{} {want} {:?}", r.stats.ratio, r.stats.moments);
    }

    #[test]
    fn infeasible_target() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let c = Constraint::new(Potential::indicator(1), 1.5, 0.0);
        assert!(matches!(
            maximize_ratio(&sys, &[c], 2, 2, &RatioOptions::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn two_constraints_three_branches() {
        // pinning p_1 and p_2 leaves a single Bernoulli vector at level 1
        let sys = BranchSystem::linear(&[0.5, 0.25, 0.125]).unwrap();
        let cs = [
            Constraint::new(Potential::indicator(1), 0.2, 0.0),
            Constraint::new(Potential::indicator(2), 0.5, 0.0),
        ];
        let r = maximize_ratio(&sys, &cs, 3, 1, &RatioOptions::default()).unwrap();
        let p = [0.2, 0.5, 0.3];
        let want = shannon(&p) / ((0.2 + 1.0 + 0.9) * 2f64.ln());
        assert!((r.stats.ratio - want).abs() < 1e-12, "{} {want} {:?}", r.stats.ratio, r.stats.moments);
    }
}
