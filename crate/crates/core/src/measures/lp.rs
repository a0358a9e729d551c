//! Dense two-phase simplex method with Bland's rule.
//!
//! Solves `min cᵀx` subject to `A x = b`, `x >= 0`. Problem sizes here are a
//! handful of rows and up to a few thousand columns.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers `π` with `Bᵀπ = c_B` for the original rows.
    pub duals: Vec<f64>,
}

const EPS: f64 = 1e-11;

struct Tableau {
    m: usize,
    /// columns: structural `0..n`, artificial `n..n+m`, rhs at `n+m`
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                line[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `cost` over allowed columns; returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> bool {
        let rhs = self.width - 1;
        loop {
            // reduced costs d_j = c_j - c_B B^{-1} A_j
            let mut entering = None;
            for j in 0..rhs {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for r in 0..self.m {
                    d -= cost[self.basis[r]] * self.t[r][j];
                }
                if d < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.t[r][col];
                if a > EPS {
                    let ratio = self.t[r][rhs] / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr]) {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, col),
            }
        }
    }
}

/// `min cᵀx` s.t. `A x = b`, `x >= 0`.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpSolution {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    let width = n + m + 1;
    let mut sign = vec![1.0; m];
    let mut t = vec![vec![0.0; width]; m];
    for r in 0..m {
        assert_eq!(a[r].len(), n);
        if b[r] < 0.0 {
            sign[r] = -1.0;
        }
        for j in 0..n {
            t[r][j] = sign[r] * a[r][j];
        }
        t[r][n + r] = 1.0;
        t[r][width - 1] = sign[r] * b[r];
    }
    let mut tab = Tableau {
        m,
        t,
        basis: (n..n + m).collect(),
        width,
    };
    // phase 1
    let mut c1 = vec![0.0; width - 1];
    for v in c1.iter_mut().skip(n) {
        *v = 1.0;
    }
    tab.optimize(&c1, &|_| true);
    let infeas: f64 = (0..m)
        .filter(|&r| tab.basis[r] >= n)
        .map(|r| tab.t[r][width - 1])
        .sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeas > 1e-9 * scale {
        return LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            objective: f64::NAN,
            duals: vec![0.0; m],
        };
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| tab.t[r][j].abs() > 1e-9 && !tab.basis.contains(&j)) {
                tab.pivot(r, col);
            }
        }
    }
    // phase 2; artificials may stay basic at zero in redundant rows
    let mut c2 = vec![0.0; width - 1];
    c2[..n].copy_from_slice(c);
    let bounded = tab.optimize(&c2, &|j| j < n);
    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.t[r][width - 1].max(0.0);
        }
    }
    // π_i = Σ_r c_B[r] (B^{-1})_{r,i}; B^{-1} sits in the artificial columns
    let mut duals = vec![0.0; m];
    for (i, d) in duals.iter_mut().enumerate() {
        let mut s = 0.0;
        for r in 0..m {
            s += c2[tab.basis[r]] * tab.t[r][n + i];
        }
        *d = s * sign[i];
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpSolution {
        status: if bounded { LpStatus::Optimal } else { LpStatus::Unbounded },
        x,
        objective,
        duals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x - y s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        let sol = solve(&a, &[4.0, 6.0], &[-1.0, -1.0, 0.0, 0.0]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.6).abs() < 1e-12 && (sol.x[1] - 1.2).abs() < 1e-12);
        assert!((sol.objective + 2.8).abs() < 1e-12);
        // strong duality: bᵀπ = cᵀx
        let dual_obj = 4.0 * sol.duals[0] + 6.0 * sol.duals[1];
        assert!((dual_obj - sol.objective).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0, 1.0]];
        assert_eq!(solve(&a, &[-1.0], &[0.0, 0.0]).status, LpStatus::Infeasible);
        let a = vec![vec![1.0, -1.0]];
        assert_eq!(solve(&a, &[1.0], &[0.0, -1.0]).status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_rows() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let sol = solve(&a, &[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
    }
}
