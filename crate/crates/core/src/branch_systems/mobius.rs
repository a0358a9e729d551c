//! Real Möbius maps `y ↦ (a y + b) / (c y + d)` used as inverse branches.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Inverse Gauss branch `y ↦ 1/(k + y)`, defined for real `k` as well.
    pub const fn gauss(k: f64) -> Self {
        Self::new(0.0, 1.0, 1.0, k)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, y: f64) -> f64 {
        (self.a * y + self.b) / (self.c * y + self.d)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// `ln |g'(y)|`.
    pub fn log_abs_derivative(&self, y: f64) -> f64 {
        self.det().abs().ln() - 2.0 * (self.c * y + self.d).abs().ln()
    }

    /// Exact `|g(1) - g(0)|` without cancellation.
    pub fn image_length(&self) -> f64 {
        (self.det() / (self.d * (self.c + self.d))).abs()
    }
}

/// A composite Möbius map kept with entries of order one plus a log scale,
/// so that long words with large digits neither overflow nor underflow.
#[derive(Clone, Copy, Debug)]
pub struct ScaledMobius {
    pub m: Mobius,
    /// The true matrix is `m * exp(log_scale)`.
    pub log_scale: f64,
    /// `ln |det|` of the true matrix, accumulated additively.
    pub log_det: f64,
}

impl ScaledMobius {
    pub fn identity() -> Self {
        Self {
            m: Mobius::new(1.0, 0.0, 0.0, 1.0),
            log_scale: 0.0,
            log_det: 0.0,
        }
    }

    pub fn from(m: Mobius) -> Self {
        Self::identity().then(&m)
    }

    /// `self ∘ g`.
    pub fn then(&self, g: &Mobius) -> Self {
        let mut m = self.m.compose(g);
        let norm = m.a.abs().max(m.b.abs()).max(m.c.abs()).max(m.d.abs());
        m = Mobius::new(m.a / norm, m.b / norm, m.c / norm, m.d / norm);
        Self {
            m,
            log_scale: self.log_scale + norm.ln(),
            log_det: self.log_det + g.det().abs().ln(),
        }
    }

    /// Attracting fixed point in `[0, 1]` of the composite contraction.
    pub fn fixed_point(&self) -> f64 {
        let Mobius { a, b, c, d } = self.m;
        if c.abs() < 1e-300 {
            return b / (d - a);
        }
        // c x^2 + (d - a) x - b = 0
        let p = d - a;
        let disc = (p * p + 4.0 * b * c).max(0.0).sqrt();
        let roots = if p <= 0.0 {
            let r1 = (-p + disc) / (2.0 * c);
            let r2 = if r1 != 0.0 { -b / (c * r1) } else { (-p - disc) / (2.0 * c) };
            [r1, r2]
        } else {
            let q = -(p + disc) / 2.0;
            [q / c, if q != 0.0 { -b / q } else { 0.0 }]
        };
        let inside = |x: f64| (-1e-12..=1.0 + 1e-12).contains(&x);
        let mut candidates: Vec<f64> = roots.into_iter().filter(|x| inside(*x)).collect();
        if candidates.len() > 1 {
            // the attracting root has |g'| < 1
            candidates.sort_by(|x, y| {
                let gx = (c * x + d).abs();
                let gy = (c * y + d).abs();
                gy.partial_cmp(&gx).unwrap()
            });
        }
        match candidates.first() {
            Some(x) => x.clamp(0.0, 1.0),
            None => {
                let mut x = 0.5;
                for _ in 0..500 {
                    let nx = self.m.apply(x);
                    if (nx - x).abs() < 1e-16 {
                        break;
                    }
                    x = nx;
                }
                x
            }
        }
    }

    /// `ln |(T^n)'(x̄)|` at the fixed point of the composite inverse branch.
    pub fn periodic_log_derivative(&self) -> f64 {
        let x = self.fixed_point();
        2.0 * ((self.m.c * x + self.m.d).abs().ln() + self.log_scale) - self.log_det
    }

    /// `ln |g_w(1) - g_w(0)|`, the log-length of the cylinder image.
    pub fn log_image_length(&self) -> f64 {
        let Mobius { c, d, .. } = self.m;
        self.log_det - 2.0 * self.log_scale - (d * (c + d)).abs().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_fixed_point() {
        let g = ScaledMobius::from(Mobius::gauss(1.0));
        let x = g.fixed_point();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((x - golden).abs() < 1e-15);
        // T'(x) = -1/x^2
        assert!((g.periodic_log_derivative() + 2.0 * golden.ln()).abs() < 1e-14);
    }

    #[test]
    fn product_of_orbit_derivatives() {
        // word (2, 3, 1): derivative of T^3 at the periodic point equals prod 1/x_j^2
        let word = [2.0, 3.0, 1.0];
        let mut acc = ScaledMobius::identity();
        for &k in &word {
            acc = acc.then(&Mobius::gauss(k));
        }
        let x0 = acc.fixed_point();
        let mut x = x0;
        let mut log_prod = 0.0;
        for &k in &word {
            log_prod += -2.0 * x.ln();
            let next = 1.0 / x - k;
            x = next;
        }
        assert!((x - x0).abs() < 1e-12);
        assert!((acc.periodic_log_derivative() - log_prod).abs() < 1e-12);
    }

    #[test]
    fn cylinder_lengths_match_convergents() {
        // cylinder [a1..an] has endpoints p_n/q_n and (p_n+p_{n-1})/(q_n+q_{n-1})
        let word = [3u64, 1, 4, 1, 5];
        let (mut p_prev, mut q_prev, mut p, mut q) = (1i128, 0i128, 0i128, 1i128);
        let mut acc = ScaledMobius::identity();
        for &k in &word {
            let (np, nq) = (k as i128 * p + p_prev, k as i128 * q + q_prev);
            p_prev = p;
            q_prev = q;
            p = np;
            q = nq;
            acc = acc.then(&Mobius::gauss(k as f64));
        }
        let e1 = p as f64 / q as f64;
        let e2 = (p + p_prev) as f64 / (q + q_prev) as f64;
        let want = 1.0 / (q as f64 * (q + q_prev) as f64);
        assert!(((e1 - e2).abs() - want).abs() < 1e-15);
        assert!((acc.log_image_length() - want.ln()).abs() < 1e-13);
    }

    #[test]
    fn huge_digits_stay_finite() {
        let mut acc = ScaledMobius::identity();
        for _ in 0..40 {
            acc = acc.then(&Mobius::gauss(1e200));
        }
        let v = acc.periodic_log_derivative();
        assert!(v.is_finite());
        assert!((v / (80.0 * 1e200f64.ln()) - 1.0).abs() < 1e-10);
    }
}
