//! Countable-branch expanding interval maps described by their inverse branches.
//!
//! A [`BranchSystem`] is an explicit head of branches followed by an optional
//! parametric tail. Branch labels are positive integers that stay attached to a
//! branch under truncation and restriction, so digit-valued potentials such as
//! `1/a_1` keep their meaning on subsystems.

pub mod mobius;
pub mod model;
pub mod potential;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{self, TailOptions};
pub use mobius::{Mobius, ScaledMobius};
pub use potential::{Observable, Potential};

/// Real-valued evaluator used by custom analytic branches.
pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Analytic branch given by evaluators: the inverse branch `[0,1] → Ī` and
/// `ln |T'(x)|` for `x` in the branch interval.
#[derive(Clone)]
pub struct CustomBranch {
    pub inverse: Evaluator,
    pub log_derivative: Evaluator,
}

impl fmt::Debug for CustomBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomBranch").finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Analytic {
    Mobius(Mobius),
    Custom(CustomBranch),
}

#[derive(Clone, Debug)]
pub enum BranchKind {
    Linear { diameter: f64 },
    Analytic(Analytic),
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub index: u64,
    pub kind: BranchKind,
}

impl Branch {
    pub fn linear(index: u64, diameter: f64) -> Self {
        Self {
            index,
            kind: BranchKind::Linear { diameter },
        }
    }

    pub fn mobius(index: u64, m: Mobius) -> Self {
        Self {
            index,
            kind: BranchKind::Analytic(Analytic::Mobius(m)),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            BranchKind::Linear { diameter } => *diameter,
            BranchKind::Analytic(Analytic::Mobius(m)) => m.image_length(),
            BranchKind::Analytic(Analytic::Custom(c)) => ((c.inverse)(1.0) - (c.inverse)(0.0)).abs(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, BranchKind::Linear { .. })
    }
}

/// Tail diameters `c · n^(-a) · ln(n + b)^(-d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl TailModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0 && self.a > 0.0 && self.d >= 0.0 && self.b >= 1.0;
        let finite = [self.c, self.a, self.b, self.d].iter().all(|v| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "tail requires c>0, a>0, d>=0, b>=1 (got {:?})",
                self
            )))
        }
    }

    /// `ln ln(x + b)` computed from `u = ln x`.
    pub fn log_log_term(&self, x: f64, u: f64) -> f64 {
        if x.is_finite() && x < 1e15 {
            (x + self.b).ln().ln()
        } else {
            (u + (self.b * (-u).exp()).ln_1p()).ln()
        }
    }

    pub fn log_diameter(&self, x: f64, u: f64) -> f64 {
        self.c.ln() - self.a * u - self.d * self.log_log_term(x, u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailFamily {
    Linear(TailModel),
    /// Inverse Gauss branches `1/(k + y)`.
    Gauss,
}

/// Branches with labels `first, first + 1, …` drawn from a parametric family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tail {
    pub family: TailFamily,
    pub first: u64,
}

impl Tail {
    /// `ln diam(I_x)` for a real label `x` with `u = ln x`.
    pub fn log_diameter(&self, x: f64, u: f64) -> f64 {
        match self.family {
            TailFamily::Linear(m) => m.log_diameter(x, u),
            TailFamily::Gauss => -2.0 * u - (-u).exp().ln_1p(),
        }
    }

    /// `ln |T'|` at the fixed point of branch `x`.
    pub fn periodic_log_derivative(&self, x: f64, u: f64) -> f64 {
        match self.family {
            TailFamily::Linear(m) => -m.log_diameter(x, u),
            TailFamily::Gauss => {
                if x < 1e8 {
                    2.0 * (x / 2.0).asinh()
                } else {
                    let r = (-2.0 * u).exp();
                    2.0 * (u + (((1.0 + 4.0 * r).sqrt() - 1.0) / 2.0).ln_1p())
                }
            }
        }
    }

    /// Coefficient of `ln x` in the leading behaviour of `ln diam`, and of
    /// `ln ln x` (used for convergence classification of tail series).
    pub fn exponents(&self) -> (f64, f64) {
        match self.family {
            TailFamily::Linear(m) => (m.a, m.d),
            TailFamily::Gauss => (2.0, 0.0),
        }
    }

    pub fn branch(&self, label: u64) -> Branch {
        match self.family {
            TailFamily::Linear(m) => {
                let x = label as f64;
                Branch::linear(label, m.log_diameter(x, x.ln()).exp())
            }
            TailFamily::Gauss => Branch::mobius(label, Mobius::gauss(label as f64)),
        }
    }
}

/// Variation bounds `var_n(ln |T'|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distortion {
    Zero,
    /// Gauss branches restricted to digits `>= min_digit`.
    Gauss { min_digit: u64 },
    /// User schedule; the last entry is held for larger `n`.
    Schedule(Vec<f64>),
}

impl Distortion {
    pub fn var(&self, n: usize) -> f64 {
        assert!(n >= 1);
        match self {
            Distortion::Zero => 0.0,
            Distortion::Schedule(v) => {
                if v.is_empty() {
                    0.0
                } else {
                    v[(n - 1).min(v.len() - 1)]
                }
            }
            Distortion::Gauss { min_digit } => {
                let nd = *min_digit as f64;
                let mut best = 2.0 * (1.0 / nd).ln_1p();
                let (mut f0, mut f1) = (1.0f64, 1.0f64);
                for _ in 2..=n {
                    let (a, b) = (f1, f0 + f1);
                    f0 = a;
                    f1 = b;
                    // f0 = F_j, f1 = F_{j+1}
                    let bound = 2.0 * (1.0 + 1.0 / nd) / (nd * f0 * f1);
                    best = best.min(bound);
                }
                best
            }
        }
    }

    /// `Σ_{j<=n} var_j`.
    pub fn sum(&self, n: usize) -> f64 {
        (1..=n).map(|j| self.var(j)).sum()
    }
}

/// Exact or bracketed length of a cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterBracket {
    pub lower: f64,
    pub upper: f64,
    pub log_estimate: f64,
}

impl DiameterBracket {
    pub fn exact_log(log_d: f64) -> Self {
        let d = log_d.exp();
        Self {
            lower: d,
            upper: d,
            log_estimate: log_d,
        }
    }

    pub fn estimate(&self) -> f64 {
        self.log_estimate.exp()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// A finite word of branch labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<u64>);

impl Word {
    pub fn new(symbols: Vec<u64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidWord("empty word".into()));
        }
        if symbols.contains(&0) {
            return Err(Error::InvalidWord("branch labels start at 1".into()));
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        Word(s)
    }
}

impl From<&[u64]> for Word {
    fn from(s: &[u64]) -> Self {
        Word::new(s.to_vec()).expect("nonempty word with positive labels")
    }
}

/// An expanding map model with countably many branches.
#[derive(Clone, Debug)]
pub struct BranchSystem {
    head: Vec<Branch>,
    head_left: Vec<f64>,
    tail: Option<Tail>,
    xi: f64,
    distortion: Distortion,
}

impl BranchSystem {
    /// Validates and lays out a system. Linear branches are placed
    /// consecutively from 0 in label order.
    pub fn new(head: Vec<Branch>, tail: Option<Tail>, xi: f64, distortion: Distortion) -> Result<Self> {
        if head.is_empty() && tail.is_none() {
            return Err(Error::InvalidModel("no branches".into()));
        }
        for w in head.windows(2) {
            if w[1].index <= w[0].index {
                return Err(Error::InvalidModel("branch labels must increase".into()));
            }
        }
        if head.first().is_some_and(|b| b.index == 0) {
            return Err(Error::InvalidModel("branch labels start at 1".into()));
        }
        if let (Some(t), Some(last)) = (tail, head.last()) {
            if t.first <= last.index {
                return Err(Error::InvalidModel("tail labels must follow the head".into()));
            }
        }
        if let Some(Tail {
            family: TailFamily::Linear(m),
            ..
        }) = tail
        {
            m.validate()?;
        }
        if tail.is_some_and(|t| t.first == 0) {
            return Err(Error::InvalidModel("branch labels start at 1".into()));
        }
        if !(xi >= 1.0) {
            return Err(Error::InvalidModel(format!("expansion constant {xi} must be at least 1")));
        }
        let mut head_left = Vec::with_capacity(head.len());
        let mut left = 0.0;
        let mut max_diam: f64 = 0.0;
        for b in &head {
            let d = b.diameter();
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidModel(format!("branch {} has diameter {d} outside (0,1)", b.index)));
            }
            if let BranchKind::Analytic(Analytic::Mobius(m)) = &b.kind {
                let (y0, y1) = (m.apply(0.0), m.apply(1.0));
                if !(0.0..=1.0).contains(&y0) || !(0.0..=1.0).contains(&y1) {
                    return Err(Error::InvalidModel(format!("branch {} does not map into [0,1]", b.index)));
                }
            }
            max_diam = max_diam.max(d);
            head_left.push(left);
            left += d;
        }
        let sys = Self {
            head,
            head_left,
            tail,
            xi,
            distortion,
        };
        if sys.is_linear() {
            let total = sys.total_length();
            if total > 1.0 + 1e-12 {
                return Err(Error::InvalidModel(format!("branch lengths sum to {total} > 1")));
            }
            if max_diam > 1.0 / xi + 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "diameter {max_diam} exceeds 1/xi = {}",
                    1.0 / xi
                )));
            }
        }
        Ok(sys)
    }

    /// The Gauss map `x ↦ 1/x mod 1`.
    pub fn gauss() -> Self {
        Self::new(
            Vec::new(),
            Some(Tail {
                family: TailFamily::Gauss,
                first: 1,
            }),
            1.0,
            Distortion::Gauss { min_digit: 1 },
        )
        .expect("gauss system is valid")
    }

    /// Finite piecewise linear system with the given branch lengths.
    pub fn linear(diameters: &[f64]) -> Result<Self> {
        Self::linear_with_tail(diameters, None)
    }

    /// Linear head followed by a linear tail starting after the head.
    pub fn linear_with_tail(diameters: &[f64], tail: Option<TailModel>) -> Result<Self> {
        let head: Vec<Branch> = diameters
            .iter()
            .enumerate()
            .map(|(i, &d)| Branch::linear(i as u64 + 1, d))
            .collect();
        let tail = tail.map(|m| Tail {
            family: TailFamily::Linear(m),
            first: diameters.len() as u64 + 1,
        });
        let mut max_d = diameters.iter().cloned().fold(0.0, f64::max);
        if let Some(Tail {
            family: TailFamily::Linear(m),
            first,
        }) = tail
        {
            m.validate()?;
            // tail diameters are eventually decreasing; scan the first few
            for k in first..first + 64 {
                let x = k as f64;
                max_d = max_d.max(m.log_diameter(x, x.ln()).exp());
            }
        }
        if !(max_d > 0.0 && max_d < 1.0) {
            return Err(Error::InvalidModel("diameters must lie in (0,1)".into()));
        }
        Self::new(head, tail, 1.0 / max_d, Distortion::Zero)
    }

    /// Piecewise linear system with `diam(I_1)^s = K` and
    /// `Σ_{i>=2} diam(I_i)^s = C`, where the tail `diam(I_n) ∝ n^(-1/s) ln(n+1)^(-2/s)`
    /// makes `s` the critical exponent with a convergent series at `s`.
    pub fn flat_example(k: f64, c: f64, s_inf: f64) -> Result<Self> {
        if !(k > 0.0 && c > 0.0 && s_inf > 0.0 && s_inf < 1.0) {
            return Err(Error::InfeasibleModel("K, C must be positive and s_inf in (0,1)".into()));
        }
        if !(c < 1.0) || !(k + c > 1.0) {
            return Err(Error::InfeasibleModel(format!("need C < 1 and K + C > 1 (K={k}, C={c})")));
        }
        let d1 = k.powf(1.0 / s_inf);
        if !(d1 < 1.0) {
            return Err(Error::InfeasibleModel(format!("K={k} gives |I_1| = {d1} >= 1")));
        }
        let a = 1.0 / s_inf;
        let d = 2.0 / s_inf;
        let shape = TailModel { c: 1.0, a, b: 1.0, d };
        // Σ_{n>=2} (n^-a ln(n+1)^-d)^s
        let [sum_s] = series::log_tail_sum::<1, _>(2, TailOptions::default(), |x, u, w| {
            [(w - a * s_inf) * u - d * s_inf * shape.log_log_term(x, u)]
        });
        let log_c = (c.ln() - sum_s.estimate) / s_inf;
        let model = TailModel {
            c: log_c.exp(),
            a,
            b: 1.0,
            d,
        };
        let sys = Self::linear_with_tail(&[d1], Some(model))
            .map_err(|e| Error::InfeasibleModel(format!("packing fails: {e}")))?;
        Ok(sys)
    }

    pub fn head(&self) -> &[Branch] {
        &self.head
    }

    pub fn tail(&self) -> Option<&Tail> {
        self.tail.as_ref()
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn distortion(&self) -> &Distortion {
        &self.distortion
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// Number of branches, `None` for infinite systems.
    pub fn branch_count(&self) -> Option<usize> {
        if self.tail.is_some() {
            None
        } else {
            Some(self.head.len())
        }
    }

    pub fn is_linear(&self) -> bool {
        self.head.iter().all(Branch::is_linear)
            && !matches!(
                self.tail,
                Some(Tail {
                    family: TailFamily::Gauss,
                    ..
                })
            )
    }

    /// True when every branch is an inverse Möbius map or linear.
    pub fn is_mobius(&self) -> bool {
        self.head
            .iter()
            .all(|b| !matches!(b.kind, BranchKind::Analytic(Analytic::Custom(_))))
    }

    /// Label of the branch at 0-based position `pos`.
    pub fn label_at(&self, pos: usize) -> Option<u64> {
        if pos < self.head.len() {
            return Some(self.head[pos].index);
        }
        self.tail.map(|t| t.first + (pos - self.head.len()) as u64)
    }

    pub fn branch_at(&self, pos: usize) -> Option<Branch> {
        if pos < self.head.len() {
            return Some(self.head[pos].clone());
        }
        self.tail.map(|t| t.branch(t.first + (pos - self.head.len()) as u64))
    }

    pub fn position_of(&self, label: u64) -> Option<usize> {
        if let Ok(i) = self.head.binary_search_by_key(&label, |b| b.index) {
            return Some(i);
        }
        match self.tail {
            Some(t) if label >= t.first => Some(self.head.len() + (label - t.first) as usize),
            _ => None,
        }
    }

    pub fn branch(&self, label: u64) -> Result<Branch> {
        self.position_of(label)
            .and_then(|p| self.branch_at(p))
            .ok_or_else(|| Error::InvalidWord(format!("unknown branch {label}")))
    }

    pub fn log_diameter(&self, label: u64) -> Result<f64> {
        match self.position_of(label) {
            Some(p) if p < self.head.len() => Ok(self.head[p].diameter().ln()),
            Some(_) => {
                let t = self.tail.expect("tail position");
                let x = label as f64;
                Ok(t.log_diameter(x, x.ln()))
            }
            None => Err(Error::InvalidWord(format!("unknown branch {label}"))),
        }
    }

    pub fn diameter(&self, label: u64) -> Result<f64> {
        Ok(self.log_diameter(label)?.exp())
    }

    /// Sum of all branch lengths.
    pub fn total_length(&self) -> f64 {
        let head: f64 = self.head.iter().map(Branch::diameter).sum();
        match self.tail {
            None => head,
            Some(t) => match t.family {
                TailFamily::Gauss => head + 1.0 / t.first as f64,
                TailFamily::Linear(m) => {
                    let [s] = series::log_tail_sum::<1, _>(t.first, TailOptions::default(), |x, u, w| {
                        [m.c.ln() + (w - m.a) * u - m.d * m.log_log_term(x, u)]
                    });
                    head + s.estimate.exp()
                }
            },
        }
    }

    /// Left endpoint of a branch interval.
    pub fn left_endpoint(&self, label: u64) -> Result<f64> {
        let pos = self
            .position_of(label)
            .ok_or_else(|| Error::InvalidWord(format!("unknown branch {label}")))?;
        if pos < self.head.len() {
            return Ok(match &self.head[pos].kind {
                BranchKind::Linear { .. } => self.head_left[pos],
                BranchKind::Analytic(Analytic::Mobius(m)) => m.apply(0.0).min(m.apply(1.0)),
                BranchKind::Analytic(Analytic::Custom(c)) => (c.inverse)(0.0).min((c.inverse)(1.0)),
            });
        }
        let t = self.tail.expect("tail position");
        match t.family {
            TailFamily::Gauss => Ok(1.0 / (label as f64 + 1.0)),
            TailFamily::Linear(m) => {
                let head_end = self.head_left.last().map_or(0.0, |l| l + self.head.last().unwrap().diameter());
                let term = |k: u64| {
                    let x = k as f64;
                    m.log_diameter(x, x.ln()).exp()
                };
                if label - t.first < 200_000 {
                    Ok(head_end + (t.first..label).map(term).sum::<f64>())
                } else {
                    let tail_sum = |from: u64| {
                        let [s] = series::log_tail_sum::<1, _>(from, TailOptions::default(), |x, u, w| {
                            [m.c.ln() + (w - m.a) * u - m.d * m.log_log_term(x, u)]
                        });
                        s.estimate.exp()
                    };
                    Ok(head_end + tail_sum(t.first) - tail_sum(label))
                }
            }
        }
    }

    /// Applies the inverse branch with the given label.
    pub fn inverse(&self, label: u64, y: f64) -> Result<f64> {
        let b = self.branch(label)?;
        Ok(match &b.kind {
            BranchKind::Linear { diameter } => self.left_endpoint(label)? + diameter * y,
            BranchKind::Analytic(Analytic::Mobius(m)) => m.apply(y),
            BranchKind::Analytic(Analytic::Custom(c)) => (c.inverse)(y),
        })
    }

    /// Label of the branch containing `x`; shared endpoints go to the lowest label.
    pub fn locate(&self, x: f64) -> Option<u64> {
        for (i, b) in self.head.iter().enumerate() {
            let (lo, hi) = match &b.kind {
                BranchKind::Linear { diameter } => (self.head_left[i], self.head_left[i] + diameter),
                BranchKind::Analytic(Analytic::Mobius(m)) => {
                    let (p, q) = (m.apply(0.0), m.apply(1.0));
                    (p.min(q), p.max(q))
                }
                BranchKind::Analytic(Analytic::Custom(c)) => {
                    let (p, q) = ((c.inverse)(0.0), (c.inverse)(1.0));
                    (p.min(q), p.max(q))
                }
            };
            if lo <= x && x <= hi {
                return Some(b.index);
            }
        }
        let t = self.tail?;
        match t.family {
            TailFamily::Gauss => {
                if x <= 0.0 || x > 1.0 / t.first as f64 {
                    return None;
                }
                let k = (1.0 / x).floor() as u64;
                // x = 1/k lies in both I_{k-1} and I_k
                if (1.0 / k as f64) == x && k > t.first {
                    Some(k - 1)
                } else {
                    Some(k.max(t.first))
                }
            }
            TailFamily::Linear(_) => {
                let mut left = self.left_endpoint(t.first).ok()?;
                for k in t.first..t.first + 1_000_000 {
                    let d = self.diameter(k).ok()?;
                    if left <= x && x <= left + d {
                        return Some(k);
                    }
                    left += d;
                }
                None
            }
        }
    }

    /// First `q` branches as a finite system.
    pub fn truncate(&self, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidModel("truncation must keep at least one branch".into()));
        }
        if let Some(n) = self.branch_count() {
            if q > n {
                return Err(Error::TruncationTooLarge {
                    requested: q,
                    available: n,
                });
            }
        }
        let head: Vec<Branch> = (0..q).map(|p| self.branch_at(p).expect("position in range")).collect();
        let xi = self.truncated_xi(&head);
        Self::new(head, None, xi, self.distortion.clone())
    }

    fn truncated_xi(&self, head: &[Branch]) -> f64 {
        if self.is_linear() {
            let m = head.iter().map(Branch::diameter).fold(0.0, f64::max);
            (1.0 / m).max(self.xi)
        } else {
            self.xi
        }
    }

    /// Subsystem of branches with labels `>= n`.
    pub fn restricted_system(&self, n: u64) -> Result<Self> {
        let n = n.max(1);
        let head: Vec<Branch> = self.head.iter().filter(|b| b.index >= n).cloned().collect();
        let tail = self.tail.map(|t| Tail {
            family: t.family,
            first: t.first.max(n),
        });
        let distortion = match self.distortion {
            Distortion::Gauss { min_digit } => Distortion::Gauss {
                min_digit: min_digit.max(n),
            },
            ref d => d.clone(),
        };
        let xi = match tail {
            Some(Tail {
                family: TailFamily::Gauss,
                first,
            }) if head.is_empty() => (first as f64).powi(2).max(self.xi),
            _ => self.xi,
        };
        Self::new(head, tail, xi, distortion)
    }

    /// Composite inverse branch of a word, for Möbius systems.
    fn mobius_word(&self, word: &Word) -> Result<Option<ScaledMobius>> {
        let mut acc = ScaledMobius::identity();
        for &s in word.symbols() {
            match self.branch(s)?.kind {
                BranchKind::Analytic(Analytic::Mobius(m)) => acc = acc.then(&m),
                _ => return Ok(None),
            }
        }
        Ok(Some(acc))
    }

    /// Periodic point of the word and the orbit points `x_0 = x̄, x_1, …`.
    pub fn periodic_orbit(&self, word: &Word) -> Result<Vec<f64>> {
        let branches: Vec<Branch> = word.symbols().iter().map(|&s| self.branch(s)).collect::<Result<_>>()?;
        let apply_suffix = |from: usize, y: f64| -> Result<f64> {
            let mut y = y;
            for j in (from..branches.len()).rev() {
                y = self.inverse(branches[j].index, y)?;
            }
            Ok(y)
        };
        let mut x = 0.5;
        if let Some(acc) = self.mobius_word(word)? {
            x = acc.fixed_point();
        } else {
            for _ in 0..2000 {
                let nx = apply_suffix(0, x)?;
                let done = (nx - x).abs() <= 1e-16 * x.abs().max(1e-300);
                x = nx;
                if done {
                    break;
                }
            }
        }
        let mut orbit = vec![0.0; branches.len()];
        orbit[0] = x;
        for (j, slot) in orbit.iter_mut().enumerate().skip(1) {
            *slot = apply_suffix(j, x)?;
        }
        Ok(orbit)
    }

    /// `S_n ln|T'|` at the periodic point of the word.
    pub fn periodic_log_derivative(&self, word: &Word) -> Result<f64> {
        if self.is_linear() {
            let mut s = 0.0;
            for &l in word.symbols() {
                s -= self.log_diameter(l)?;
            }
            return Ok(s);
        }
        if let Some(acc) = self.mobius_word(word)? {
            return Ok(acc.periodic_log_derivative());
        }
        let orbit = self.periodic_orbit(word)?;
        let mut s = 0.0;
        for (&l, &x) in word.symbols().iter().zip(&orbit) {
            s += self.log_derivative_at(l, x)?;
        }
        Ok(s)
    }

    /// `ln |T'(x)|` for `x` in the branch with the given label.
    pub fn log_derivative_at(&self, label: u64, x: f64) -> Result<f64> {
        Ok(match self.branch(label)?.kind {
            BranchKind::Linear { diameter } => -diameter.ln(),
            BranchKind::Analytic(Analytic::Mobius(m)) => {
                // T = g^{-1}; |T'(x)| = 1/|g'(g^{-1}(x))|
                let inv = Mobius::new(m.d, -m.b, -m.c, m.a);
                -m.log_abs_derivative(inv.apply(x))
            }
            BranchKind::Analytic(Analytic::Custom(c)) => (c.log_derivative)(x),
        })
    }

    /// Length of the cylinder `[ω_1 … ω_n]`.
    ///
    /// Exact for linear and Möbius systems. For custom analytic branches the
    /// bracket is `exp(-S_n ln|T'|(x̄) ± Σ_{j<=n} var_j)` intersected with the
    /// endpoint difference when that is well conditioned.
    pub fn cylinder_diameter(&self, word: &Word) -> Result<DiameterBracket> {
        if self.is_linear() {
            let mut s = 0.0;
            for &l in word.symbols() {
                s += self.log_diameter(l)?;
            }
            return Ok(DiameterBracket::exact_log(s));
        }
        if let Some(acc) = self.mobius_word(word)? {
            return Ok(DiameterBracket::exact_log(acc.log_image_length()));
        }
        let s = self.periodic_log_derivative(word)?;
        let dn = self.distortion.sum(word.len());
        let mut lower = (-s - dn).exp();
        let mut upper = (-s + dn).exp();
        let mut est = -s;
        let mut y0 = 0.0;
        let mut y1 = 1.0;
        for &l in word.symbols().iter().rev() {
            y0 = self.inverse(l, y0)?;
            y1 = self.inverse(l, y1)?;
        }
        let diff = (y1 - y0).abs();
        let rel = 8.0 * word.len() as f64 * f64::EPSILON / diff.max(1e-300);
        if rel < 1e-6 {
            lower = lower.max(diff * (1.0 - rel));
            upper = upper.min(diff * (1.0 + rel));
            est = diff.ln();
        }
        Ok(DiameterBracket {
            lower,
            upper,
            log_estimate: est,
        })
    }

    /// `S_n f` at the periodic point of the word.
    pub fn birkhoff_sum(&self, potential: &Potential, word: &Word) -> Result<f64> {
        potential.birkhoff_sum(self, word)
    }
}
