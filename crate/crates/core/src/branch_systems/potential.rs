//! Potentials as finite linear combinations of built-in observables.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BranchSystem, Word};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub word: Vec<u64>,
    pub value: f64,
}

/// A single observable on the symbolic space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Constant,
    /// `χ_{I_label}`.
    Indicator { label: u64 },
    /// `1/a_1`, the reciprocal of the first branch label.
    Harmonic,
    /// Locally constant on `level`-cylinders; unlisted words take `default`.
    Table {
        level: usize,
        values: Vec<TableEntry>,
        #[serde(default)]
        default: f64,
    },
    /// `ln |T'|`.
    LogDerivative,
}

impl Observable {
    fn level(&self) -> usize {
        match self {
            Observable::Table { level, .. } => *level,
            _ => 1,
        }
    }

    /// Value on a branch with real label `x` for level-1 observables other
    /// than `ln |T'|`.
    fn level1_value(&self, x: f64) -> f64 {
        match self {
            Observable::Constant => 1.0,
            Observable::Indicator { label } => f64::from(u8::from(*label as f64 == x)),
            Observable::Harmonic => 1.0 / x,
            Observable::Table { values, default, .. } => values
                .iter()
                .find(|e| e.word.len() == 1 && e.word[0] as f64 == x)
                .map_or(*default, |e| e.value),
            Observable::LogDerivative => f64::NAN,
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Observable::Constant => (1.0, 1.0),
            Observable::Indicator { .. } | Observable::Harmonic => (0.0, 1.0),
            Observable::Table { values, default, .. } => values
                .iter()
                .map(|e| e.value)
                .fold((*default, *default), |(lo, hi), v| (lo.min(v), hi.max(v))),
            Observable::LogDerivative => (0.0, f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(default = "one")]
    pub coef: f64,
    #[serde(flatten)]
    pub observable: Observable,
}

fn one() -> f64 {
    1.0
}

/// `Σ coef_i · observable_i`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Potential {
    pub terms: Vec<Term>,
}

/// On-disk form: either `{"terms": [...]}` or a single term object.
#[derive(Deserialize)]
#[serde(untagged)]
enum PotentialFile {
    Terms { terms: Vec<Term> },
    Single(Term),
}

impl Potential {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn single(coef: f64, observable: Observable) -> Self {
        Self {
            terms: vec![Term { coef, observable }],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::single(c, Observable::Constant)
    }

    pub fn indicator(label: u64) -> Self {
        Self::single(1.0, Observable::Indicator { label })
    }

    pub fn harmonic() -> Self {
        Self::single(1.0, Observable::Harmonic)
    }

    pub fn log_derivative(coef: f64) -> Self {
        Self::single(coef, Observable::LogDerivative)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: PotentialFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("potential: {e}")))?;
        let p = match parsed {
            PotentialFile::Terms { terms } => Potential { terms },
            PotentialFile::Single(t) => Potential { terms: vec![t] },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if !t.coef.is_finite() {
                return Err(Error::InvalidModel("potential coefficient must be finite".into()));
            }
            if let Observable::Table { level, values, default } = &t.observable {
                if *level == 0 || !default.is_finite() {
                    return Err(Error::InvalidModel("table level must be >= 1".into()));
                }
                if values.iter().any(|e| e.word.len() != *level || !e.value.is_finite()) {
                    return Err(Error::InvalidModel("table words must have the table level".into()));
                }
            }
            if let Observable::Indicator { label: 0 } = t.observable {
                return Err(Error::InvalidModel("indicator labels start at 1".into()));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coef: t.coef * s,
                    observable: t.observable.clone(),
                })
                .collect(),
        }
    }

    pub fn plus(&self, other: &Potential) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    /// Cylinder level `m` on which the potential is determined.
    pub fn level(&self) -> usize {
        self.terms.iter().map(|t| t.observable.level()).max().unwrap_or(1)
    }

    /// Total coefficient of `ln |T'|`.
    pub fn log_derivative_coef(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.observable == Observable::LogDerivative)
            .map(|t| t.coef)
            .sum()
    }

    /// The potential without its `ln |T'|` terms.
    pub fn without_log_derivative(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|t| t.observable != Observable::LogDerivative)
                .cloned()
                .collect(),
        }
    }

    /// Locally constant on `level()`-cylinders for this system.
    pub fn is_locally_constant(&self, system: &BranchSystem) -> bool {
        system.is_linear() || self.log_derivative_coef() == 0.0
    }

    /// Largest label referenced explicitly.
    pub fn max_label(&self) -> u64 {
        self.terms
            .iter()
            .map(|t| match &t.observable {
                Observable::Indicator { label } => *label,
                Observable::Table { values, .. } => values.iter().flat_map(|e| e.word.iter().copied()).max().unwrap_or(0),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// `(inf, sup)` bounds; infinite when unbounded.
    pub fn bounds(&self, system: &BranchSystem) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for t in &self.terms {
            let (a, b) = match t.observable {
                Observable::LogDerivative => {
                    let lower = system.xi().ln();
                    let upper = if system.is_finite() {
                        (0..system.branch_count().unwrap_or(0))
                            .filter_map(|p| system.label_at(p))
                            .map(|l| -system.log_diameter(l).unwrap_or(f64::NEG_INFINITY))
                            .fold(lower, f64::max)
                            + system.distortion().var(1)
                    } else {
                        f64::INFINITY
                    };
                    (lower, upper)
                }
                ref o => o.range(),
            };
            let (a, b) = if t.coef >= 0.0 { (t.coef * a, t.coef * b) } else { (t.coef * b, t.coef * a) };
            lo += if a.is_nan() { 0.0 } else { a };
            hi += if b.is_nan() { 0.0 } else { b };
        }
        (lo, hi)
    }

    /// `var_n` of the potential.
    pub fn variation(&self, n: usize, system: &BranchSystem) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let v = match &t.observable {
                    Observable::LogDerivative => system.distortion().var(n),
                    Observable::Table { level, .. } if n < *level => {
                        let (a, b) = t.observable.range();
                        b - a
                    }
                    _ => 0.0,
                };
                t.coef.abs() * v
            })
            .sum()
    }

    /// Value on branch `x` (real label allowed) of the non-`ln|T'|` part,
    /// for level-1 potentials.
    pub fn level1_value(&self, x: f64) -> Result<f64> {
        if self.level() > 1 {
            return Err(Error::Unsupported("potential is not level 1".into()));
        }
        Ok(self
            .terms
            .iter()
            .filter(|t| t.observable != Observable::LogDerivative)
            .map(|t| t.coef * t.observable.level1_value(x))
            .sum())
    }

    /// Precomputed evaluator of the locally constant part on cyclic subwords.
    pub fn evaluator(&self) -> WordEvaluator {
        let tables = self
            .terms
            .iter()
            .filter_map(|t| match &t.observable {
                Observable::Table { level, values, default } => Some((
                    t.coef,
                    *level,
                    values.iter().map(|e| (e.word.clone(), e.value)).collect::<HashMap<_, _>>(),
                    *default,
                )),
                _ => None,
            })
            .collect();
        let level1 = Potential {
            terms: self
                .terms
                .iter()
                .filter(|t| !matches!(t.observable, Observable::LogDerivative | Observable::Table { .. }))
                .cloned()
                .collect(),
        };
        WordEvaluator {
            level1,
            tables,
            level: self.level(),
        }
    }

    /// `S_n f(x̄)` at the periodic point of the word.
    pub fn birkhoff_sum(&self, system: &BranchSystem, word: &Word) -> Result<f64> {
        let level = self.level();
        if word.len() < level {
            return Err(Error::UnderdeterminedWord {
                len: word.len(),
                level,
            });
        }
        for &s in word.symbols() {
            system.branch(s)?;
        }
        let mut total = self.evaluator().cyclic_sum(word.symbols());
        let kappa = self.log_derivative_coef();
        if kappa != 0.0 {
            total += kappa * system.periodic_log_derivative(word)?;
        }
        Ok(total)
    }
}

/// Evaluates the locally constant part of a potential along cyclic words.
#[derive(Clone, Debug)]
pub struct WordEvaluator {
    level1: Potential,
    tables: Vec<(f64, usize, HashMap<Vec<u64>, f64>, f64)>,
    level: usize,
}

impl WordEvaluator {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn symbol_value(&self, label: u64) -> f64 {
        self.level1.level1_value(label as f64).unwrap_or(0.0)
    }

    /// `Σ_j f(σ^j w̄)` over the cyclic word.
    pub fn cyclic_sum(&self, symbols: &[u64]) -> f64 {
        let n = symbols.len();
        let mut total: f64 = symbols.iter().map(|&s| self.symbol_value(s)).sum();
        let mut buf = Vec::new();
        for (coef, level, map, default) in &self.tables {
            for j in 0..n {
                buf.clear();
                buf.extend((0..*level).map(|i| symbols[(j + i) % n]));
                total += coef * map.get(&buf).copied().unwrap_or(*default);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_counts_symbol() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let v = sys.birkhoff_sum(&Potential::indicator(1), &Word::from(&[1u64, 2, 1, 2][..])).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn harmonic_sum() {
        let g = BranchSystem::gauss();
        let v = g.birkhoff_sum(&Potential::harmonic(), &Word::from(&[1u64, 2, 4][..])).unwrap();
        assert_eq!(v, 1.75);
    }

    #[test]
    fn log_derivative_linear() {
        let sys = BranchSystem::linear(&[0.5, 0.25]).unwrap();
        let v = sys.birkhoff_sum(&Potential::log_derivative(1.0), &Word::from(&[1u64, 2][..])).unwrap();
        assert!((v - (2f64.ln() + 4f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn constant_sums_to_length() {
        let g = BranchSystem::gauss();
        for n in 1..6 {
            let word = Word::new((1..=n as u64).collect()).unwrap();
            assert_eq!(g.birkhoff_sum(&Potential::constant(1.0), &word).unwrap(), n as f64);
        }
    }

    #[test]
    fn table_needs_long_words() {
        let sys = BranchSystem::linear(&[0.5, 0.5]).unwrap();
        let p = Potential::single(
            1.0,
            Observable::Table {
                level: 2,
                values: vec![TableEntry {
                    word: vec![1, 2],
                    value: 3.0,
                }],
                default: 0.0,
            },
        );
        assert!(matches!(
            sys.birkhoff_sum(&p, &Word::from(&[1u64][..])),
            Err(Error::UnderdeterminedWord { .. })
        ));
        // cyclic subwords of (1,2,1): 12, 21, 11
        assert_eq!(sys.birkhoff_sum(&p, &Word::from(&[1u64, 2, 1][..])).unwrap(), 3.0);
        assert_eq!(p.variation(1, &sys), 3.0);
        assert_eq!(p.variation(2, &sys), 0.0);
    }

    #[test]
    fn json_forms() {
        let p = Potential::from_json(r#"{"kind":"indicator","label":1}"#).unwrap();
        assert_eq!(p, Potential::indicator(1));
        let q = Potential::from_json(r#"{"terms":[{"kind":"harmonic","coef":2.0},{"kind":"log_derivative","coef":-0.5}]}"#)
            .unwrap();
        assert_eq!(q.log_derivative_coef(), -0.5);
        let back = Potential::from_json(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back, q);
        assert!(Potential::from_json(r#"{"kind":"nope"}"#).is_err());
    }
}
