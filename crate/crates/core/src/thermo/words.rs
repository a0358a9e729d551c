//! Exhaustive tables of periodic-word data over a finite truncation.

use rayon::prelude::*;

use crate::branch_systems::potential::WordEvaluator;
use crate::branch_systems::{Analytic, BranchKind, BranchSystem, Mobius, ScaledMobius, Word};
use crate::error::Result;
use crate::series::{pairwise_merge, LogAcc};

/// Per-word Birkhoff data for all `q^n` words over the first `q` branches.
///
/// Words are stored in lexicographic order of branch positions, so the
/// block belonging to each first symbol is contiguous. Reductions run over
/// these blocks in a fixed order, which makes results independent of the
/// number of worker threads.
#[derive(Clone, Debug)]
pub struct WordTable {
    q: usize,
    n: usize,
    /// `S_n ln|T'|` at the periodic point of each word.
    geo: Vec<f64>,
    /// `S_n φ_k` for each component.
    obs: Vec<Vec<f64>>,
}

enum Geometry {
    Linear(Vec<f64>),
    Mobius(Vec<Mobius>),
    Generic,
}

impl WordTable {
    pub fn build(system: &BranchSystem, q: usize, n: usize, components: &[WordEvaluator], pool: &rayon::ThreadPool) -> Result<Self> {
        assert!(q >= 1 && n >= 1);
        let sys = system.truncate(q)?;
        let labels: Vec<u64> = (0..q).map(|p| sys.label_at(p).expect("truncated position")).collect();
        let geometry = if sys.is_linear() {
            Geometry::Linear(labels.iter().map(|&l| -sys.log_diameter(l).expect("label")).collect())
        } else if sys.head().iter().all(|b| matches!(b.kind, BranchKind::Analytic(Analytic::Mobius(_)))) {
            Geometry::Mobius(
                sys.head()
                    .iter()
                    .map(|b| match b.kind {
                        BranchKind::Analytic(Analytic::Mobius(m)) => m,
                        _ => unreachable!(),
                    })
                    .collect(),
            )
        } else {
            Geometry::Generic
        };
        let level1: Vec<Vec<f64>> = components
            .iter()
            .map(|c| labels.iter().map(|&l| c.symbol_value(l)).collect())
            .collect();
        let needs_cyclic: Vec<bool> = components.iter().map(|c| c.level() > 1).collect();
        let block = q.pow(n as u32 - 1);
        let k = components.len();

        let chunks: Vec<Result<(Vec<f64>, Vec<Vec<f64>>)>> = pool.install(|| {
            (0..q)
                .into_par_iter()
                .map(|first| {
                    let mut geo = Vec::with_capacity(block);
                    let mut obs = vec![Vec::with_capacity(block); k];
                    let mut pos = vec![0usize; n];
                    pos[0] = first;
                    let mut word_labels = vec![0u64; n];
                    // prefix stacks: entry j holds data for positions 0..=j
                    let mut lin_prefix = vec![0.0; n];
                    let mut mob_prefix = vec![ScaledMobius::identity(); n];
                    let mut obs_prefix = vec![vec![0.0; n]; k];
                    let mut from = 0;
                    loop {
                        for j in from..n {
                            word_labels[j] = labels[pos[j]];
                            match &geometry {
                                Geometry::Linear(g) => {
                                    lin_prefix[j] = if j == 0 { 0.0 } else { lin_prefix[j - 1] } + g[pos[j]];
                                }
                                Geometry::Mobius(ms) => {
                                    let prev = if j == 0 { ScaledMobius::identity() } else { mob_prefix[j - 1] };
                                    mob_prefix[j] = prev.then(&ms[pos[j]]);
                                }
                                Geometry::Generic => {}
                            }
                            for c in 0..k {
                                let prev = if j == 0 { 0.0 } else { obs_prefix[c][j - 1] };
                                obs_prefix[c][j] = prev + level1[c][pos[j]];
                            }
                        }
                        let g = match &geometry {
                            Geometry::Linear(_) => lin_prefix[n - 1],
                            Geometry::Mobius(_) => mob_prefix[n - 1].periodic_log_derivative(),
                            Geometry::Generic => sys.periodic_log_derivative(&Word::new(word_labels.clone())?)?,
                        };
                        geo.push(g);
                        for c in 0..k {
                            let v = if needs_cyclic[c] {
                                components[c].cyclic_sum(&word_labels)
                            } else {
                                obs_prefix[c][n - 1]
                            };
                            obs[c].push(v);
                        }
                        // odometer over positions 1..n
                        let mut j = n - 1;
                        loop {
                            if j == 0 {
                                return Ok((geo, obs));
                            }
                            pos[j] += 1;
                            if pos[j] < q {
                                break;
                            }
                            pos[j] = 0;
                            j -= 1;
                        }
                        from = j;
                    }
                })
                .collect()
        });
        let mut geo = Vec::with_capacity(q * block);
        let mut obs = vec![Vec::with_capacity(q * block); k];
        for chunk in chunks {
            let (g, o) = chunk?;
            geo.extend(g);
            for (dst, src) in obs.iter_mut().zip(o) {
                dst.extend(src);
            }
        }
        Ok(Self { q, n, geo, obs })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.geo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.geo.is_empty()
    }

    pub fn components(&self) -> usize {
        self.obs.len()
    }

    fn block(&self) -> usize {
        self.q.pow(self.n as u32 - 1)
    }

    #[inline]
    fn exponent(&self, i: usize, coefs: &[f64], geo_coef: f64) -> f64 {
        let mut e = geo_coef * self.geo[i];
        for (c, o) in coefs.iter().zip(&self.obs) {
            if *c != 0.0 {
                e += c * o[i];
            }
        }
        e
    }

    /// `ln Σ_w exp(Σ_k coefs_k S_n φ_k(w) + geo_coef · S_n ln|T'|(w))`.
    pub fn log_sum(&self, coefs: &[f64], geo_coef: f64, pool: &rayon::ThreadPool) -> f64 {
        let block = self.block();
        let parts: Vec<LogAcc> = pool.install(|| {
            (0..self.q)
                .into_par_iter()
                .map(|b| {
                    let mut acc = LogAcc::new();
                    for i in b * block..(b + 1) * block {
                        acc.add(self.exponent(i, coefs, geo_coef));
                    }
                    acc
                })
                .collect()
        });
        pairwise_merge(parts).value()
    }

    /// Log partition sum together with the Gibbs mean and variance of
    /// `S_n φ_k` and of `S_n ln|T'|` under the word weights.
    pub fn weighted_stats(&self, coefs: &[f64], geo_coef: f64, pool: &rayon::ThreadPool) -> WeightedStats {
        let log_z = self.log_sum(coefs, geo_coef, pool);
        let block = self.block();
        let k = self.obs.len();
        let parts: Vec<Vec<f64>> = pool.install(|| {
            (0..self.q)
                .into_par_iter()
                .map(|b| {
                    // [mean_k..., mean_geo, second moments k x k, cross with geo, geo^2]
                    let mut acc = vec![0.0; 2 * (k + 1) + k * k + k];
                    for i in b * block..(b + 1) * block {
                        let w = (self.exponent(i, coefs, geo_coef) - log_z).exp();
                        if w == 0.0 {
                            continue;
                        }
                        let g = self.geo[i];
                        for c in 0..k {
                            let o = self.obs[c][i];
                            acc[c] += w * o;
                            for d in 0..k {
                                acc[2 * (k + 1) + c * k + d] += w * o * self.obs[d][i];
                            }
                            acc[2 * (k + 1) + k * k + c] += w * o * g;
                        }
                        acc[k] += w * g;
                        acc[k + 1 + k] += w * g * g;
                    }
                    acc
                })
                .collect()
        });
        let total = pairwise_sum_vec(parts);
        let mean: Vec<f64> = total[..k].to_vec();
        let mean_geo = total[k];
        let second_geo = total[2 * k + 1];
        let cov: Vec<Vec<f64>> = (0..k)
            .map(|c| (0..k).map(|d| total[2 * (k + 1) + c * k + d] - mean[c] * mean[d]).collect())
            .collect();
        let cov_geo: Vec<f64> = (0..k).map(|c| total[2 * (k + 1) + k * k + c] - mean[c] * mean_geo).collect();
        WeightedStats {
            log_z,
            mean,
            mean_geo,
            cov,
            cov_geo,
            var_geo: second_geo - mean_geo * mean_geo,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightedStats {
    pub log_z: f64,
    pub mean: Vec<f64>,
    pub mean_geo: f64,
    pub cov: Vec<Vec<f64>>,
    pub cov_geo: Vec<f64>,
    pub var_geo: f64,
}

fn pairwise_sum_vec(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch_systems::Potential;

    fn pool(n: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let g = BranchSystem::gauss();
        let harmonic = Potential::harmonic();
        let table = WordTable::build(&g, 5, 3, &[harmonic.evaluator()], &pool(2)).unwrap();
        assert_eq!(table.len(), 125);
        let mut i = 0;
        for a in 1..=5u64 {
            for b in 1..=5u64 {
                for c in 1..=5u64 {
                    let w = Word::new(vec![a, b, c]).unwrap();
                    let geo = g.periodic_log_derivative(&w).unwrap();
                    assert!((table.geo[i] - geo).abs() < 1e-12);
                    let h = g.birkhoff_sum(&harmonic, &w).unwrap();
                    assert!((table.obs[0][i] - h).abs() < 1e-15);
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let g = BranchSystem::gauss();
        let t1 = WordTable::build(&g, 30, 3, &[Potential::harmonic().evaluator()], &pool(1)).unwrap();
        let t8 = WordTable::build(&g, 30, 3, &[Potential::harmonic().evaluator()], &pool(8)).unwrap();
        let a = t1.log_sum(&[0.3], -1.0, &pool(1));
        let b = t8.log_sum(&[0.3], -1.0, &pool(8));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
