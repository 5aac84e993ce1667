//! (μ, λ) evolution strategy with antithetic sampling and rank-weighted
//! recombination.
//!
//! Each generation draws `λ/2` Gaussian directions, evaluates the mean plus
//! and minus `σ` times each, and moves the mean to the weighted average of the
//! best `μ` samples. The best parameters ever evaluated are kept, so the
//! returned curve is non-decreasing.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsConfig {
    /// λ, must be even.
    pub population: usize,
    /// μ
    pub parents: usize,
    pub sigma: f64,
    /// Maximum generations.
    pub budget: usize,
    /// Convergence window W.
    pub window: usize,
    /// δ as a fraction of the current best return's magnitude.
    pub min_gain_rel: f64,
    /// Absolute floor added to δ.
    pub min_gain_abs: f64,
    /// Stop as soon as the best return reaches this value.
    pub target_return: Option<f64>,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            population: 32,
            parents: 8,
            sigma: 0.05,
            budget: 500,
            window: 20,
            min_gain_rel: 0.01,
            min_gain_abs: 1e-9,
            target_return: None,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return Err(Error::Config(format!("population {} must be even and >= 2", self.population)));
        }
        if self.parents == 0 || self.parents > self.population {
            return Err(Error::Config(format!("parents {} must be in 1..=population", self.parents)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma {} must be > 0", self.sigma)));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        Ok(())
    }

    fn recombination_weights(&self) -> Vec<f64> {
        let mu = self.parents as f64;
        let raw: Vec<f64> = (0..self.parents).map(|i| (mu + 0.5).ln() - ((i + 1) as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub generations_used: usize,
    /// Best return seen after each generation.
    pub best_return_curve: Vec<f64>,
    pub converged: bool,
    pub final_expected_return: f64,
}

fn better(a: f64, b: f64) -> bool {
    // NaN never wins.
    a > b || (b.is_nan() && !a.is_nan())
}

/// Maximizes `fitness` starting from `init`. Fitness values within a
/// generation are computed in parallel and reduced in index order, so the
/// result does not depend on the worker count.
pub fn optimize<F>(fitness: F, init: Vec<f64>, cfg: &EsConfig, seed: u64) -> Result<(Vec<f64>, TrainReport)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let dim = init.len();
    let weights = cfg.recombination_weights();
    let mut mean = init;
    let initial = fitness(&mean)?;
    let mut best = initial;
    let mut best_params = mean.clone();
    let mut curve: Vec<f64> = Vec::with_capacity(cfg.budget);
    let mut converged = false;

    for gen in 1..=cfg.budget {
        if cfg.target_return.is_some_and(|t| best >= t) {
            break;
        }
        let mut rng = seed::rng_at(seed, &[seed::tag::ES, gen as u64]);
        let half = cfg.population / 2;
        let noise: Vec<Vec<f64>> = (0..half)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let candidates: Vec<Vec<f64>> = noise
            .iter()
            .flat_map(|eps| {
                let plus = mean.iter().zip(eps).map(|(m, e)| m + cfg.sigma * e).collect();
                let minus = mean.iter().zip(eps).map(|(m, e)| m - cfg.sigma * e).collect();
                [plus, minus]
            })
            .collect();
        let scores = candidates
            .par_iter()
            .map(|c| fitness(c))
            .collect::<Result<Vec<f64>>>()?;

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| {
            let (sa, sb) = (scores[a], scores[b]);
            sb.partial_cmp(&sa)
                .unwrap_or_else(|| sa.is_nan().cmp(&sb.is_nan()))
                .then(a.cmp(&b))
        });
        for &i in &order {
            if better(scores[i], best) {
                best = scores[i];
                best_params = candidates[i].clone();
            }
        }
        let mut next = vec![0.0; dim];
        for (w, &i) in weights.iter().zip(&order) {
            for (n, c) in next.iter_mut().zip(&candidates[i]) {
                *n += w * c;
            }
        }
        mean = next;
        let mean_score = fitness(&mean)?;
        if better(mean_score, best) {
            best = mean_score;
            best_params = mean.clone();
        }
        curve.push(best);

        if gen >= cfg.window {
            let reference = if gen == cfg.window { initial } else { curve[gen - cfg.window - 1] };
            let gain = best - reference;
            if gain <= cfg.min_gain_rel * best.abs() + cfg.min_gain_abs {
                converged = true;
                break;
            }
        }
    }

    let report = TrainReport {
        generations_used: curve.len(),
        best_return_curve: curve,
        converged,
        final_expected_return: best,
    };
    Ok((best_params, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(target: Vec<f64>) -> impl Fn(&[f64]) -> Result<f64> + Sync {
        move |p: &[f64]| Ok(-p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    #[test]
    fn budget_one_runs_one_generation() {
        let cfg = EsConfig { budget: 1, ..EsConfig::default() };
        let (_, rep) = optimize(quadratic(vec![1.0; 4]), vec![0.0; 4], &cfg, 1).unwrap();
        assert_eq!(rep.generations_used, 1);
        assert_eq!(rep.best_return_curve.len(), 1);
    }

    #[test]
    fn curve_is_non_decreasing_and_reproducible() {
        let cfg = EsConfig { budget: 60, ..EsConfig::default() };
        let f = quadratic((0..10).map(|i| i as f64 / 10.0).collect());
        let (p1, r1) = optimize(&f, vec![0.0; 10], &cfg, 5).unwrap();
        let (p2, r2) = optimize(&f, vec![0.0; 10], &cfg, 5).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r1, r2);
        assert!(r1.best_return_curve.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r1.final_expected_return, *r1.best_return_curve.last().unwrap());
    }

    #[test]
    fn warm_start_at_optimum_converges_within_window() {
        let target: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let cfg = EsConfig::default();
        let (p, rep) = optimize(quadratic(target.clone()), target.clone(), &cfg, 2).unwrap();
        assert!(rep.converged);
        assert!(rep.generations_used <= cfg.window);
        assert_eq!(p, target);
        assert_eq!(rep.final_expected_return, 0.0);
    }

    #[test]
    fn target_return_stops_early() {
        let cfg = EsConfig { target_return: Some(-1.0), ..EsConfig::default() };
        let (_, rep) = optimize(quadratic(vec![1.0; 8]), vec![0.0; 8], &cfg, 3).unwrap();
        assert!(rep.final_expected_return >= -1.0);
        assert!(rep.generations_used < 100);
        // Already above target: no generation is run.
        let cfg = EsConfig { target_return: Some(-100.0), ..EsConfig::default() };
        let (_, rep) = optimize(quadratic(vec![1.0; 8]), vec![0.0; 8], &cfg, 3).unwrap();
        assert_eq!(rep.generations_used, 0);
    }

    #[test]
    fn quadratic_in_sixteen_dims_reaches_optimum() {
        let target: Vec<f64> = (0..16).map(|i| (i as f64 * 0.71).cos()).collect();
        let cfg = EsConfig { budget: 200, window: 200, ..EsConfig::default() };
        let (_, rep) = optimize(quadratic(target), vec![0.0; 16], &cfg, 11).unwrap();
        assert!(rep.generations_used <= 200);
        assert!(rep.final_expected_return >= -1e-2, "{}", rep.final_expected_return);
    }

    #[test]
    fn invalid_configs() {
        let f = quadratic(vec![0.0]);
        for cfg in [
            EsConfig { population: 31, ..EsConfig::default() },
            EsConfig { parents: 0, ..EsConfig::default() },
            EsConfig { budget: 0, ..EsConfig::default() },
            EsConfig { sigma: 0.0, ..EsConfig::default() },
        ] {
            assert!(optimize(&f, vec![0.0], &cfg, 0).is_err());
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn best_curve_never_decreases(seed in proptest::prelude::any::<u64>(), dim in 1usize..12) {
            let cfg = EsConfig { budget: 15, ..EsConfig::default() };
            let target: Vec<f64> = (0..dim).map(|i| i as f64 - 3.0).collect();
            let (_, r) = optimize(quadratic(target), vec![0.0; dim], &cfg, seed).unwrap();
            proptest::prop_assert!(r.best_return_curve.windows(2).all(|w| w[1] >= w[0]));
            proptest::prop_assert!(r.generations_used <= cfg.budget);
        }
    }
}
