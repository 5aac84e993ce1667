//! Policies, rollouts and the gradient-free trainer.

mod es;
mod policy;
mod rollout;

pub use es::{optimize, EsConfig, TrainReport};
pub use policy::{Activation, Arch, Controller, PolicyParams};
pub use rollout::{episode_config, estimate_return, rollout, rollout_with, RolloutOutcome};

use serde::{Deserialize, Serialize};

use crate::env::{ObjectSpec, PlanarSim};
use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Generation budget when training from scratch.
    pub budget: usize,
    /// Generation budget when warm-starting on a stepping stone.
    pub stone_budget: usize,
    pub window: usize,
    /// Relative convergence threshold δ.
    pub min_gain: f64,
    pub population: usize,
    pub parents: usize,
    pub sigma: f64,
    /// Episodes per fitness evaluation.
    pub fitness_episodes: usize,
    /// Episodes for the expected return used by the pool threshold.
    pub eval_episodes: usize,
    pub gamma: f64,
    pub hidden: usize,
    /// Fresh policies draw every parameter from `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            budget: 500,
            stone_budget: 500,
            window: 20,
            min_gain: 0.01,
            population: 32,
            parents: 8,
            sigma: 0.05,
            fitness_episodes: 8,
            eval_episodes: 32,
            gamma: 0.99,
            hidden: Arch::DEFAULT_HIDDEN,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn es(&self, budget: usize) -> EsConfig {
        EsConfig {
            population: self.population,
            parents: self.parents,
            sigma: self.sigma,
            budget,
            window: self.window,
            min_gain_rel: self.min_gain,
            ..EsConfig::default()
        }
    }

    pub fn arch(&self) -> Arch {
        Arch::for_env(self.hidden)
    }

    pub fn validate(&self) -> Result<()> {
        self.es(self.budget).validate()?;
        self.es(self.stone_budget).validate()?;
        if self.fitness_episodes == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("training episode counts must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trains a policy for the simulator's hand on `instances` with no
/// disturbance. `init = None` starts from a fresh random policy; otherwise the
/// search mean starts at `init`. Fitness episodes are fixed for the whole run.
pub fn train(
    sim: &PlanarSim,
    instances: &[ObjectSpec],
    init: Option<&PolicyParams>,
    es: &EsConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(PolicyParams, TrainReport)> {
    let arch = init.map_or_else(|| cfg.arch(), |p| p.arch);
    let start = match init {
        Some(p) => p.clone(),
        None => PolicyParams::random(arch, cfg.init_scale, seed::derive(seed, &[seed::tag::INIT_POLICY])),
    };
    let episode_seed = seed::derive(seed, &[seed::tag::TRAIN]);
    let fitness = |params: &[f64]| {
        let policy = PolicyParams { arch, params: params.to_vec() };
        estimate_return(&policy, sim, instances, cfg.fitness_episodes, 0.0, cfg.gamma, episode_seed)
    };
    let (params, report) = optimize(fitness, start.params, es, seed)?;
    Ok((PolicyParams { arch, params }, report))
}
