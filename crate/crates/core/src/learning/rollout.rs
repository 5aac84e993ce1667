use rayon::prelude::*;

use super::policy::Controller;
use crate::env::{EpisodeConfig, ObjectSpec, PlanarSim, TrajectoryRow};
use crate::{seed, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RolloutOutcome {
    /// Discounted return `Σ γ^t R(s_t, a_t)`.
    pub ret: f64,
    pub success: bool,
    /// Steps taken; the episode stops early on success.
    pub steps: usize,
}

/// Runs one episode. The reward for step `t` is evaluated on the state the
/// action leads to.
pub fn rollout<C: Controller + ?Sized>(
    policy: &C,
    sim: &PlanarSim,
    config: &EpisodeConfig,
    gamma: f64,
) -> Result<RolloutOutcome> {
    rollout_with(policy, sim, config, gamma, |_| {})
}

/// [`rollout`] that also reports every step.
pub fn rollout_with<C: Controller + ?Sized>(
    policy: &C,
    sim: &PlanarSim,
    config: &EpisodeConfig,
    gamma: f64,
    mut on_step: impl FnMut(TrajectoryRow),
) -> Result<RolloutOutcome> {
    let mut state = sim.reset(config)?;
    let mut ret = 0.0;
    let mut discount = 1.0;
    let mut success = false;
    let mut steps = 0;
    for t in 0..config.horizon {
        let obs = sim.observe(&state, config);
        let action = policy.act(&obs);
        state = sim.step(&state, &action, config)?;
        let r = sim.reward(&state, &action, config);
        ret += discount * r;
        discount *= gamma;
        steps = t + 1;
        on_step(TrajectoryRow::from_state(t, &state, r));
        if sim.succeeded(&state, config) {
            success = true;
            break;
        }
    }
    Ok(RolloutOutcome { ret, success, steps })
}

/// Episode `e` of a seeded batch: instance `e mod len`, fresh goal and force
/// direction from `derive(seed, e)`.
pub fn episode_config(
    sim: &PlanarSim,
    instances: &[ObjectSpec],
    force: f64,
    seed: u64,
    episode: usize,
) -> Result<EpisodeConfig> {
    let object = &instances[episode % instances.len()];
    sim.sample_episode(object, force, seed::derive(seed, &[episode as u64]))
}

/// Mean return over `n_episodes` episodes at disturbance magnitude `force`.
pub fn estimate_return<C: Controller + ?Sized>(
    policy: &C,
    sim: &PlanarSim,
    instances: &[ObjectSpec],
    n_episodes: usize,
    force: f64,
    gamma: f64,
    seed: u64,
) -> Result<f64> {
    assert!(n_episodes >= 1, "n_episodes must be >= 1");
    assert!(!instances.is_empty(), "need at least one object instance");
    let returns = (0..n_episodes)
        .into_par_iter()
        .map(|e| {
            let cfg = episode_config(sim, instances, force, seed, e)?;
            Ok(rollout(policy, sim, &cfg, gamma)?.ret)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(returns.iter().sum::<f64>() / n_episodes as f64)
}
