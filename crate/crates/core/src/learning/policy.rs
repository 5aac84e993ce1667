//! Two-layer tanh MLP policy stored as a flat parameter vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ACTION_DIM, OBS_DIM};
use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arch {
    pub obs_dim: usize,
    pub hidden: usize,
    pub action_dim: usize,
    pub activation: Activation,
}

impl Arch {
    pub const DEFAULT_HIDDEN: usize = 32;

    pub fn for_env(hidden: usize) -> Self {
        Self { obs_dim: OBS_DIM, hidden, action_dim: ACTION_DIM, activation: Activation::Tanh }
    }

    /// `(obs·hidden + hidden) + (hidden·action + action)`.
    pub fn param_count(&self) -> usize {
        self.obs_dim * self.hidden + self.hidden + self.hidden * self.action_dim + self.action_dim
    }
}

impl Default for Arch {
    fn default() -> Self {
        Self::for_env(Self::DEFAULT_HIDDEN)
    }
}

/// Anything that maps an observation to an action in `[-1, 1]^8`.
pub trait Controller: Sync {
    fn act(&self, obs: &[f64; OBS_DIM]) -> [f64; ACTION_DIM];
}

impl<F> Controller for F
where
    F: Fn(&[f64; OBS_DIM]) -> [f64; ACTION_DIM] + Sync,
{
    fn act(&self, obs: &[f64; OBS_DIM]) -> [f64; ACTION_DIM] {
        self(obs)
    }
}

/// Layout: `W1` (hidden × obs, row-major), `b1`, `W2` (action × hidden), `b2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyParams {
    pub arch: Arch,
    pub params: Vec<f64>,
}

impl PolicyParams {
    pub fn new(arch: Arch, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::Config(format!(
                "policy has {} parameters, architecture needs {}",
                params.len(),
                arch.param_count()
            )));
        }
        Ok(Self { arch, params })
    }

    pub fn zeros(arch: Arch) -> Self {
        Self { arch, params: vec![0.0; arch.param_count()] }
    }

    /// Every parameter uniform in `[-scale, scale]`.
    pub fn random(arch: Arch, scale: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let params = (0..arch.param_count())
            .map(|_| if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 })
            .collect();
        Self { arch, params }
    }

    /// `tanh(W2 · tanh(W1 · obs + b1) + b2)`.
    pub fn forward(&self, obs: &[f64], out: &mut [f64]) {
        let Arch { obs_dim, hidden, action_dim, .. } = self.arch;
        debug_assert_eq!(obs.len(), obs_dim);
        debug_assert_eq!(out.len(), action_dim);
        let (w1, rest) = self.params.split_at(obs_dim * hidden);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, b2) = rest.split_at(hidden * action_dim);
        let mut h = vec![0.0; hidden];
        for (i, hi) in h.iter_mut().enumerate() {
            let row = &w1[i * obs_dim..(i + 1) * obs_dim];
            let s: f64 = row.iter().zip(obs).map(|(w, x)| w * x).sum();
            *hi = (s + b1[i]).tanh();
        }
        for (k, ok) in out.iter_mut().enumerate() {
            let row = &w2[k * hidden..(k + 1) * hidden];
            let s: f64 = row.iter().zip(&h).map(|(w, x)| w * x).sum();
            *ok = (s + b2[k]).tanh();
        }
    }
}

impl Controller for PolicyParams {
    fn act(&self, obs: &[f64; OBS_DIM]) -> [f64; ACTION_DIM] {
        assert_eq!(self.arch.obs_dim, OBS_DIM, "policy observation size mismatch");
        assert_eq!(self.arch.action_dim, ACTION_DIM, "policy action size mismatch");
        let mut out = [0.0; ACTION_DIM];
        self.forward(obs, &mut out);
        out
    }
}
