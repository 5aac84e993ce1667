//! Robustness metric: success rate under an unknown constant-direction
//! disturbance force, integrated over the force magnitude.
//!
//! For each object instance the success rate `S(F)` is measured on the grid
//! `F_k = k·F_max/K`, `k = 0..=K`, and the trapezoidal area under the curve is
//! divided by `F_max`, giving a value in `[0, 1]`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{ObjectSpec, PlanarSim};
use crate::learning::{rollout, Controller};
use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Grid intervals K.
    pub k: usize,
    /// Episodes per grid point.
    pub n: usize,
    /// N
    pub f_max: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { k: 10, n: 64, f_max: 1.0 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n == 0 {
            return Err(Error::Config("evaluation k and n must be >= 1".into()));
        }
        if !(self.f_max > 0.0 && self.f_max.is_finite()) {
            return Err(Error::Config(format!("f_max {} must be > 0", self.f_max)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceCurve {
    pub label: String,
    pub forces: Vec<f64>,
    pub success_rates: Vec<f64>,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Keyed by one-hot object index.
    pub per_instance: BTreeMap<usize, InstanceCurve>,
    pub aggregate_auc: f64,
    pub n_episodes_per_point: usize,
    pub seed: u64,
}

pub fn force_grid(k: usize, f_max: f64) -> Vec<f64> {
    (0..=k).map(|i| i as f64 * f_max / k as f64).collect()
}

/// Trapezoidal AUC of rates sampled on the uniform grid over `[0, F_max]`,
/// normalized by `F_max`.
pub fn auc_from_rates(rates: &[f64]) -> f64 {
    assert!(rates.len() >= 2, "need at least two grid points");
    let k = rates.len() - 1;
    let interior: f64 = rates[1..k].iter().sum();
    (interior + (rates[0] + rates[k]) / 2.0) / k as f64
}

fn episode_successes<C: Controller + ?Sized>(
    policy: &C,
    sim: &PlanarSim,
    instance: &ObjectSpec,
    force: f64,
    n: usize,
    seed: u64,
) -> Result<usize> {
    let hits = (0..n)
        .into_par_iter()
        .map(|e| {
            let cfg = sim.sample_episode(instance, force, seed::derive(seed, &[e as u64]))?;
            let gamma = 1.0;
            Ok(rollout(policy, sim, &cfg, gamma)?.success)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.into_iter().filter(|&h| h).count())
}

/// Fraction of `n` episodes that succeed with a disturbance of magnitude
/// `force`; each episode draws its own goal and force direction.
pub fn success_rate<C: Controller + ?Sized>(
    policy: &C,
    sim: &PlanarSim,
    instance: &ObjectSpec,
    force: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("success_rate needs n >= 1".into()));
    }
    if !(force >= 0.0) {
        return Err(Error::Config(format!("force {force} must be >= 0")));
    }
    Ok(episode_successes(policy, sim, instance, force, n, seed)? as f64 / n as f64)
}

/// Seed for grid cell `k` of an instance.
pub fn cell_seed(seed: u64, instance: &ObjectSpec, k: usize) -> u64 {
    seed::derive(seed, &[seed::tag::EVAL, instance.one_hot_index as u64, k as u64])
}

pub fn auc_metric<C: Controller + ?Sized>(
    policy: &C,
    sim: &PlanarSim,
    instance: &ObjectSpec,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<InstanceCurve> {
    cfg.validate()?;
    let forces = force_grid(cfg.k, cfg.f_max);
    let success_rates = forces
        .iter()
        .enumerate()
        .map(|(k, &f)| success_rate(policy, sim, instance, f, cfg.n, cell_seed(seed, instance, k)))
        .collect::<Result<Vec<f64>>>()?;
    let auc = auc_from_rates(&success_rates);
    Ok(InstanceCurve { label: instance.label(), forces, success_rates, auc })
}

pub fn evaluate_design<C: Controller + ?Sized>(
    policy: &C,
    sim: &PlanarSim,
    instances: &[ObjectSpec],
    cfg: &EvalConfig,
    seed: u64,
) -> Result<EvalReport> {
    if instances.is_empty() {
        return Err(Error::Config("evaluation needs at least one object instance".into()));
    }
    let mut per_instance = BTreeMap::new();
    for inst in instances {
        per_instance.insert(inst.one_hot_index, auc_metric(policy, sim, inst, cfg, seed)?);
    }
    let aggregate_auc = per_instance.values().map(|c| c.auc).sum::<f64>() / per_instance.len() as f64;
    Ok(EvalReport { per_instance, aggregate_auc, n_episodes_per_point: cfg.n, seed })
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// sequence is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub const CURVE_HEADER: [&str; 4] = ["design_id", "instance", "F", "success_rate"];
pub const AUC_HEADER: [&str; 3] = ["design_id", "instance", "auc"];

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

impl EvalReport {
    pub fn write_curve_csv<W: Write>(&self, design_id: &str, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(CURVE_HEADER)?;
        for c in self.per_instance.values() {
            for (f, r) in c.forces.iter().zip(&c.success_rates) {
                out.write_record([design_id, &c.label, &f.to_string(), &r.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_auc_csv<W: Write>(&self, design_id: &str, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(AUC_HEADER)?;
        for c in self.per_instance.values() {
            out.write_record([design_id, &c.label, &c.auc.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}
