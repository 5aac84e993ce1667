//! Run configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::design::{DesignBounds, DESIGN_DIM};
use crate::env::{parse_instances, EnvParams, ObjectSpec};
use crate::evaluation::EvalConfig;
use crate::evolution::EvolutionConfig;
use crate::learning::TrainConfig;
use crate::{Error, Result};

pub const WORKERS_ENV: &str = "HANDOPT_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub lower: [f64; DESIGN_DIM],
    pub upper: [f64; DESIGN_DIM],
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { lower: DesignBounds::TABLE_LOWER, upper: DesignBounds::TABLE_UPPER }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bounds: BoundsConfig,
    pub evolution: EvolutionConfig,
    pub training: TrainConfig,
    pub env: EnvParams,
    pub evaluation: EvalConfig,
    /// Object instances used for training and evaluation: `all` or a
    /// comma-separated list such as `sphere@1.0,board@1.0`.
    pub instances: String,
    /// Compute the robustness AUC for every admitted design.
    pub auc_on_admit: bool,
    pub seed: u64,
    /// Worker threads; absent means one per available core.
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            bounds: BoundsConfig::default(),
            evolution: EvolutionConfig::default(),
            training: TrainConfig::default(),
            env: EnvParams::default(),
            evaluation: EvalConfig::default(),
            instances: "all".into(),
            auc_on_admit: true,
            seed: 0,
            workers: None,
            output_dir: PathBuf::from("handopt-out"),
        }
    }
}

impl RunConfig {
    /// Reads `path` (or starts from an empty document), applies `key=value`
    /// overrides and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.design_bounds()?;
        self.evolution.validate()?;
        self.training.validate()?;
        self.env.validate()?;
        self.evaluation.validate()?;
        self.object_instances()?;
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn design_bounds(&self) -> Result<DesignBounds> {
        DesignBounds::with_mutation_fraction(self.bounds.lower, self.bounds.upper, self.evolution.mutation_fraction)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn object_instances(&self) -> Result<Vec<ObjectSpec>> {
        parse_instances(&self.instances, &self.env.objects).map_err(|e| Error::Config(e.to_string()))
    }

    /// `HANDOPT_WORKERS`, then the config value, then the core count.
    pub fn resolve_workers(&self) -> Result<usize> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return match v.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(Error::Config(format!("{WORKERS_ENV}={v} is not a positive integer"))),
            };
        }
        Ok(self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}

/// Sets a dotted key (`training.budget=50`). The value is parsed as JSON and
/// taken as a plain string if that fails.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}` descends into a non-object")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::Config(format!("override `{key}` descends into a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
