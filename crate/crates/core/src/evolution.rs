//! Design and policy co-optimization.
//!
//! A pool of elite designs, each with an expert policy, is grown by proposing
//! candidates through crossover and mutation of two pool members. The policy
//! of the nearest pool member is carried to the candidate along a chain of
//! interpolated stepping stones, retraining briefly at each one. Stones whose
//! expected return beats the threshold `q` join the pool.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{clamp, crossover, interpolation_path, mutate, normalized_distance, DesignBounds, DesignParams};
use crate::env::{EnvParams, ObjectSpec, PlanarSim};
use crate::evaluation::{evaluate_design, EvalConfig};
use crate::learning::{estimate_return, train, PolicyParams, TrainConfig, TrainReport};
use crate::{seed, Error, Result};

/// A seed design given either by preset name (`"v3"`) or explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedDesign {
    Preset(String),
    Design(DesignParams),
}

impl SeedDesign {
    pub fn resolve(&self) -> Result<DesignParams> {
        match self {
            SeedDesign::Preset(name) => DesignParams::preset(name)
                .ok_or_else(|| Error::Config(format!("unknown design preset `{name}`"))),
            SeedDesign::Design(d) => Ok(*d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Admission threshold. When absent it is derived from the seeds.
    pub q: Option<f64>,
    /// Derived threshold as a fraction of the mean seed expected return.
    pub q_fraction: f64,
    /// Stepping-stone size ξ in normalized units.
    pub xi: f64,
    /// ε
    pub eps: f64,
    /// θ_M as a fraction of each dimension's span.
    pub mutation_fraction: f64,
    /// Outer iterations N.
    pub iterations: usize,
    pub seeds: Vec<SeedDesign>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            q: None,
            q_fraction: 0.6,
            xi: 0.1,
            eps: 1e-6,
            mutation_fraction: DesignBounds::DEFAULT_MUTATION_FRACTION,
            iterations: 10,
            seeds: vec![SeedDesign::Preset("v3".into()), SeedDesign::Preset("v5".into())],
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::Config(format!("xi {} must be > 0", self.xi)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::Config(format!("eps {} must be >= 0", self.eps)));
        }
        if !(self.mutation_fraction >= 0.0 && self.mutation_fraction.is_finite()) {
            return Err(Error::Config(format!("mutation_fraction {} must be >= 0", self.mutation_fraction)));
        }
        if self.seeds.len() < 2 {
            return Err(Error::Config(format!("need at least 2 seed designs, got {}", self.seeds.len())));
        }
        if self.q.is_some_and(f64::is_nan) {
            return Err(Error::Config("q must not be NaN".into()));
        }
        Ok(())
    }

    /// `q` if set, otherwise `q_fraction` of the mean seed return. For a
    /// negative mean the threshold sits the same distance below it.
    pub fn threshold(&self, seed_returns: &[f64]) -> f64 {
        if let Some(q) = self.q {
            return q;
        }
        let mean = seed_returns.iter().sum::<f64>() / seed_returns.len() as f64;
        mean - (1.0 - self.q_fraction) * mean.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lineage {
    pub parent_ids: Vec<String>,
    /// Pool entry whose policy was carried here.
    pub source_id: Option<String>,
    pub iteration: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    pub id: String,
    pub theta: DesignParams,
    pub policy: PolicyParams,
    pub expected_return: f64,
    pub auc: Option<f64>,
    pub lineage: Lineage,
    pub train_report: TrainReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pool {
    pub entries: Vec<PoolEntry>,
    pub q: f64,
}

impl Pool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PoolEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn best_return(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.expected_return).reduce(f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    CandidateProposed {
        iteration: usize,
        parent_ids: Vec<String>,
        theta: DesignParams,
        source_id: String,
        distance: f64,
        stones: usize,
    },
    StoneTrained {
        iteration: usize,
        id: String,
        stone: usize,
        theta: DesignParams,
        warm_from: String,
        generations_used: usize,
        converged: bool,
        expected_return: f64,
        q: f64,
    },
    StoneAdmitted {
        iteration: usize,
        id: String,
        expected_return: f64,
        auc: Option<f64>,
    },
    StoneRejected {
        iteration: usize,
        id: String,
        expected_return: f64,
        q: f64,
    },
}

/// Receives pool admissions and log events as they happen.
pub trait Recorder {
    fn entry(&mut self, entry: &PoolEntry) -> Result<()>;
    fn event(&mut self, event: &LogEvent) -> Result<()>;
}

/// Discards everything.
pub struct NullRecorder;

impl Recorder for NullRecorder {
    fn entry(&mut self, _: &PoolEntry) -> Result<()> {
        Ok(())
    }
    fn event(&mut self, _: &LogEvent) -> Result<()> {
        Ok(())
    }
}

/// Writes one JSON document per line and flushes after each.
pub struct JsonlRecorder<P: Write, L: Write> {
    pub pool: P,
    pub log: L,
}

fn write_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

impl<P: Write, L: Write> Recorder for JsonlRecorder<P, L> {
    fn entry(&mut self, entry: &PoolEntry) -> Result<()> {
        write_line(&mut self.pool, entry)
    }
    fn event(&mut self, event: &LogEvent) -> Result<()> {
        write_line(&mut self.log, event)
    }
}

pub fn read_pool<R: BufRead>(reader: R) -> Result<Vec<PoolEntry>> {
    read_jsonl(reader)
}

pub fn read_log<R: BufRead>(reader: R) -> Result<Vec<LogEvent>> {
    read_jsonl(reader)
}

fn read_jsonl<R: BufRead, T: serde::de::DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Produces expert policies and scores for designs.
pub trait DesignTrainer {
    /// Trains from scratch when `init` is `None`, otherwise warm-starts.
    fn train(&self, theta: &DesignParams, init: Option<&PolicyParams>, seed: u64)
        -> Result<(PolicyParams, TrainReport)>;

    fn expected_return(&self, theta: &DesignParams, policy: &PolicyParams, seed: u64) -> Result<f64>;

    /// Robustness score, if this trainer computes one.
    fn auc(&self, theta: &DesignParams, policy: &PolicyParams, seed: u64) -> Result<Option<f64>>;
}

/// Trains and scores designs in the simulator.
#[derive(Clone, Debug)]
pub struct SimTrainer {
    pub bounds: DesignBounds,
    pub env: EnvParams,
    pub instances: Vec<ObjectSpec>,
    pub train: TrainConfig,
    /// `None` skips the robustness evaluation.
    pub eval: Option<EvalConfig>,
}

impl SimTrainer {
    pub fn sim(&self, theta: &DesignParams) -> Result<PlanarSim> {
        PlanarSim::new(theta, &self.bounds, self.env.clone())
    }
}

impl DesignTrainer for SimTrainer {
    fn train(
        &self,
        theta: &DesignParams,
        init: Option<&PolicyParams>,
        seed: u64,
    ) -> Result<(PolicyParams, TrainReport)> {
        let sim = self.sim(theta)?;
        let budget = if init.is_some() { self.train.stone_budget } else { self.train.budget };
        train(&sim, &self.instances, init, &self.train.es(budget), &self.train, seed)
    }

    fn expected_return(&self, theta: &DesignParams, policy: &PolicyParams, seed: u64) -> Result<f64> {
        let sim = self.sim(theta)?;
        let n = self.train.eval_episodes;
        estimate_return(policy, &sim, &self.instances, n, 0.0, self.train.gamma, seed)
    }

    fn auc(&self, theta: &DesignParams, policy: &PolicyParams, seed: u64) -> Result<Option<f64>> {
        match &self.eval {
            None => Ok(None),
            Some(cfg) => {
                let sim = self.sim(theta)?;
                Ok(Some(evaluate_design(policy, &sim, &self.instances, cfg, seed)?.aggregate_auc))
            }
        }
    }
}

/// Crossover, mutation and clamping of two distinct pool members drawn
/// uniformly.
pub fn propose_candidate<R: Rng + ?Sized>(
    pool: &Pool,
    bounds: &DesignBounds,
    rng: &mut R,
) -> Result<(DesignParams, [String; 2])> {
    if pool.len() < 2 {
        return Err(Error::PoolTooSmall(pool.len()));
    }
    let pick = index::sample(rng, pool.len(), 2);
    let (a, b) = (&pool.entries[pick.index(0)], &pool.entries[pick.index(1)]);
    let child = crossover(&a.theta, &b.theta, rng);
    let child = clamp(&mutate(&child, bounds, rng), bounds);
    Ok((child, [a.id.clone(), b.id.clone()]))
}

/// Pool entry closest to `theta` in normalized space; ties go to the
/// smallest id.
pub fn nearest_source<'p>(pool: &'p Pool, theta: &DesignParams, bounds: &DesignBounds) -> Result<&'p PoolEntry> {
    pool.entries
        .iter()
        .map(|e| (normalized_distance(&e.theta, theta, bounds), e))
        .min_by(|(da, a), (db, b)| da.total_cmp(db).then_with(|| a.id.cmp(&b.id)))
        .map(|(_, e)| e)
        .ok_or(Error::EmptyPool)
}

/// A trained stepping stone.
#[derive(Clone, Debug, PartialEq)]
pub struct Stone {
    pub id: String,
    pub theta: DesignParams,
    pub policy: PolicyParams,
    pub train_report: TrainReport,
    pub expected_return: f64,
    pub admitted: bool,
}

pub fn seed_id(i: usize) -> String {
    format!("s{i:03}")
}

pub fn stone_id(iteration: usize, stone: usize) -> String {
    format!("it{iteration:03}-st{stone:02}")
}

/// Drives the co-optimization for one configuration.
pub struct CoOptimizer<'a, T: DesignTrainer> {
    pub config: &'a EvolutionConfig,
    pub bounds: &'a DesignBounds,
    pub trainer: &'a T,
    pub seed: u64,
}

impl<T: DesignTrainer> CoOptimizer<'_, T> {
    fn return_seed(&self) -> u64 {
        seed::derive(self.seed, &[seed::tag::EXPECTED_RETURN])
    }

    fn auc_seed(&self) -> u64 {
        seed::derive(self.seed, &[seed::tag::EVAL])
    }

    /// Trains every seed design from scratch and admits all of them.
    pub fn init_pool(&self, rec: &mut dyn Recorder) -> Result<Pool> {
        self.config.validate()?;
        let thetas = self
            .config
            .seeds
            .iter()
            .enumerate()
            .map(|(index, s)| {
                let theta = s.resolve()?;
                self.bounds
                    .check(&theta)
                    .map_err(|e| Error::SeedOutOfBounds { index, source: Box::new(e) })?;
                Ok(theta)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut entries = Vec::with_capacity(thetas.len());
        for (i, theta) in thetas.into_iter().enumerate() {
            let (policy, train_report) =
                self.trainer.train(&theta, None, seed::derive(self.seed, &[seed::tag::SEED_DESIGN, i as u64]))?;
            let expected_return = self.trainer.expected_return(&theta, &policy, self.return_seed())?;
            let auc = self.trainer.auc(&theta, &policy, self.auc_seed())?;
            let entry = PoolEntry {
                id: seed_id(i),
                theta,
                policy,
                expected_return,
                auc,
                lineage: Lineage { parent_ids: vec![], source_id: None, iteration: 0 },
                train_report,
            };
            rec.entry(&entry)?;
            entries.push(entry);
        }
        let returns: Vec<f64> = entries.iter().map(|e| e.expected_return).collect();
        let q = self.config.threshold(&returns);
        Ok(Pool { entries, q })
    }

    /// Walks from `source` to `target` in steps of ξ, warm-starting each
    /// stone from the previous one. Stones beating `pool.q` are admitted;
    /// rejected stones still seed the next stone's training.
    pub fn transfer_policy(
        &self,
        source: &PoolEntry,
        target: &DesignParams,
        iteration: usize,
        parent_ids: &[String],
        pool: &mut Pool,
        rec: &mut dyn Recorder,
    ) -> Result<Vec<Stone>> {
        if normalized_distance(&source.theta, target, self.bounds) == 0.0 {
            return Err(Error::ZeroDistance);
        }
        let path = interpolation_path(&source.theta, target, self.config.xi, self.config.eps, self.bounds)?;
        let mut prev_policy = source.policy.clone();
        let mut prev_id = source.id.clone();
        let mut lineage_source = source.id.clone();
        let mut stones = Vec::with_capacity(path.len());
        for (j, theta) in path.into_iter().enumerate() {
            let j = j + 1;
            let id = stone_id(iteration, j);
            let train_seed = seed::derive(self.seed, &[seed::tag::STONE, iteration as u64, j as u64]);
            let (policy, train_report) = self.trainer.train(&theta, Some(&prev_policy), train_seed)?;
            let expected_return = self.trainer.expected_return(&theta, &policy, self.return_seed())?;
            rec.event(&LogEvent::StoneTrained {
                iteration,
                id: id.clone(),
                stone: j,
                theta,
                warm_from: prev_id.clone(),
                generations_used: train_report.generations_used,
                converged: train_report.converged,
                expected_return,
                q: pool.q,
            })?;
            let admitted = expected_return > pool.q;
            if admitted {
                let auc = self.trainer.auc(&theta, &policy, self.auc_seed())?;
                let entry = PoolEntry {
                    id: id.clone(),
                    theta,
                    policy: policy.clone(),
                    expected_return,
                    auc,
                    lineage: Lineage {
                        parent_ids: parent_ids.to_vec(),
                        source_id: Some(lineage_source.clone()),
                        iteration,
                    },
                    train_report: train_report.clone(),
                };
                rec.entry(&entry)?;
                pool.entries.push(entry);
                rec.event(&LogEvent::StoneAdmitted { iteration, id: id.clone(), expected_return, auc })?;
                lineage_source = id.clone();
            } else {
                rec.event(&LogEvent::StoneRejected { iteration, id: id.clone(), expected_return, q: pool.q })?;
            }
            prev_policy = policy.clone();
            prev_id = id.clone();
            stones.push(Stone { id, theta, policy, train_report, expected_return, admitted });
        }
        Ok(stones)
    }

    /// One outer iteration: propose, pick the nearest source, transfer.
    pub fn iterate(&self, iteration: usize, pool: &mut Pool, rec: &mut dyn Recorder) -> Result<Vec<Stone>> {
        let mut rng = seed::rng_at(self.seed, &[seed::tag::ITERATION, iteration as u64]);
        let (candidate, parents) = propose_candidate(pool, self.bounds, &mut rng)?;
        let source = nearest_source(pool, &candidate, self.bounds)?.clone();
        let distance = normalized_distance(&source.theta, &candidate, self.bounds);
        let stones = if distance > self.config.eps {
            interpolation_path(&source.theta, &candidate, self.config.xi, self.config.eps, self.bounds)?.len()
        } else {
            0
        };
        rec.event(&LogEvent::CandidateProposed {
            iteration,
            parent_ids: parents.to_vec(),
            theta: candidate,
            source_id: source.id.clone(),
            distance,
            stones,
        })?;
        if stones == 0 {
            return Ok(Vec::new());
        }
        self.transfer_policy(&source, &candidate, iteration, &parents, pool, rec)
    }

    pub fn run(&self, rec: &mut dyn Recorder) -> Result<Pool> {
        let mut pool = self.init_pool(rec)?;
        for it in 1..=self.config.iterations {
            self.iterate(it, &mut pool, rec)?;
        }
        Ok(pool)
    }
}

/// Runs the full co-optimization and records every admission and event.
pub fn co_optimize<T: DesignTrainer>(
    config: &EvolutionConfig,
    bounds: &DesignBounds,
    trainer: &T,
    seed: u64,
    rec: &mut dyn Recorder,
) -> Result<Pool> {
    CoOptimizer { config, bounds, trainer, seed }.run(rec)
}
