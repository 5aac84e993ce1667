//! File-level workflows behind the command-line tool.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::design::DesignParams;
use crate::env::{ObjectSpec, TrajectoryWriter};
use crate::evaluation::{evaluate_design, EvalReport};
use crate::evolution::{co_optimize, read_pool, DesignTrainer, JsonlRecorder, Pool, PoolEntry, SimTrainer};
use crate::learning::{rollout_with, PolicyParams, RolloutOutcome, TrainReport};
use crate::{seed, Error, Result};

pub const POOL_FILE: &str = "pool.jsonl";
pub const LOG_FILE: &str = "log.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_HEADER: [&str; 4] = ["id", "auc", "expected_return", "iteration"];

/// Runs `f` on a thread pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

pub fn sim_trainer(cfg: &RunConfig) -> Result<SimTrainer> {
    Ok(SimTrainer {
        bounds: cfg.design_bounds()?,
        env: cfg.env.clone(),
        instances: cfg.object_instances()?,
        train: cfg.training.clone(),
        eval: cfg.auc_on_admit.then(|| cfg.evaluation.clone()),
    })
}

/// Seed used for robustness evaluation under master seed `seed`.
pub fn eval_seed(seed: u64) -> u64 {
    seed::derive(seed, &[seed::tag::EVAL])
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs the co-optimization, writing the resolved config, the pool, the
/// event log and a summary into `cfg.output_dir`. The summary is written from
/// whatever reached the pool file, also when the run fails.
pub fn evolve(cfg: &RunConfig) -> Result<Pool> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let mut conf = create(&dir.join(CONFIG_FILE))?;
    serde_json::to_writer_pretty(&mut conf, cfg)?;
    conf.write_all(b"\n")?;
    conf.flush()?;

    let bounds = cfg.design_bounds()?;
    let trainer = sim_trainer(cfg)?;
    let mut rec = JsonlRecorder { pool: create(&dir.join(POOL_FILE))?, log: create(&dir.join(LOG_FILE))? };
    let result = co_optimize(&cfg.evolution, &bounds, &trainer, cfg.seed, &mut rec);
    drop(rec);
    let entries = load_pool(&dir.join(POOL_FILE))?;
    write_summary(&entries, create(&dir.join(SUMMARY_FILE))?)?;
    result
}

pub fn load_pool(path: &Path) -> Result<Vec<PoolEntry>> {
    let f = File::open(path).map_err(|e| Error::Config(format!("cannot open pool {}: {e}", path.display())))?;
    read_pool(BufReader::new(f))
}

pub fn find_entry<'a>(entries: &'a [PoolEntry], id: &str) -> Result<&'a PoolEntry> {
    entries.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownId(id.to_string()))
}

pub fn write_summary<W: Write>(entries: &[PoolEntry], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for e in entries {
        let auc = e.auc.map(|a| a.to_string()).unwrap_or_default();
        out.write_record([e.id.clone(), auc, e.expected_return.to_string(), e.lineage.iteration.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainOutput {
    pub theta: DesignParams,
    pub policy: PolicyParams,
    pub train_report: TrainReport,
    pub expected_return: f64,
}

/// Trains one design from scratch and writes `policy.json` and
/// `train_report.json` into `out_dir`.
pub fn train_design(cfg: &RunConfig, theta: &DesignParams, out_dir: &Path) -> Result<TrainOutput> {
    cfg.design_bounds()?.check(theta)?;
    let trainer = sim_trainer(cfg)?;
    let seed = seed::derive(cfg.seed, &[seed::tag::SEED_DESIGN, 0]);
    let (policy, train_report) = trainer.train(theta, None, seed)?;
    let expected_return =
        trainer.expected_return(theta, &policy, seed::derive(cfg.seed, &[seed::tag::EXPECTED_RETURN]))?;
    fs::create_dir_all(out_dir)?;
    let mut w = create(&out_dir.join("policy.json"))?;
    serde_json::to_writer(&mut w, &policy)?;
    w.write_all(b"\n")?;
    w.flush()?;
    let mut w = create(&out_dir.join("train_report.json"))?;
    serde_json::to_writer_pretty(&mut w, &train_report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(TrainOutput { theta: *theta, policy, train_report, expected_return })
}

/// Paths written by [`eval_entry`].
pub fn eval_paths(out_dir: &Path, id: &str) -> [PathBuf; 3] {
    [
        out_dir.join(format!("eval_{id}_curve.csv")),
        out_dir.join(format!("eval_{id}_auc.csv")),
        out_dir.join(format!("eval_{id}.json")),
    ]
}

/// Robustness report for one pool entry, written as curve CSV, AUC CSV and
/// JSON.
pub fn eval_entry(cfg: &RunConfig, entry: &PoolEntry, instances: &[ObjectSpec], out_dir: &Path) -> Result<EvalReport> {
    let sim = sim_trainer(cfg)?.sim(&entry.theta)?;
    let report = evaluate_design(&entry.policy, &sim, instances, &cfg.evaluation, eval_seed(cfg.seed))?;
    fs::create_dir_all(out_dir)?;
    let [curve, auc, json] = eval_paths(out_dir, &entry.id);
    report.write_curve_csv(&entry.id, create(&curve)?)?;
    report.write_auc_csv(&entry.id, create(&auc)?)?;
    let mut w = create(&json)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub id: String,
    pub auc: f64,
    pub expected_return: f64,
    /// The AUC was not stored and had to be evaluated.
    pub computed: bool,
}

/// Entries by aggregate AUC, best first, ties by id. Missing AUCs are
/// evaluated with the config's instances and evaluation settings.
pub fn rank(cfg: &RunConfig, entries: &[PoolEntry]) -> Result<Vec<RankRow>> {
    if entries.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut rows = Vec::with_capacity(entries.len());
    let mut trainer = None;
    for e in entries {
        let (auc, computed) = match e.auc {
            Some(a) => (a, false),
            None => {
                let t = match &mut trainer {
                    Some(t) => t,
                    None => trainer.insert(sim_trainer(cfg)?),
                };
                let sim = t.sim(&e.theta)?;
                let rep = evaluate_design(&e.policy, &sim, &t.instances, &cfg.evaluation, eval_seed(cfg.seed))?;
                (rep.aggregate_auc, true)
            }
        };
        rows.push(RankRow { id: e.id.clone(), auc, expected_return: e.expected_return, computed });
    }
    rows.sort_by(|a, b| b.auc.total_cmp(&a.auc).then_with(|| a.id.cmp(&b.id)));
    Ok(rows)
}

/// Replays one episode of `entry` on `instance` and writes its trajectory.
pub fn replay<W: Write>(
    cfg: &RunConfig,
    entry: &PoolEntry,
    instance: &ObjectSpec,
    episode_seed: u64,
    force: f64,
    w: W,
) -> Result<RolloutOutcome> {
    let sim = sim_trainer(cfg)?.sim(&entry.theta)?;
    let episode = sim.sample_episode(instance, force, episode_seed)?;
    let mut writer = TrajectoryWriter::new(w)?;
    let mut write_err = None;
    let outcome = rollout_with(&entry.policy, &sim, &episode, cfg.training.gamma, |row| {
        if write_err.is_none() {
            write_err = writer.write(&row).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    writer.finish()?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Lineage;
    use crate::learning::Arch;

    fn entry(id: &str, auc: Option<f64>) -> PoolEntry {
        PoolEntry {
            id: id.into(),
            theta: DesignParams::v3(),
            policy: PolicyParams::zeros(Arch::default()),
            expected_return: 1.0,
            auc,
            lineage: Lineage { parent_ids: vec![], source_id: None, iteration: 0 },
            train_report: TrainReport {
                generations_used: 0,
                best_return_curve: vec![],
                converged: false,
                final_expected_return: 0.0,
            },
        }
    }

    fn small_cfg() -> RunConfig {
        RunConfig::load(None, &["instances=sphere@1.0".into(), "evaluation.n=4".into(), "evaluation.k=2".into()])
            .unwrap()
    }

    #[test]
    fn rank_orders_by_auc_then_id() {
        let cfg = small_cfg();
        let rows = rank(&cfg, &[entry("A", Some(0.5)), entry("B", Some(0.7)), entry("C", Some(0.5))]).unwrap();
        let ids: Vec<&str> = rows.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["B", "A", "C"]);
        assert!(matches!(rank(&cfg, &[]), Err(Error::EmptyPool)));
    }

    #[test]
    fn rank_fills_missing_auc() {
        let cfg = small_cfg();
        let rows = rank(&cfg, &[entry("A", None), entry("B", Some(0.25))]).unwrap();
        let a = rows.iter().find(|r| r.id == "A").unwrap();
        assert!(a.computed);
        // A zero policy never succeeds.
        assert_eq!(a.auc, 0.0);
        assert_eq!(rows[0].id, "B");
    }

    #[test]
    fn summary_and_lookup() {
        let entries = [entry("s000", Some(0.5)), entry("s001", None)];
        let mut buf = Vec::new();
        write_summary(&entries, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id,auc,expected_return,iteration\ns000,0.5,1,0\ns001,,1,0\n"
        );
        assert!(find_entry(&entries, "s001").is_ok());
        assert!(matches!(find_entry(&entries, "x"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn replay_rows_match_steps() {
        let cfg = small_cfg();
        let inst = cfg.object_instances().unwrap().remove(0);
        let e = entry("s000", None);
        let mut a = Vec::new();
        let out = replay(&cfg, &e, &inst, 5, 0.0, &mut a).unwrap();
        let mut b = Vec::new();
        replay(&cfg, &e, &inst, 5, 0.0, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), out.steps + 1);
        assert_eq!(text.lines().next().unwrap(), crate::env::TRAJECTORY_HEADER);
    }
}
