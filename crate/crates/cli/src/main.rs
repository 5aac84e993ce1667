//! `handopt`: co-optimize planar hand designs and their control policies.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use handopt::config::RunConfig;
use handopt::design::DesignParams;
use handopt::env::parse_instances;
use handopt::{runner, Error, Result};

#[derive(Parser)]
#[command(name = "handopt", version, about = "Design and policy co-optimization for planar hands")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set training.budget=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the co-optimization and write pool.jsonl, log.jsonl and summary.csv.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Outer iterations.
        #[arg(long)]
        iters: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one design from scratch.
    Train {
        #[command(flatten)]
        common: Common,
        /// Preset name (v3, v5, v6, v7) or a JSON design file.
        #[arg(long)]
        design: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Robustness report for one pool entry.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        id: String,
        /// `all` or e.g. `sphere@1.0,board@1.0`; defaults to the config's instances.
        #[arg(long)]
        instances: Option<String>,
        /// Defaults to the pool file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print pool entries by aggregate AUC, best first.
    Rank {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        top: Option<usize>,
    },
    /// Write the trajectory of one episode as CSV.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        instance: String,
        /// Episode seed.
        #[arg(long)]
        episode: u64,
        /// Disturbance magnitude, N.
        #[arg(long, default_value_t = 0.0)]
        force: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the pool summary, optionally also writing it to a file.
    Report {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common, extra: &[(&str, serde_json::Value)]) -> Result<RunConfig> {
    let mut overrides = common.overrides.clone();
    let mut push = |key: &str, v: serde_json::Value| overrides.push(format!("{key}={v}"));
    if let Some(s) = common.seed {
        push("seed", s.into());
    }
    if let Some(w) = common.workers {
        push("workers", w.into());
    }
    for (k, v) in extra {
        push(k, v.clone());
    }
    RunConfig::load(common.config.as_deref(), &overrides)
}

fn path_value(p: &Path) -> serde_json::Value {
    serde_json::Value::String(p.to_string_lossy().into_owned())
}

fn load_design(spec: &str) -> Result<DesignParams> {
    if let Some(d) = DesignParams::preset(spec) {
        return Ok(d);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Config(format!("`{spec}` is neither a preset nor a readable file: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { common, iters, out } => {
            let mut extra = Vec::new();
            if let Some(n) = iters {
                extra.push(("evolution.iterations", n.into()));
            }
            if let Some(o) = &out {
                extra.push(("output_dir", path_value(o)));
            }
            let cfg = load_config(&common, &extra)?;
            let pool = runner::with_workers(cfg.resolve_workers()?, || runner::evolve(&cfg))??;
            println!(
                "pool: {} entries, threshold q = {}, written to {}",
                pool.len(),
                pool.q,
                cfg.output_dir.display()
            );
        }
        Command::Train { common, design, out } => {
            let cfg = load_config(&common, &[])?;
            let theta = load_design(&design)?;
            let res = runner::with_workers(cfg.resolve_workers()?, || runner::train_design(&cfg, &theta, &out))??;
            println!(
                "trained in {} generations, expected return {}",
                res.train_report.generations_used, res.expected_return
            );
        }
        Command::Eval { common, pool, id, instances, out } => {
            let cfg = load_config(&common, &[])?;
            let entries = runner::load_pool(&pool)?;
            let entry = runner::find_entry(&entries, &id)?;
            let objs = match instances {
                Some(s) => parse_instances(&s, &cfg.env.objects)?,
                None => cfg.object_instances()?,
            };
            let out = out.unwrap_or_else(|| pool.parent().map(Path::to_path_buf).unwrap_or_default());
            let rep = runner::with_workers(cfg.resolve_workers()?, || runner::eval_entry(&cfg, entry, &objs, &out))??;
            for c in rep.per_instance.values() {
                println!("{}\t{:.4}", c.label, c.auc);
            }
            println!("aggregate\t{:.4}", rep.aggregate_auc);
        }
        Command::Rank { common, pool, top } => {
            let cfg = load_config(&common, &[])?;
            let entries = runner::load_pool(&pool)?;
            let rows = runner::with_workers(cfg.resolve_workers()?, || runner::rank(&cfg, &entries))??;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "rank,id,auc,expected_return")?;
            for (i, r) in rows.iter().take(top.unwrap_or(usize::MAX)).enumerate() {
                writeln!(stdout, "{},{},{},{}", i + 1, r.id, r.auc, r.expected_return)?;
            }
        }
        Command::Replay { common, pool, id, instance, episode, force, out } => {
            let cfg = load_config(&common, &[])?;
            let entries = runner::load_pool(&pool)?;
            let entry = runner::find_entry(&entries, &id)?;
            let mut objs = parse_instances(&instance, &cfg.env.objects).map_err(|e| Error::UnknownId(e.to_string()))?;
            if objs.len() != 1 {
                return Err(Error::UnknownId(format!("replay needs exactly one instance, got `{instance}`")));
            }
            let w = BufWriter::new(File::create(&out)?);
            let res = runner::replay(&cfg, entry, &objs.remove(0), episode, force, w)?;
            println!("{} steps, success: {}, return {}", res.steps, res.success, res.ret);
        }
        Command::Report { pool, out } => {
            let entries = runner::load_pool(&pool)?;
            if entries.is_empty() {
                return Err(Error::EmptyPool);
            }
            runner::write_summary(&entries, io::stdout().lock())?;
            if let Some(o) = out {
                runner::write_summary(&entries, BufWriter::new(File::create(o)?))?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::InvalidBounds(_)
        | Error::SeedOutOfBounds { .. }
        | Error::OutOfBoundsDesign { .. }
        | Error::UnknownShape(_)
        | Error::UnknownScale(_) => 2,
        Error::NumericalBlowup { .. } => 3,
        Error::UnknownId(_) | Error::EmptyPool | Error::PoolTooSmall(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("handopt: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
