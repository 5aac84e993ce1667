//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 3 7`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use handopt::config::RunConfig;
use handopt::design::{
    clamp, crossover, interpolation_path, mutate, normalized_distance, DesignBounds, DesignParams, DESIGN_DIM,
};
use handopt::env::{all_instances, make_object, EnvParams, ObjectSizes, PlanarSim, Shape};
use handopt::evaluation::{auc_from_rates, auc_metric, spearman, EvalConfig};
use handopt::evolution::{
    co_optimize, read_log, DesignTrainer, EvolutionConfig, JsonlRecorder, LogEvent, PoolEntry,
};
use handopt::learning::{train, Arch, PolicyParams, TrainConfig, TrainReport};
use handopt::{runner, seed};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ga_operators() -> Outcome {
    let b = DesignBounds::table_i();
    let mut rng = seed::rng(1001);
    let trials = 10_000;
    let mut failures = 0;
    for t in 0..trials {
        // Every tenth pair sits on the box corners so clamping is exercised.
        let (x, y) = if t % 10 == 0 {
            (b.lower_design(), b.upper_design())
        } else {
            (b.sample(&mut rng), b.sample(&mut rng))
        };
        let c = crossover(&x, &y, &mut rng);
        let m = mutate(&c, &b, &mut rng);
        let k = clamp(&m, &b);
        let ok = (0..DESIGN_DIM).all(|i| {
            (c[i] == x[i] || c[i] == y[i])
                && (m[i] - c[i]).abs() <= b.mutation_range[i]
                && k[i] >= b.lower[i]
                && k[i] <= b.upper[i]
                && (m[i] != k[i] || (m[i] >= b.lower[i] && m[i] <= b.upper[i]))
        }) && clamp(&k, &b) == k;
        if !ok {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{trials} trials, {failures} violations"))
}

fn interpolation() -> Outcome {
    let b = DesignBounds::table_i();
    let mut rng = seed::rng(1002);
    let eps = EvolutionConfig::default().eps;
    let mut bad_count = 0;
    let mut max_step_err: f64 = 0.0;
    let mut out_of_bounds = 0;
    let mut bad_end = 0;
    for _ in 0..1000 {
        let src = b.sample(&mut rng);
        let tgt = b.sample(&mut rng);
        let xi = rng.random_range(0.02..0.5);
        let d0 = normalized_distance(&src, &tgt, &b);
        let path = interpolation_path(&src, &tgt, xi, eps, &b).unwrap();
        if path.len() != (d0 / xi).ceil() as usize {
            bad_count += 1;
        }
        let mut prev = src;
        for s in &path {
            let before = normalized_distance(&prev, &tgt, &b);
            let after = normalized_distance(s, &tgt, &b);
            let want = xi.min(before);
            max_step_err = max_step_err.max(((before - after) - want).abs());
            max_step_err = max_step_err.max((normalized_distance(&prev, s, &b) - want).abs());
            if !b.contains(s) {
                out_of_bounds += 1;
            }
            prev = *s;
        }
        if path.last() != Some(&tgt) {
            bad_end += 1;
        }
    }
    let pass = bad_count == 0 && max_step_err <= 1e-9 && out_of_bounds == 0 && bad_end == 0;
    outcome(
        pass,
        format!(
            "1000 triples: {bad_count} wrong stone counts, max step error {max_step_err:.2e}, \
             {out_of_bounds} stones out of bounds, {bad_end} paths not ending at the target"
        ),
    )
}

/// Trapezoid over the explicit grid, written out interval by interval.
fn oracle_auc(forces: &[f64], rates: &[f64], f_max: f64) -> f64 {
    let mut area = 0.0;
    for i in 0..forces.len() - 1 {
        let width = forces[i + 1] - forces[i];
        area += width * (rates[i] + rates[i + 1]) / 2.0;
    }
    area / f_max
}

fn auc_oracle() -> Outcome {
    let mut rng = seed::rng(1003);
    let mut max_err: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=20usize);
        let n = rng.random_range(1..=256usize);
        let f_max = rng.random_range(0.1..5.0);
        let forces: Vec<f64> = (0..=k).map(|i| i as f64 * f_max / k as f64).collect();
        let rates: Vec<f64> = (0..=k).map(|_| rng.random_range(0..=n) as f64 / n as f64).collect();
        max_err = max_err.max((auc_from_rates(&rates) - oracle_auc(&forces, &rates, f_max)).abs());
    }
    let constant_exact = (1..=50).all(|k| auc_from_rates(&vec![1.0; k + 1]) == 1.0);

    // The full metric on simulated rates agrees with the oracle as well.
    let sim = PlanarSim::new(&DesignParams::v3(), &DesignBounds::table_i(), EnvParams::default()).unwrap();
    let close = |_: &[f64; 36]| [0.2; 8];
    let cfg = EvalConfig { k: 5, n: 16, f_max: 1.0 };
    for inst in all_instances(&ObjectSizes::default()).iter().step_by(4) {
        let c = auc_metric(&close, &sim, inst, &cfg, 3).unwrap();
        max_err = max_err.max((c.auc - oracle_auc(&c.forces, &c.success_rates, cfg.f_max)).abs());
    }
    outcome(
        max_err <= 1e-12 && constant_exact,
        format!("max |auc - oracle| = {max_err:.2e} over 1000 sequences; constant 1 gives exactly 1.0: {constant_exact}"),
    )
}

fn state_fingerprint(s: &handopt::env::SimState) -> String {
    format!("{s:?}")
}

fn determinism() -> Outcome {
    let b = DesignBounds::table_i();
    let env = EnvParams::default();
    let instances = all_instances(&env.objects);
    let mut rng = seed::rng(1004);
    let (mut mismatches, mut cone, mut limits, mut steps) = (0, 0, 0, 0usize);
    let mut triples = 0;
    while triples < 100 {
        let theta = b.sample(&mut rng);
        let sim = PlanarSim::new(&theta, &b, env.clone()).unwrap();
        let policy = PolicyParams::random(Arch::default(), rng.random_range(0.05..1.0), rng.random());
        let inst = &instances[rng.random_range(0..instances.len())];
        let Ok(cfg) = sim.sample_episode(inst, rng.random_range(0.0..1.0), rng.random()) else {
            continue;
        };
        triples += 1;
        let mut runs: Vec<Vec<String>> = Vec::new();
        for _ in 0..2 {
            let mut trace = Vec::new();
            let mut st = sim.reset(&cfg).unwrap();
            for _ in 0..cfg.horizon {
                let obs = sim.observe(&st, &cfg);
                let mut a = [0.0; 8];
                policy.forward(&obs, &mut a);
                st = sim.step(&st, &a, &cfg).unwrap();
                steps += 1;
                for c in &st.contacts {
                    if c.normal_force < 0.0 || c.tangential_force.abs() > env.friction * c.normal_force + 1e-12 {
                        cone += 1;
                    }
                }
                if !sim.hand.joints_within_limits(&st.joint_angles) {
                    limits += 1;
                }
                trace.push(state_fingerprint(&st));
                if sim.succeeded(&st, &cfg) {
                    break;
                }
            }
            runs.push(trace);
        }
        if runs[0] != runs[1] {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0 && cone == 0 && limits == 0,
        format!(
            "100 triples, {steps} steps: {mismatches} non-identical reruns, \
             {cone} friction-cone violations, {limits} joint-limit violations"
        ),
    )
}

fn sphere() -> Vec<handopt::env::ObjectSpec> {
    vec![make_object(Shape::Sphere, 1.0, &ObjectSizes::default()).unwrap()]
}

fn monotonicity() -> Outcome {
    let b = DesignBounds::table_i();
    let sim = PlanarSim::new(&DesignParams::v3(), &b, EnvParams::default()).unwrap();
    let objs = sphere();
    let tc = TrainConfig::default();
    let es = handopt::learning::EsConfig { window: 150, ..tc.es(150) };
    let (policy, rep) = train(&sim, &objs, None, &es, &tc, 5).unwrap();
    let cfg = EvalConfig { k: 10, n: 256, f_max: 1.0 };
    let curve = auc_metric(&policy, &sim, &objs[0], &cfg, 55).unwrap();
    let rho = spearman(&curve.forces, &curve.success_rates);
    let rates: Vec<String> = curve.success_rates.iter().map(|r| format!("{r:.3}")).collect();
    let detail = format!(
        "trained {} generations (return {:.2}); S(F) = [{}]; spearman = {}",
        rep.generations_used,
        rep.final_expected_return,
        rates.join(", "),
        rho.map_or("undefined".into(), |r| format!("{r:.3}"))
    );
    outcome(curve.success_rates[0] > 0.0 && rho.is_some_and(|r| r <= 0.0), detail)
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Design at normalized distance `d` from `from` in a random direction,
/// staying inside the box.
fn design_at_distance<R: Rng>(b: &DesignBounds, from: &DesignParams, d: f64, rng: &mut R) -> DesignParams {
    let u0 = b.normalize(from);
    loop {
        let dir: [f64; DESIGN_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u: [f64; DESIGN_DIM] = std::array::from_fn(|i| u0[i] + d * dir[i] / norm);
        if u.iter().all(|x| (0.0..=1.0).contains(x)) {
            return b.denormalize(&u);
        }
    }
}

fn transfer_efficiency() -> Outcome {
    const THRESHOLD: f64 = 10.0;
    const BUDGET: usize = 150;
    let b = DesignBounds::table_i();
    let objs = sphere();
    let tc = TrainConfig::default();
    let es = handopt::learning::EsConfig { window: BUDGET, target_return: Some(THRESHOLD), ..tc.es(BUDGET) };
    // Runs that never reach the threshold count as one past the budget.
    let gens = |r: &TrainReport| {
        if r.final_expected_return >= THRESHOLD {
            r.generations_used
        } else {
            BUDGET + 1
        }
    };

    let src_sim = PlanarSim::new(&DesignParams::v3(), &b, EnvParams::default()).unwrap();
    let (src_policy, src_rep) = train(&src_sim, &objs, None, &es, &tc, 6).unwrap();
    if src_rep.final_expected_return < THRESHOLD {
        return outcome(false, format!("source never reached return {THRESHOLD} in {BUDGET} generations"));
    }

    let mut rng = seed::rng(1006);
    let (mut warm, mut scratch) = (Vec::new(), Vec::new());
    for _ in 0..5 {
        let target = design_at_distance(&b, &DesignParams::v3(), 0.2, &mut rng);
        let sim = PlanarSim::new(&target, &b, EnvParams::default()).unwrap();
        for s in 0..5 {
            let (_, w) = train(&sim, &objs, Some(&src_policy), &es, &tc, 600 + s).unwrap();
            let (_, f) = train(&sim, &objs, None, &es, &tc, 600 + s).unwrap();
            warm.push(gens(&w));
            scratch.push(gens(&f));
        }
    }
    let (mw, ms) = (median(warm.clone()), median(scratch.clone()));
    outcome(
        mw < ms,
        format!(
            "source reached {THRESHOLD} in {} generations; generations to threshold over 25 runs: \
             warm median {mw} {warm:?}, scratch median {ms} {scratch:?}",
            src_rep.generations_used
        ),
    )
}

/// Closed-form reward over the normalized design box, and instant training.
struct AnalyticTrainer {
    bounds: DesignBounds,
}

impl AnalyticTrainer {
    fn reward(&self, theta: &DesignParams) -> f64 {
        let u = self.bounds.normalize(theta);
        let peak = [0.7, 0.3, 0.6, 0.5, 0.4, 0.5, 0.6, 0.5, 0.2, 0.5, 0.8, 0.5, 0.5, 0.5];
        let bowl: f64 = u.iter().zip(peak).map(|(x, p)| (x - p) * (x - p)).sum();
        let ripple: f64 = u.iter().map(|x| (25.0 * x).sin()).sum::<f64>() / 3.0;
        10.0 - 8.0 * bowl + ripple
    }
}

impl DesignTrainer for AnalyticTrainer {
    fn train(
        &self,
        theta: &DesignParams,
        init: Option<&PolicyParams>,
        _seed: u64,
    ) -> handopt::Result<(PolicyParams, TrainReport)> {
        let arch = Arch { obs_dim: 1, hidden: 1, action_dim: 1, ..Arch::default() };
        let mut p = init.cloned().unwrap_or_else(|| PolicyParams::zeros(arch));
        p.params[0] += 1.0;
        let r = self.reward(theta);
        Ok((p, TrainReport { generations_used: 1, best_return_curve: vec![r], converged: true, final_expected_return: r }))
    }

    fn expected_return(&self, theta: &DesignParams, _: &PolicyParams, _: u64) -> handopt::Result<f64> {
        Ok(self.reward(theta))
    }

    fn auc(&self, theta: &DesignParams, _: &PolicyParams, _: u64) -> handopt::Result<Option<f64>> {
        Ok(Some(self.reward(theta) / 10.0))
    }
}

fn algorithm_fidelity() -> Outcome {
    let trainer = AnalyticTrainer { bounds: DesignBounds::table_i() };
    let cfg = EvolutionConfig { iterations: 50, ..EvolutionConfig::default() };
    let run = || {
        let mut rec = JsonlRecorder { pool: Vec::new(), log: Vec::new() };
        let pool = co_optimize(&cfg, &trainer.bounds, &trainer, 77, &mut rec).unwrap();
        (pool, rec.pool, rec.log)
    };
    let (pool, pool_a, log_a) = run();
    let (_, pool_b, log_b) = run();
    let reproducible = pool_a == pool_b && log_a == log_b;

    let seeds: Vec<&PoolEntry> = pool.entries.iter().filter(|e| e.lineage.iteration == 0).collect();
    let admitted: Vec<&PoolEntry> = pool.entries.iter().filter(|e| e.lineage.iteration > 0).collect();
    let pure = admitted
        .iter()
        .all(|e| e.expected_return > pool.q && e.expected_return == trainer.reward(&e.theta));

    let mut best_by_iter = BTreeMap::new();
    let mut best = f64::NEG_INFINITY;
    for it in 0..=cfg.iterations {
        for e in pool.entries.iter().filter(|e| e.lineage.iteration == it) {
            best = best.max(e.expected_return);
        }
        best_by_iter.insert(it, best);
    }
    let monotone = best_by_iter.values().zip(best_by_iter.values().skip(1)).all(|(a, b)| b >= a);
    let best_seed = seeds.iter().map(|e| e.expected_return).fold(f64::NEG_INFINITY, f64::max);
    let final_best = pool.best_return().unwrap();

    let log = read_log(&log_a[..]).unwrap();
    let rejected = log.iter().filter(|e| matches!(e, LogEvent::StoneRejected { .. })).count();
    let consistent = log.iter().all(|e| match e {
        LogEvent::StoneAdmitted { id, .. } => pool.get(id).is_some(),
        LogEvent::StoneRejected { id, expected_return, q, .. } => pool.get(id).is_none() && expected_return <= q,
        _ => true,
    });

    outcome(
        pure && monotone && final_best >= best_seed && reproducible && consistent,
        format!(
            "N = 50: {} admitted, {rejected} rejected, q = {:.3}; only reward > q admitted: {pure}; \
             best non-decreasing: {monotone}; final best {final_best:.3} vs best seed {best_seed:.3}; \
             byte-reproducible: {reproducible}",
            admitted.len(),
            pool.q
        ),
    )
}

fn desk_run() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let overrides: Vec<String> = [
        "instances=sphere@1.0,board@1.0",
        "evolution.iterations=10",
        "training.budget=60",
        "training.stone_budget=15",
        "training.window=10",
        "seed=8",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([format!("output_dir={}", serde_json::Value::String(dir.path().display().to_string()))])
    .collect();
    let cfg = RunConfig::load(None, &overrides).unwrap();
    let pool = match runner::evolve(&cfg) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let entries = runner::load_pool(&dir.path().join(runner::POOL_FILE)).unwrap();
    let non_seed = entries.iter().filter(|e| e.lineage.iteration > 0).count();
    let rows = runner::rank(&cfg, &entries).unwrap();
    let mut expected: Vec<(&str, f64)> = entries.iter().map(|e| (e.id.as_str(), e.auc.unwrap_or(f64::NAN))).collect();
    expected.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let consistent = rows.len() == expected.len()
        && rows.iter().zip(&expected).all(|(r, (id, auc))| !r.computed && r.id == *id && r.auc == *auc);
    let best = &rows[0];
    outcome(
        non_seed >= 1 && consistent && entries == pool.entries,
        format!(
            "pool {} entries ({non_seed} non-seed), q = {:.3}; rank consistent with stored AUCs: {consistent}; \
             top {} auc {:.3}",
            entries.len(),
            pool.q,
            best.id,
            best.auc
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "genetic operators", ga_operators),
        (2, "interpolation", interpolation),
        (3, "auc oracle", auc_oracle),
        (4, "simulator determinism", determinism),
        (5, "disturbance monotonicity", monotonicity),
        (6, "transfer efficiency", transfer_efficiency),
        (7, "co-optimization on analytic rewards", algorithm_fidelity),
        (8, "end-to-end desk run", desk_run),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} {name}: {verdict} ({:.1}s) {}", t0.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
