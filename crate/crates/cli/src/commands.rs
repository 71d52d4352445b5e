//! Experiment commands. Every run writes into its own directory tree:
//!
//! ```text
//! <out>/config.toml              resolved configuration
//! <out>/manifest.json            version, command, seeds, outputs, headline results
//! <out>/seed_<n>/metrics.csv     per-epoch metrics (both directions)
//! <out>/seed_<n>/node_a.ckpt     checkpoints (also written every `checkpoint_every` epochs)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use deepmod_core::channel::{ChannelConfig, ChannelKind, Jammer};
use deepmod_core::checkpoint::NodeCheckpoint;
use deepmod_core::metrics::{
    aggregate_seeds, convergence_epoch, convexity_score, median, median_with_missing, CerCurve,
    CerEstimate, ConvexityReport, MetricsLog,
};
use deepmod_core::protocol::{derive_seed, evaluate_cer, LinkSession, Node, Transcript, TrainingConfig};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::plot::plot_run;

/// Where and how a command runs.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Run independent seeds (and sweep points) on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    /// Continue from checkpoints found in the run directories instead of starting over.
    pub resume: bool,
}

/// A trained (or loaded) link for one seed.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub train_snr_db: f64,
    pub log: MetricsLog,
    pub node_a: Node,
    pub node_b: Node,
    pub next_epoch: usize,
    pub convergence_epoch: Option<usize>,
    pub final_success: Option<f64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn write_metrics(dir: &Path, log: &MetricsLog) -> Result<(), CliError> {
    let mut buf = Vec::new();
    log.write_csv(&mut buf)?;
    write_atomic(&dir.join("metrics.csv"), &buf)
}

fn write_curve(path: &Path, curve: &CerCurve) -> Result<(), CliError> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    write_atomic(path, &buf)
}

fn save_nodes(dir: &Path, a: &Node, b: &Node, next_epoch: usize) -> Result<(), CliError> {
    for (name, node) in [("node_a.ckpt", a), ("node_b.ckpt", b)] {
        let text = NodeCheckpoint::new(node.clone(), next_epoch).to_text();
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

/// Loads `node_a.ckpt`/`node_b.ckpt` from `dir`; `None` when neither exists.
fn load_nodes(dir: &Path) -> Result<Option<(NodeCheckpoint, NodeCheckpoint)>, CliError> {
    let (pa, pb) = (dir.join("node_a.ckpt"), dir.join("node_b.ckpt"));
    if !pa.exists() && !pb.exists() {
        return Ok(None);
    }
    let load = |p: &Path| NodeCheckpoint::load(p).map_err(|e| io_err(p, e));
    let (a, b) = (load(&pa)?, load(&pb)?);
    if a.next_epoch != b.next_epoch {
        return Err(CliError::Io(format!(
            "{}: node checkpoints disagree on the epoch ({} vs {})",
            dir.display(),
            a.next_epoch,
            b.next_epoch
        )));
    }
    Ok(Some((a, b)))
}

fn read_metrics(dir: &Path) -> Result<Option<MetricsLog>, CliError> {
    let path = dir.join("metrics.csv");
    if !path.exists() {
        return Ok(None);
    }
    let f = fs::File::open(&path).map_err(|e| io_err(&path, e))?;
    Ok(Some(MetricsLog::read_csv(f).map_err(|e| io_err(&path, e))?))
}

fn early_stopped(log: &MetricsLog, tcfg: &TrainingConfig) -> bool {
    let Some(threshold) = tcfg.early_stop_threshold else {
        return false;
    };
    let trace = log.success_trace(None);
    let streak = trace.iter().rev().take_while(|(_, s)| *s >= threshold).count();
    streak >= tcfg.early_stop_patience
}

fn summarize(seed: u64, tcfg: &TrainingConfig, session: LinkSession, log: MetricsLog, threshold: f64) -> SeedRun {
    SeedRun {
        seed,
        train_snr_db: tcfg.train_snr_db,
        convergence_epoch: convergence_epoch(&log, threshold).ok().flatten(),
        final_success: log.success_trace(None).last().map(|p| p.1),
        next_epoch: session.next_epoch,
        node_a: session.node_a,
        node_b: session.node_b,
        log,
    }
}

/// Trains (or resumes) one link in `dir`, checkpointing along the way.
///
/// On divergence the metrics gathered so far and the last checkpoint stay on disk.
pub fn train_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    train_snr_db: f64,
    dir: &Path,
    resume: bool,
) -> Result<SeedRun, CliError> {
    create_dir(dir)?;
    let tcfg = cfg.training_config(seed, train_snr_db);
    let (mut session, mut log) = match resume.then(|| load_nodes(dir)).transpose()?.flatten() {
        Some((a, b)) => {
            let mut log = MetricsLog::new();
            if let Some(old) = read_metrics(dir)? {
                for row in old.rows().iter().filter(|r| r.epoch < a.next_epoch) {
                    log.push(row.clone())?;
                }
            }
            let next = a.next_epoch;
            (LinkSession::from_nodes(a.node, b.node, &tcfg, next)?, log)
        }
        None => (LinkSession::new(&tcfg)?, MetricsLog::new()),
    };
    let mut tap = cfg.training.transcript.then(Transcript::new);
    let every = cfg.training.checkpoint_every;

    while session.next_epoch < tcfg.max_epochs && !early_stopped(&log, &tcfg) {
        let outcome = match session.run_epoch(tap.as_mut()) {
            Ok(o) => o,
            Err(e) => {
                write_metrics(dir, &log)?;
                return Err(CliError::Runtime(format!("seed {seed}: {e}")));
            }
        };
        for row in outcome.rows() {
            log.push(row)?;
        }
        if every > 0 && session.next_epoch % every == 0 {
            save_nodes(dir, &session.node_a, &session.node_b, session.next_epoch)?;
            write_metrics(dir, &log)?;
        }
    }
    save_nodes(dir, &session.node_a, &session.node_b, session.next_epoch)?;
    write_metrics(dir, &log)?;
    if let Some(t) = tap {
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf)?;
        write_atomic(&dir.join("transcript.jsonl"), &buf)?;
    }
    Ok(summarize(seed, &tcfg, session, log, cfg.experiment.convergence_threshold))
}

fn map_jobs<T, R, F>(jobs: Vec<T>, parallel: bool, f: F) -> Result<Vec<R>, CliError>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R, CliError> + Sync + Send,
{
    if parallel {
        jobs.into_par_iter().map(f).collect()
    } else {
        jobs.into_iter().map(f).collect()
    }
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn snr_label(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

fn prepare(out: &Path, cfg: &ExperimentConfig) -> Result<(), CliError> {
    create_dir(out)?;
    write_atomic(&out.join("config.toml"), cfg.to_toml().as_bytes())
}

fn finish(
    out: &Path,
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    command: &str,
    results: serde_json::Value,
) -> Result<(), CliError> {
    if cfg.output.plot {
        plot_run(out)?;
    }
    let mut outputs: Vec<String> = Vec::new();
    collect_files(out, out, &mut outputs)?;
    outputs.retain(|p| p != "manifest.json");
    let manifest = json!({
        "tool": "deepmod",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seeds": cfg.link.seeds,
        "deterministic": !opts.parallel,
        "config": "config.toml",
        "outputs": outputs,
        "results": results,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("json value");
    write_atomic(&out.join("manifest.json"), text.as_bytes())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else if let Ok(rel) = p.strip_prefix(root) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    let buf = w.into_inner().map_err(|e| io_err(path, e))?;
    write_atomic(path, &buf)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub train_snr_db: f64,
    pub seed: u64,
    pub convergence_epoch: Option<usize>,
    pub final_success: Option<f64>,
    pub epochs_run: usize,
}

impl From<&SeedRun> for ConvergenceRow {
    fn from(r: &SeedRun) -> Self {
        Self {
            train_snr_db: r.train_snr_db,
            seed: r.seed,
            convergence_epoch: r.convergence_epoch,
            final_success: r.final_success,
            epochs_run: r.log.epochs().len(),
        }
    }
}

/// `train`: one link per seed at the configured train SNR.
pub fn cmd_train(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<SeedRun>, CliError> {
    prepare(&opts.out, cfg)?;
    let snr = cfg.training.train_snr_db;
    let runs = map_jobs(cfg.link.seeds.clone(), opts.parallel, |seed| {
        train_seed(cfg, seed, snr, &seed_dir(&opts.out, seed), opts.resume)
    })?;
    let rows: Vec<ConvergenceRow> = runs.iter().map(ConvergenceRow::from).collect();
    write_rows(&opts.out.join("convergence.csv"), &rows)?;
    let logs: Vec<MetricsLog> = runs.iter().map(|r| r.log.clone()).collect();
    if !logs.iter().any(|l| l.is_empty()) {
        if let Ok(agg) = aggregate_seeds(&logs) {
            write_rows(&opts.out.join("aggregate.csv"), &agg)?;
        }
    }
    let conv: Vec<Option<f64>> = runs.iter().map(|r| r.convergence_epoch.map(|e| e as f64)).collect();
    finish(
        &opts.out,
        cfg,
        opts,
        "train",
        json!({
            "convergence_threshold": cfg.experiment.convergence_threshold,
            "median_convergence_epoch": median_with_missing(&conv),
            "runs": rows,
        }),
    )?;
    Ok(runs)
}

/// Finds `node_{a,b}.ckpt` for `seed` under a checkpoint directory.
fn checkpoint_source(root: &Path, seed: u64) -> Option<PathBuf> {
    [seed_dir(root, seed), root.to_path_buf()]
        .into_iter()
        .find(|d| d.join("node_a.ckpt").exists())
}

/// A trained link for `seed`: loaded from `experiment.checkpoint_dir` or trained inline.
pub fn obtain_link(
    cfg: &ExperimentConfig,
    seed: u64,
    train_snr_db: f64,
    dir: &Path,
    resume: bool,
) -> Result<SeedRun, CliError> {
    if let Some(root) = &cfg.experiment.checkpoint_dir {
        let src = checkpoint_source(root, seed).ok_or_else(|| {
            CliError::Io(format!(
                "no checkpoint for seed {seed} under {} (expected seed_{seed}/node_a.ckpt or node_a.ckpt)",
                root.display()
            ))
        })?;
        let (a, b) = load_nodes(&src)?.expect("node_a.ckpt exists");
        let log = read_metrics(&src)?.unwrap_or_default();
        let tcfg = cfg.training_config(seed, train_snr_db);
        let next = a.next_epoch;
        let session = LinkSession::from_nodes(a.node, b.node, &tcfg, next)?;
        return Ok(summarize(seed, &tcfg, session, log, cfg.experiment.convergence_threshold));
    }
    if !cfg.experiment.train_inline {
        return Err(CliError::Config(
            "[experiment] needs checkpoint_dir when train_inline = false".into(),
        ));
    }
    train_seed(cfg, seed, train_snr_db, dir, resume)
}

fn eval_channels(cfg: &ExperimentConfig, seed: u64) -> (ChannelConfig, ChannelConfig) {
    let t = cfg.training_config(seed, cfg.training.train_snr_db);
    (t.channel_fwd, t.channel_rev)
}

fn sweep(
    cfg: &ExperimentConfig,
    run: &SeedRun,
    fwd: &ChannelConfig,
    rev: &ChannelConfig,
    grid: &[f64],
) -> Result<Vec<(f64, CerEstimate)>, CliError> {
    let eval_seed = derive_seed(cfg.experiment.eval_seed, run.seed);
    grid.iter()
        .map(|&snr| {
            let est = evaluate_cer(
                &run.node_a,
                &run.node_b,
                fwd,
                rev,
                snr,
                cfg.experiment.trials,
                eval_seed,
            )?
            .pooled();
            Ok((snr, est))
        })
        .collect()
}

fn curve_of(points: &[(f64, CerEstimate)]) -> CerCurve {
    let mut c = CerCurve::new();
    for &(snr, est) in points {
        c.insert(snr, est);
    }
    c
}

/// Result of `cer-sweep`.
#[derive(Clone, Debug)]
pub struct CerSweepOutcome {
    pub runs: Vec<SeedRun>,
    pub per_seed: Vec<CerCurve>,
    /// Errors and trials pooled across seeds.
    pub pooled: CerCurve,
    /// |CER at the train SNR − (1 − final training success)| per seed, when the grid has that point.
    pub consistency_gaps: Vec<f64>,
}

/// `cer-sweep`: train (or load) at the train SNR, freeze, evaluate CER over the test grid.
pub fn cmd_cer_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CerSweepOutcome, CliError> {
    if cfg.experiment.test_snr_grid_db.is_empty() {
        return Err(CliError::Config("[experiment] test_snr_grid_db is empty".into()));
    }
    prepare(&opts.out, cfg)?;
    let snr = cfg.training.train_snr_db;
    let grid = cfg.experiment.test_snr_grid_db.clone();
    let results = map_jobs(cfg.link.seeds.clone(), opts.parallel, |seed| {
        let dir = seed_dir(&opts.out, seed);
        let run = obtain_link(cfg, seed, snr, &dir, opts.resume)?;
        let (fwd, rev) = eval_channels(cfg, seed);
        let points = sweep(cfg, &run, &fwd, &rev, &grid)?;
        create_dir(&dir)?;
        write_curve(&dir.join("cer.csv"), &curve_of(&points))?;
        Ok((run, points))
    })?;

    let mut pooled = CerCurve::new();
    for (i, &snr_t) in grid.iter().enumerate() {
        let est = results
            .iter()
            .map(|(_, p)| p[i].1)
            .reduce(|a, b| a.combine(&b))
            .expect("at least one seed");
        pooled.insert(snr_t, est);
    }
    write_curve(&opts.out.join("cer.csv"), &pooled)?;

    let consistency_gaps: Vec<f64> = results
        .iter()
        .filter_map(|(run, points)| {
            let at = points.iter().find(|(s, _)| *s == snr)?;
            Some((at.1.cer - (1.0 - run.final_success?)).abs())
        })
        .collect();
    let per_seed: Vec<CerCurve> = results.iter().map(|(_, p)| curve_of(p)).collect();
    let runs: Vec<SeedRun> = results.into_iter().map(|(r, _)| r).collect();
    finish(
        &opts.out,
        cfg,
        opts,
        "cer-sweep",
        json!({
            "train_snr_db": snr,
            "trials_per_point_per_direction": cfg.experiment.trials,
            "pooled": pooled.points(),
            "monotonicity_violations_2se": pooled.monotonicity_violations(2.0),
            "consistency_gaps": consistency_gaps,
        }),
    )?;
    Ok(CerSweepOutcome {
        runs,
        per_seed,
        pooled,
        consistency_gaps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CerRow {
    pub train_snr_db: f64,
    pub test_snr_db: f64,
    pub seed: u64,
    pub cer: f64,
    pub trials: usize,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossSectionRow {
    pub test_snr_db: f64,
    pub train_snr_db: f64,
    pub median_cer: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityRow {
    pub test_snr_db: f64,
    pub interior_minimum: bool,
    pub argmin_train_snr_db: f64,
    pub min_cer: f64,
}

/// Result of `train-snr-study`.
#[derive(Clone, Debug)]
pub struct StudyOutcome {
    pub convergence: Vec<ConvergenceRow>,
    pub cer: Vec<CerRow>,
    pub cross_sections: Vec<CrossSectionRow>,
    /// One report per test SNR (empty for convergence-only studies).
    pub convexity: Vec<(f64, ConvexityReport)>,
}

/// `train-snr-study`: train and evaluate a fresh link for every (train SNR, seed) pair.
pub fn cmd_train_snr_study(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<StudyOutcome, CliError> {
    cfg.validate_study()?;
    prepare(&opts.out, cfg)?;
    let evaluate = cfg.experiment.kind != ExperimentKind::TrainSnrConvergence;
    let train_grid = cfg.experiment.train_snr_grid_db.clone();
    let test_grid = cfg.experiment.test_snr_grid_db.clone();
    let jobs: Vec<(f64, u64)> = train_grid
        .iter()
        .flat_map(|&t| cfg.link.seeds.iter().map(move |&s| (t, s)))
        .collect();
    let results = map_jobs(jobs, opts.parallel, |(train_snr, seed)| {
        let dir = seed_dir(&opts.out.join(format!("train_snr_{}", snr_label(train_snr))), seed);
        let run = train_seed(cfg, seed, train_snr, &dir, opts.resume)?;
        let points = if evaluate {
            let (fwd, rev) = eval_channels(cfg, seed);
            let p = sweep(cfg, &run, &fwd, &rev, &test_grid)?;
            write_curve(&dir.join("cer.csv"), &curve_of(&p))?;
            p
        } else {
            Vec::new()
        };
        Ok((ConvergenceRow::from(&run), points))
    })?;

    let convergence: Vec<ConvergenceRow> = results.iter().map(|(r, _)| r.clone()).collect();
    write_rows(&opts.out.join("convergence.csv"), &convergence)?;
    let cer: Vec<CerRow> = results
        .iter()
        .flat_map(|(r, pts)| {
            pts.iter().map(move |(t, est)| CerRow {
                train_snr_db: r.train_snr_db,
                test_snr_db: *t,
                seed: r.seed,
                cer: est.cer,
                trials: est.trials,
                stderr: est.stderr,
            })
        })
        .collect();

    let mut cross_sections = Vec::new();
    let mut convexity = Vec::new();
    if evaluate {
        write_rows(&opts.out.join("cer_by_train_snr.csv"), &cer)?;
        for &test in &test_grid {
            let pts: Vec<(f64, f64)> = train_grid
                .iter()
                .map(|&train| {
                    let vals: Vec<f64> = cer
                        .iter()
                        .filter(|c| c.train_snr_db == train && c.test_snr_db == test)
                        .map(|c| c.cer)
                        .collect();
                    (train, median(&vals))
                })
                .collect();
            for &(train, m) in &pts {
                cross_sections.push(CrossSectionRow {
                    test_snr_db: test,
                    train_snr_db: train,
                    median_cer: m,
                });
            }
            convexity.push((test, convexity_score(&pts)?));
        }
        write_rows(&opts.out.join("cer_cross_section.csv"), &cross_sections)?;
        let rows: Vec<ConvexityRow> = convexity
            .iter()
            .map(|(t, r)| ConvexityRow {
                test_snr_db: *t,
                interior_minimum: r.interior_minimum,
                argmin_train_snr_db: r.argmin_train_snr_db,
                min_cer: r.min_cer,
            })
            .collect();
        write_rows(&opts.out.join("convexity.csv"), &rows)?;
    }

    let median_conv: Vec<(f64, Option<f64>)> = train_grid
        .iter()
        .map(|&t| {
            let v: Vec<Option<f64>> = convergence
                .iter()
                .filter(|r| r.train_snr_db == t)
                .map(|r| r.convergence_epoch.map(|e| e as f64))
                .collect();
            (t, median_with_missing(&v))
        })
        .collect();
    finish(
        &opts.out,
        cfg,
        opts,
        "train-snr-study",
        json!({
            "median_convergence_epoch_by_train_snr": median_conv,
            "convexity": convexity.iter().map(|(t, r)| json!({"test_snr_db": t, "report": r})).collect::<Vec<_>>(),
        }),
    )?;
    Ok(StudyOutcome {
        convergence,
        cer,
        cross_sections,
        convexity,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct JammerRow {
    pub seed: u64,
    pub pre_jam_cer: f64,
    pub jammed_cer: f64,
    pub recovered_cer: f64,
    /// Retraining epochs until class success held the convergence threshold; empty if it never did.
    pub recovery_epochs: Option<usize>,
    pub retrain_epochs: usize,
}

fn with_jammer(c: &ChannelConfig, jammer: Jammer) -> Result<ChannelConfig, CliError> {
    if c.kind == ChannelKind::Ideal {
        return Err(CliError::Config("cannot switch a jammer onto an ideal channel".into()));
    }
    let mut j = c.clone();
    j.jammer = Some(jammer);
    j.validate()?;
    Ok(j)
}

/// `jammer-retrain`: converge, switch a tone jammer on, measure the damage, retrain under it.
pub fn cmd_jammer_retrain(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<JammerRow>, CliError> {
    prepare(&opts.out, cfg)?;
    let snr = cfg.training.train_snr_db;
    let e = &cfg.experiment;
    let jammer = Jammer {
        frequency: e.jammer_frequency,
        power_ratio: e.jammer_power_ratio,
    };
    let rows = map_jobs(cfg.link.seeds.clone(), opts.parallel, |seed| {
        let dir = seed_dir(&opts.out, seed);
        let run = obtain_link(cfg, seed, snr, &dir, opts.resume)?;
        let (fwd, rev) = eval_channels(cfg, seed);
        let (jfwd, jrev) = (with_jammer(&fwd, jammer)?, with_jammer(&rev, jammer)?);
        let eval_seed = derive_seed(e.eval_seed, seed);
        let cer = |a: &Node, b: &Node, f: &ChannelConfig, r: &ChannelConfig| {
            evaluate_cer(a, b, f, r, snr, e.trials, eval_seed).map(|c| c.pooled().cer)
        };
        let pre = cer(&run.node_a, &run.node_b, &fwd, &rev)?;
        let jammed = cer(&run.node_a, &run.node_b, &jfwd, &jrev)?;

        let start = run.next_epoch;
        let mut tcfg = cfg.training_config(seed, snr);
        tcfg.channel_fwd = jfwd.clone();
        tcfg.channel_rev = jrev.clone();
        tcfg.max_epochs = start + e.retrain_epochs;
        let mut session = LinkSession::from_nodes(run.node_a, run.node_b, &tcfg, start)?;
        let retrain_dir = dir.join("retrain");
        create_dir(&retrain_dir)?;
        let mut log = MetricsLog::new();
        let result = session.train(e.retrain_epochs, None, None, &mut log);
        write_metrics(&retrain_dir, &log)?;
        result.map_err(|err| CliError::Runtime(format!("seed {seed} retraining: {err}")))?;
        save_nodes(&retrain_dir, &session.node_a, &session.node_b, session.next_epoch)?;

        let recovery_epochs = if log.is_empty() {
            None
        } else {
            convergence_epoch(&log, e.convergence_threshold)?.map(|ep| ep - start)
        };
        let recovered = cer(&session.node_a, &session.node_b, &jfwd, &jrev)?;
        Ok(JammerRow {
            seed,
            pre_jam_cer: pre,
            jammed_cer: jammed,
            recovered_cer: recovered,
            recovery_epochs,
            retrain_epochs: e.retrain_epochs,
        })
    })?;
    write_rows(&opts.out.join("jammer.csv"), &rows)?;
    finish(&opts.out, cfg, opts, "jammer-retrain", json!({ "jammer": jammer, "runs": rows }))?;
    Ok(rows)
}

/// Load, probe, save, reload and compare one checkpoint.
pub fn cmd_verify_checkpoint(path: &Path) -> Result<deepmod_core::checkpoint::RoundTripReport, CliError> {
    let scratch = std::env::temp_dir().join(format!(
        "deepmod-verify-{}-{}.ckpt",
        std::process::id(),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("node")
    ));
    let report = deepmod_core::checkpoint::verify_round_trip(path, &scratch)
        .map_err(|e| io_err(path, e));
    let _ = fs::remove_file(&scratch);
    let report = report?;
    if !report.identical {
        return Err(CliError::Io(format!(
            "{}: probe outputs changed across save/load",
            path.display()
        )));
    }
    Ok(report)
}
