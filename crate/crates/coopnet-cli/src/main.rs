//! `coopnet`: seeded, replicated experiments over the cooperation-dynamics
//! library, emitting plot-ready CSV plus a manifest that reruns the exact
//! experiment.

mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use coopnet::competition::{run_adoption_experiment, AdoptionSummary, CompetitionConfig};
use coopnet::config::{rate_serde, SimConfig};
use coopnet::dynamics::run_episode;
use coopnet::game::GameMatrix;
use coopnet::learn::{evaluate_policy, train, Checkpoint, RankingPolicy, TrainerConfig};
use coopnet::metrics::{aggregate, EpisodeResult, RowMeta, RunRow, Summary, CSV_COLUMNS};
use coopnet::policy::{PolicyRecommender, RewirePolicy};
use coopnet::replicate::{limit_threads, run_replicates};
use coopnet::rng::replicate_seed;

use output::{ensure_header_only_csv, AdoptionRow, Manifest, OutDir};
use spec::{resolve, Kind, Overrides, ResolvedSpec, SpecError, SpecFile};

#[derive(Parser)]
#[command(
    name = "coopnet",
    version,
    about = "Cooperation dynamics on adaptive networks: runs, sweeps, recommender \
             competition, and policy training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated episodes of a single environment and recommender
    Run(CommonArgs),
    /// Aggregate outcomes over a T x S grid of games
    SweepTs {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid resolution per axis (1 = just the configured T, S)
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Aggregate outcomes over a list of rewiring timescales W
    SweepW {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated W values, e.g. "0,0.5,1,4,inf"
        #[arg(long = "W-list")]
        w_list: Option<String>,
    },
    /// Mediator adoption over a W x W2 grid
    SweepW1w2 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "W-list")]
        w_list: Option<String>,
        #[arg(long = "W2-list")]
        w2_list: Option<String>,
        /// Initial mediator mix, e.g. "NO_MED:0.9,GOOD:0.1"
        #[arg(long)]
        mix: Option<String>,
        #[arg(long)]
        beta_med: Option<f64>,
    },
    /// Competing mediators at one mediator timescale W2
    Compete {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "W2")]
        w2: Option<String>,
        /// Initial mediator mix, e.g. "NO_MED:0.9,GOOD:0.1"
        #[arg(long)]
        mix: Option<String>,
        #[arg(long)]
        beta_med: Option<f64>,
    },
    /// Train a ranking policy by policy gradient, then evaluate it
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// cooperation | engagement
        #[arg(long)]
        reward: Option<String>,
        #[arg(long)]
        updates: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        baseline_decay: Option<f64>,
        #[arg(long)]
        hidden_width: Option<usize>,
        #[arg(long)]
        eval_episodes: Option<usize>,
    },
    /// Evaluate a trained checkpoint
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// cooperation | engagement (reported reward)
        #[arg(long)]
        reward: Option<String>,
        #[arg(long)]
        eval_episodes: Option<usize>,
    },
}

#[derive(Args, Default)]
struct CommonArgs {
    /// JSON config; a previously written manifest.json also works
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for results.csv / summary.json / manifest.json
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for replicates (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Structural/strategy timescale ratio; number or "inf"
    #[arg(long = "W")]
    w: Option<String>,
    #[arg(long = "T", allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long = "S", allow_negative_numbers = true)]
    s: Option<f64>,
    #[arg(long)]
    time_limit: Option<u64>,
    #[arg(long)]
    coop_init: Option<f64>,
    /// Registry name (GOOD, BAD, RANDOM, FAIR, NO_MED, NULL, ...)
    #[arg(long)]
    policy: Option<String>,
    /// Path to a checkpoint.json; mutually exclusive with --policy
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

enum CliError {
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let (spec, out) = prepare(Kind::Run, &common, Overrides::default())?;
            cmd_run(spec, out)
        }
        Command::SweepTs { common, grid } => {
            let (spec, out) = prepare(
                Kind::SweepTs,
                &common,
                Overrides { grid, ..Default::default() },
            )?;
            cmd_sweep_ts(spec, out)
        }
        Command::SweepW { common, w_list } => {
            let (spec, out) = prepare(
                Kind::SweepW,
                &common,
                Overrides { w_list, ..Default::default() },
            )?;
            cmd_sweep_w(spec, out)
        }
        Command::SweepW1w2 { common, w_list, w2_list, mix, beta_med } => {
            let (spec, out) = prepare(
                Kind::SweepW1W2,
                &common,
                Overrides { w_list, w2_list, mix, beta_med, ..Default::default() },
            )?;
            cmd_sweep_w1w2(spec, out)
        }
        Command::Compete { common, w2, mix, beta_med } => {
            let (spec, out) = prepare(
                Kind::Compete,
                &common,
                Overrides { w2, mix, beta_med, ..Default::default() },
            )?;
            cmd_compete(spec, out)
        }
        Command::Train {
            common,
            reward,
            updates,
            batch_size,
            learning_rate,
            baseline_decay,
            hidden_width,
            eval_episodes,
        } => {
            let (spec, out) = prepare(
                Kind::Train,
                &common,
                Overrides {
                    reward,
                    updates,
                    batch_size,
                    learning_rate,
                    baseline_decay,
                    hidden_width,
                    eval_episodes,
                    ..Default::default()
                },
            )?;
            cmd_train(spec, out)
        }
        Command::Eval { common, reward, eval_episodes } => {
            let (spec, out) = prepare(
                Kind::Eval,
                &common,
                Overrides { reward, eval_episodes, ..Default::default() },
            )?;
            cmd_eval(spec, out)
        }
    }
}

/// File -> flags -> resolved spec, plus the output directory.
fn prepare(
    kind: Kind,
    common: &CommonArgs,
    mut extra: Overrides,
) -> Result<(ResolvedSpec, OutDir), CliError> {
    let mut file = match &common.config {
        Some(path) => SpecFile::load(path)?,
        None => SpecFile::default(),
    };
    extra.n = common.n;
    extra.k = common.k;
    extra.beta = common.beta;
    extra.w = common.w.clone();
    extra.t = common.t;
    extra.s = common.s;
    extra.time_limit = common.time_limit;
    extra.seed = common.seed;
    extra.coop_init = common.coop_init;
    extra.replicates = common.replicates;
    extra.policy = common.policy.clone();
    extra.checkpoint = common
        .checkpoint
        .as_ref()
        .map(|p| p.to_string_lossy().into_owned());
    extra.apply(&mut file)?;
    let spec = resolve(kind, file)?;
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        limit_threads(jobs);
    }
    let out = OutDir::create(&common.out).map_err(CliError::Runtime)?;
    Ok((spec, out))
}

/// The recommender a spec names: a registry heuristic or a loaded
/// checkpoint (labelled LEARNED in the CSV).
fn build_policy(spec: &ResolvedSpec) -> Result<(String, RewirePolicy), CliError> {
    if let Some(name) = &spec.policy {
        let policy = RewirePolicy::from_name(name)
            .map_err(|e| CliError::Validation(format!("field `policy`: {e}")))?;
        return Ok((name.clone(), policy));
    }
    let path = spec
        .checkpoint
        .as_ref()
        .expect("resolve() guarantees policy or checkpoint");
    let net = load_checkpoint(path)?;
    Ok(("LEARNED".to_string(), RewirePolicy::Learned(Arc::new(net))))
}

fn load_checkpoint(path: &str) -> Result<RankingPolicy, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("field `checkpoint`: cannot read {path}: {e}")))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("field `checkpoint`: {e}")))?;
    RankingPolicy::from_checkpoint(&ck)
        .map_err(|e| CliError::Validation(format!("field `checkpoint`: {e}")))
}

fn run_batch(
    cfg: &SimConfig,
    game: &GameMatrix,
    policy: &RewirePolicy,
    replicates: usize,
) -> Result<Vec<EpisodeResult>, CliError> {
    run_replicates(replicates, |i| {
        let mut c = *cfg;
        c.seed = replicate_seed(cfg.seed, i);
        let mut rec = PolicyRecommender::new(policy.clone());
        run_episode(&c, game, &mut rec)
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(|e| CliError::Runtime(anyhow!("episode failed: {e}")))
}

struct RowCtx<'a> {
    spec: &'a ResolvedSpec,
    label: &'a str,
    w: f64,
    w2: f64,
    t: f64,
    s: f64,
}

fn rows_from(ctx: &RowCtx<'_>, results: &[EpisodeResult], rows: &mut Vec<RunRow>) {
    for (i, r) in results.iter().enumerate() {
        rows.push(RunRow::new(
            RowMeta {
                seed: replicate_seed(ctx.spec.seed, i),
                policy: ctx.label,
                n: ctx.spec.n,
                k: ctx.spec.k,
                beta: ctx.spec.beta,
                w: ctx.w,
                w2: ctx.w2,
                t: ctx.t,
                s: ctx.s,
            },
            r,
        ));
    }
}

fn seeds_of(spec: &ResolvedSpec, count: usize) -> Vec<u64> {
    (0..count).map(|i| replicate_seed(spec.seed, i)).collect()
}

fn finish(
    out: &OutDir,
    rows: &[RunRow],
    summary: &impl Serialize,
    mut manifest: Manifest,
) -> Result<(), CliError> {
    if rows.is_empty() {
        manifest.warning = Some("empty result set; results.csv is header-only".to_string());
        ensure_header_only_csv(&out.path("results.csv"), &CSV_COLUMNS).map_err(CliError::Runtime)?;
    } else {
        out.write_results(rows).map_err(CliError::Runtime)?;
    }
    out.write_json("summary.json", summary).map_err(CliError::Runtime)?;
    out.write_json("manifest.json", &manifest).map_err(CliError::Runtime)?;
    Ok(())
}

fn game_of(spec: &ResolvedSpec) -> GameMatrix {
    GameMatrix::new(spec.t, spec.s).expect("resolve() validated T and S")
}

#[derive(Serialize)]
struct AggregateOnly {
    aggregate: Summary,
}

fn aggregate_summary(results: &[EpisodeResult]) -> Result<Summary, CliError> {
    aggregate(results).map_err(|e| CliError::Runtime(anyhow!(e)))
}

fn cmd_run(spec: ResolvedSpec, out: OutDir) -> Result<(), CliError> {
    let game = game_of(&spec);
    let (label, policy) = build_policy(&spec)?;
    let cfg = spec.sim_config();
    let results = run_batch(&cfg, &game, &policy, spec.replicates)?;

    let mut rows = Vec::new();
    let ctx = RowCtx { spec: &spec, label: &label, w: spec.w, w2: 0.0, t: spec.t, s: spec.s };
    rows_from(&ctx, &results, &mut rows);
    let summary = AggregateOnly { aggregate: aggregate_summary(&results)? };
    let seeds = seeds_of(&spec, spec.replicates);
    eprintln!(
        "run: {} episodes, mean coop {:.4}",
        results.len(),
        summary.aggregate.coop_fraction.mean
    );
    finish(&out, &rows, &summary, Manifest::new(spec, seeds))
}

fn axis(points: usize, lo: f64, hi: f64, fallback: f64) -> Vec<f64> {
    if points == 1 {
        return vec![fallback];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

fn cmd_sweep_ts(spec: ResolvedSpec, out: OutDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Cell {
        #[serde(rename = "T")]
        t: f64,
        #[serde(rename = "S")]
        s: f64,
        summary: Summary,
    }
    #[derive(Serialize)]
    struct SweepSummary {
        cells: Vec<Cell>,
    }

    let grid = spec.grid.expect("resolved SweepTS has grid");
    let (label, policy) = build_policy(&spec)?;
    let base = spec.sim_config();

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for t in axis(grid, 0.0, 2.0, spec.t) {
        for s in axis(grid, -1.0, 1.0, spec.s) {
            let game = GameMatrix::new(t, s)
                .map_err(|e| CliError::Runtime(anyhow!("grid point T={t}, S={s}: {e}")))?;
            let results = run_batch(&base, &game, &policy, spec.replicates)?;
            let ctx = RowCtx { spec: &spec, label: &label, w: spec.w, w2: 0.0, t, s };
            rows_from(&ctx, &results, &mut rows);
            cells.push(Cell { t, s, summary: aggregate_summary(&results)? });
        }
    }
    eprintln!("sweep-ts: {} cells x {} replicates", cells.len(), spec.replicates);
    let seeds = seeds_of(&spec, spec.replicates);
    finish(&out, &rows, &SweepSummary { cells }, Manifest::new(spec, seeds))
}

fn cmd_sweep_w(spec: ResolvedSpec, out: OutDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Cell {
        #[serde(rename = "W", with = "rate_serde")]
        w: f64,
        summary: Summary,
    }
    #[derive(Serialize)]
    struct SweepSummary {
        cells: Vec<Cell>,
    }

    let w_list = spec.w_list.clone().expect("resolved SweepW has W_list");
    let (label, policy) = build_policy(&spec)?;
    let game = game_of(&spec);

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &w in &w_list {
        let mut cfg = spec.sim_config();
        cfg.w = w;
        cfg.validate()
            .map_err(|e| CliError::Validation(format!("field `W_list`: {e}")))?;
        let results = run_batch(&cfg, &game, &policy, spec.replicates)?;
        let ctx = RowCtx { spec: &spec, label: &label, w, w2: 0.0, t: spec.t, s: spec.s };
        rows_from(&ctx, &results, &mut rows);
        cells.push(Cell { w, summary: aggregate_summary(&results)? });
    }
    eprintln!("sweep-w: {} cells x {} replicates", cells.len(), spec.replicates);
    let seeds = seeds_of(&spec, spec.replicates);
    finish(&out, &rows, &SweepSummary { cells }, Manifest::new(spec, seeds))
}

fn mix_label(mix: &[(String, f64)]) -> String {
    mix.iter()
        .map(|(name, f)| format!("{name}:{f}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn adoption_rows(
    spec: &ResolvedSpec,
    w: f64,
    w2: f64,
    mix: &[(String, f64)],
    results: &[EpisodeResult],
    rows: &mut Vec<AdoptionRow>,
) {
    for (run, r) in results.iter().enumerate() {
        let per = r.per_mediator.as_ref().expect("competition episode");
        for (mediator, (name, initial)) in mix.iter().enumerate() {
            let stats = per[&mediator];
            rows.push(AdoptionRow {
                run,
                seed: replicate_seed(spec.seed, run),
                w,
                w2,
                mediator,
                policy: name.clone(),
                initial_share: *initial,
                final_share: stats.share,
                rewire_requests: stats.rewire_requests,
            });
        }
    }
}

fn competition_config(spec: &ResolvedSpec, w: f64, w2: f64) -> CompetitionConfig {
    let mut base = spec.sim_config();
    base.w = w;
    CompetitionConfig {
        base,
        w2,
        beta_med: spec.beta_med.expect("resolved competition spec"),
        mix: spec.mix.clone().expect("resolved competition spec"),
    }
}

fn cmd_compete(spec: ResolvedSpec, out: OutDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct CompeteSummary {
        aggregate: Summary,
        adoption: AdoptionSummary,
    }

    let game = game_of(&spec);
    let w2 = spec.w2.expect("resolved Compete has W2");
    let cfg = competition_config(&spec, spec.w, w2);
    let (results, adoption) = run_adoption_experiment(&cfg, &game, spec.replicates)
        .map_err(|e| CliError::Runtime(anyhow!("competition failed: {e}")))?;

    let label = mix_label(spec.mix.as_ref().unwrap());
    let mut rows = Vec::new();
    let ctx = RowCtx { spec: &spec, label: &label, w: spec.w, w2, t: spec.t, s: spec.s };
    rows_from(&ctx, &results, &mut rows);
    let mut arows = Vec::new();
    adoption_rows(&spec, spec.w, w2, spec.mix.as_ref().unwrap(), &results, &mut arows);
    out.write_csv("adoption.csv", &arows).map_err(CliError::Runtime)?;

    let summary = CompeteSummary { aggregate: aggregate_summary(&results)?, adoption };
    eprintln!(
        "compete: {} runs, mean coop {:.4}, final shares {:?}",
        spec.replicates, summary.aggregate.coop_fraction.mean, summary.adoption.mean_shares
    );
    let seeds = seeds_of(&spec, spec.replicates);
    finish(&out, &rows, &summary, Manifest::new(spec, seeds))
}

fn cmd_sweep_w1w2(spec: ResolvedSpec, out: OutDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Cell {
        #[serde(rename = "W", with = "rate_serde")]
        w: f64,
        #[serde(rename = "W2", with = "rate_serde")]
        w2: f64,
        adoption: AdoptionSummary,
    }
    #[derive(Serialize)]
    struct SweepSummary {
        cells: Vec<Cell>,
    }

    let game = game_of(&spec);
    let w_list = spec.w_list.clone().expect("resolved SweepW1W2");
    let w2_list = spec.w2_list.clone().expect("resolved SweepW1W2");
    let label = mix_label(spec.mix.as_ref().unwrap());

    let mut rows = Vec::new();
    let mut arows = Vec::new();
    let mut cells = Vec::new();
    for &w in &w_list {
        for &w2 in &w2_list {
            let cfg = competition_config(&spec, w, w2);
            cfg.base
                .validate()
                .map_err(|e| CliError::Validation(format!("field `W_list`: {e}")))?;
            let (results, adoption) = run_adoption_experiment(&cfg, &game, spec.replicates)
                .map_err(|e| CliError::Runtime(anyhow!("cell W={w}, W2={w2}: {e}")))?;
            let ctx = RowCtx { spec: &spec, label: &label, w, w2, t: spec.t, s: spec.s };
            rows_from(&ctx, &results, &mut rows);
            adoption_rows(&spec, w, w2, spec.mix.as_ref().unwrap(), &results, &mut arows);
            cells.push(Cell { w, w2, adoption });
        }
    }
    out.write_csv("adoption.csv", &arows).map_err(CliError::Runtime)?;
    eprintln!("sweep-w1w2: {} cells x {} runs", cells.len(), spec.replicates);
    let seeds = seeds_of(&spec, spec.replicates);
    finish(&out, &rows, &SweepSummary { cells }, Manifest::new(spec, seeds))
}

fn cmd_train(spec: ResolvedSpec, out: OutDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct TrainSummary {
        mean_eval_reward: f64,
        aggregate: Summary,
    }

    let game = game_of(&spec);
    let cfg = spec.sim_config();
    let trainer = TrainerConfig {
        updates: spec.updates.unwrap(),
        batch_size: spec.batch_size.unwrap(),
        learning_rate: spec.learning_rate.unwrap(),
        baseline_decay: spec.baseline_decay.unwrap(),
        reward: spec.reward.unwrap(),
    };
    let mut policy = RankingPolicy::init(spec.hidden_width.unwrap(), spec.seed);
    let log = train(&mut policy, &cfg, &game, &trainer)
        .map_err(|e| CliError::Runtime(anyhow!("training failed: {e}")))?;
    out.write_training_log(&log).map_err(CliError::Runtime)?;
    out.write_json("checkpoint.json", &policy.to_checkpoint())
        .map_err(CliError::Runtime)?;

    // evaluation episodes use seeds disjoint from every training episode
    let eval_episodes = spec.eval_episodes.unwrap();
    let mut eval_cfg = cfg;
    eval_cfg.seed = replicate_seed(cfg.seed, trainer.updates * trainer.batch_size);
    let report = evaluate_policy(&policy, &eval_cfg, &game, trainer.reward, eval_episodes)
        .map_err(|e| CliError::Runtime(anyhow!("evaluation failed: {e}")))?;

    let mut rows = Vec::new();
    for (i, r) in report.results.iter().enumerate() {
        rows.push(RunRow::new(
            RowMeta {
                seed: replicate_seed(eval_cfg.seed, i),
                policy: "LEARNED",
                n: spec.n,
                k: spec.k,
                beta: spec.beta,
                w: spec.w,
                w2: 0.0,
                t: spec.t,
                s: spec.s,
            },
            r,
        ));
    }
    let summary = TrainSummary {
        mean_eval_reward: report.mean_reward,
        aggregate: report.summary.clone(),
    };
    eprintln!(
        "train: {} updates, eval mean reward {:.4} over {} episodes",
        trainer.updates, report.mean_reward, eval_episodes
    );
    let seeds: Vec<u64> = (0..eval_episodes)
        .map(|i| replicate_seed(eval_cfg.seed, i))
        .collect();
    finish(&out, &rows, &summary, Manifest::new(spec, seeds))
}

fn cmd_eval(spec: ResolvedSpec, out: OutDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct EvalSummary {
        mean_eval_reward: f64,
        aggregate: Summary,
    }

    let game = game_of(&spec);
    let cfg = spec.sim_config();
    let net = load_checkpoint(spec.checkpoint.as_ref().unwrap())?;
    let episodes = spec.eval_episodes.unwrap();
    let report = evaluate_policy(&net, &cfg, &game, spec.reward.unwrap(), episodes)
        .map_err(|e| CliError::Runtime(anyhow!("evaluation failed: {e}")))?;

    let mut rows = Vec::new();
    let ctx = RowCtx { spec: &spec, label: "LEARNED", w: spec.w, w2: 0.0, t: spec.t, s: spec.s };
    rows_from(&ctx, &report.results, &mut rows);
    let summary = EvalSummary {
        mean_eval_reward: report.mean_reward,
        aggregate: report.summary.clone(),
    };
    eprintln!(
        "eval: mean reward {:.4} over {} episodes",
        report.mean_reward, episodes
    );
    let seeds = seeds_of(&spec, episodes);
    finish(&out, &rows, &summary, Manifest::new(spec, seeds))
}
