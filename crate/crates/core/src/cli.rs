//! Command-line entry point.
//!
//! Every subcommand writes its outputs plus a `<output>.manifest.json` run
//! manifest (parameters, seed, tool version, SHA-256 of each output). Exit
//! codes: 0 on success, 2 on usage or parameter errors, 1 on I/O failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{self, Chooser, ExperimentConfig, Pooling};
use crate::bandit::{self, ScanGrid};
use crate::elo::{self, FitOptions};
use crate::error::{Error, Result};
use crate::mcts::{self, Agent, SearchConfig};
use crate::mdp;
use crate::solver::{self, RewardKind};
use crate::svg;

#[derive(Debug, Parser)]
#[command(
    name = "scorewin",
    version,
    about = "Score-optimal versus winrate-optimal play experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan a grid of two-armed Gaussian bandits for score/outcome disagreement.
    BanditScan(BanditScanArgs),
    /// Generate a random action-shared tree MDP as JSON.
    GenMdp(GenMdpArgs),
    /// Solve an MDP exactly for one reward kind.
    Solve(SolveArgs),
    /// Winrate loss of the score-optimal policy by tree level.
    Fig3(Fig3Args),
    /// Variance preference of disagreeing optimal policies against best winrate.
    Fig4(Fig4Args),
    /// Play two tree-search agents on one MDP.
    MctsMatch(MctsMatchArgs),
    /// Maximum-likelihood Elo ratings from a games table.
    Elo(EloArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RewardArg {
    Score,
    Outcome,
}

impl From<RewardArg> for RewardKind {
    fn from(r: RewardArg) -> Self {
        match r {
            RewardArg::Score => RewardKind::Score,
            RewardArg::Outcome => RewardKind::Outcome,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PoolingArg {
    Pooled,
    PerMdp,
}

impl From<PoolingArg> for Pooling {
    fn from(p: PoolingArg) -> Self {
        match p {
            PoolingArg::Pooled => Pooling::Pooled,
            PoolingArg::PerMdp => Pooling::PerMdp,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct BanditScanArgs {
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    mu_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    mu_max: f64,
    #[arg(long, default_value_t = 0.5)]
    mu_step: f64,
    #[arg(long, default_value_t = 0.25)]
    sigma_min: f64,
    #[arg(long, default_value_t = 4.0)]
    sigma_max: f64,
    #[arg(long, default_value_t = 0.25)]
    sigma_step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GenMdpArgs {
    #[arg(long, default_value_t = 2)]
    branch: usize,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long, value_enum)]
    reward: RewardArg,
    /// Write the result JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    policy_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 2)]
    branch: usize,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 2000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PoolingArg::Pooled)]
    pooling: PoolingArg,
    /// Worker threads; 0 uses all cores. Outputs do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct Fig3Args {
    #[command(flatten)]
    #[serde(flatten)]
    common: ExperimentArgs,
}

#[derive(Debug, Args, Serialize)]
struct Fig4Args {
    #[arg(long, value_enum, default_value_t = RewardArg::Outcome)]
    plus: RewardArg,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: ExperimentArgs,
}

#[derive(Debug, Args, Serialize)]
struct MctsMatchArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long)]
    visits_a: u32,
    #[arg(long, value_enum)]
    reward_a: RewardArg,
    #[arg(long)]
    visits_b: u32,
    #[arg(long, value_enum)]
    reward_b: RewardArg,
    /// Defaults to 1.5 for the score reward and 1.0 for the outcome reward.
    #[arg(long)]
    c_puct_a: Option<f64>,
    #[arg(long)]
    c_puct_b: Option<f64>,
    #[arg(long, default_value_t = 1)]
    rollouts: u32,
    #[arg(long, default_value_t = 1000)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EloArgs {
    #[arg(long)]
    games: PathBuf,
    #[arg(long)]
    anchors: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Virtual wins per direction added to every played pair (0 = plain MLE).
    #[arg(long, default_value_t = 0.0)]
    virtual_games: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub base_seed: Option<u64>,
    pub tool_version: String,
    /// Output path to lowercase hex SHA-256.
    pub outputs: BTreeMap<String, String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn open_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Manifest path for a primary output: `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.push((path.to_path_buf(), bytes));
    }

    fn commit<P: Serialize>(
        self,
        subcommand: &str,
        params: &P,
        base_seed: Option<u64>,
    ) -> Result<()> {
        let mut outputs = BTreeMap::new();
        for (path, bytes) in &self.files {
            write_file(path, bytes)?;
            outputs.insert(
                path.display().to_string(),
                hex::encode(Sha256::digest(bytes)),
            );
        }
        let Some((primary, _)) = self.files.first() else {
            return Ok(());
        };
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            parameters: serde_json::to_value(params).expect("parameters serialize"),
            base_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_file(&manifest_path(primary), text.as_bytes())
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn bandit_scan(args: &BanditScanArgs) -> Result<()> {
    let grid = ScanGrid {
        mu_min: args.mu_min,
        mu_max: args.mu_max,
        mu_step: args.mu_step,
        sigma_min: args.sigma_min,
        sigma_max: args.sigma_max,
        sigma_step: args.sigma_step,
        skip_zero_mu: true,
    };
    let rows = bandit::scan(&grid)?;
    let mut buf = Vec::new();
    writeln!(
        buf,
        "mu1,sigma1,mu2,sigma2,score_pref,outcome_pref,disagree"
    )
    .unwrap();
    for r in rows {
        writeln!(
            buf,
            "{},{},{},{},{},{},{}",
            r.mu1, r.sigma1, r.mu2, r.sigma2, r.score_pref, r.outcome_pref, r.disagree
        )
        .unwrap();
    }
    let mut out = Outputs::new();
    out.add(&args.out, buf);
    out.commit("bandit-scan", args, None)
}

fn gen_mdp(args: &GenMdpArgs) -> Result<()> {
    let m = mdp::generate(args.branch, args.depth, args.actions, args.seed)?;
    let mut text = mdp::serialize(&m);
    text.push('\n');
    let mut out = Outputs::new();
    out.add(&args.out, text.into_bytes());
    out.commit("gen-mdp", args, Some(args.seed))
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    reward: RewardKind,
    v: &'a [f64],
    q: Vec<&'a [f64]>,
    policy: &'a [usize],
    ties: usize,
}

fn solve(args: &SolveArgs) -> Result<()> {
    let m = mdp::deserialize(&read_file(&args.mdp)?)?;
    let r = solver::solve_optimal(&m, args.reward.into());
    let doc = SolveDocument {
        reward: r.kind,
        v: &r.v,
        q: (0..m.num_internal()).map(|s| r.q_row(s)).collect(),
        policy: &r.policy.0,
        ties: r.ties,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("solve result serializes");
    text.push('\n');
    let mut out = Outputs::new();
    match &args.out {
        Some(path) => out.add(path, text.into_bytes()),
        None => print!("{text}"),
    }
    if let Some(path) = &args.policy_out {
        let mut p = serde_json::to_string(&r.policy).expect("policy serializes");
        p.push('\n');
        out.add(path, p.into_bytes());
    }
    out.commit("solve", args, None)
}

fn experiment_config(c: &ExperimentArgs, bins: usize) -> ExperimentConfig {
    ExperimentConfig {
        branch: c.branch,
        depth: c.depth,
        num_actions: c.actions,
        runs: c.runs,
        bins,
        base_seed: c.seed,
        pooling: c.pooling.into(),
    }
}

fn curve_outputs(
    c: &ExperimentArgs,
    curve: &analysis::BinnedCurve,
    title: &str,
    x_label: &str,
    y_label: &str,
) -> Outputs {
    let mut buf = Vec::new();
    analysis::write_csv(curve, &mut buf).expect("in-memory write");
    let mut out = Outputs::new();
    out.add(&c.out, buf);
    if let Some(path) = &c.svg {
        out.add(
            path,
            svg::render(curve, title, x_label, y_label).into_bytes(),
        );
    }
    out
}

fn fig3(args: &Fig3Args) -> Result<()> {
    let c = &args.common;
    let cfg = experiment_config(c, 1);
    let report = with_threads(c.threads, || analysis::winrate_gap_by_level(&cfg))??;
    curve_outputs(
        c,
        &report.curve,
        "Winrate loss of the score-optimal policy",
        "level",
        "mean outcome-value gap",
    )
    .commit("fig3", args, Some(c.seed))
}

fn fig4(args: &Fig4Args) -> Result<()> {
    let c = &args.common;
    let cfg = experiment_config(c, args.bins);
    let chooser = match args.plus {
        RewardArg::Outcome => Chooser::Outcome,
        RewardArg::Score => Chooser::Score,
    };
    let report = with_threads(c.threads, || {
        analysis::variance_preference_curve(&cfg, chooser)
    })??;
    curve_outputs(
        c,
        &report.curve,
        "Log variance ratio of chosen vs discarded action",
        "best winrate",
        "median log variance ratio",
    )
    .commit("fig4", args, Some(c.seed))
}

fn mcts_match(args: &MctsMatchArgs) -> Result<()> {
    let m = mdp::deserialize(&read_file(&args.mdp)?)?;
    let agent = |visits: u32, reward: RewardArg, c_puct: Option<f64>| {
        let kind: RewardKind = reward.into();
        let mut cfg = SearchConfig::for_kind(kind, visits, args.seed);
        cfg.rollouts_per_eval = args.rollouts;
        if let Some(c) = c_puct {
            cfg.c_puct = c;
        }
        Agent::Search { kind, cfg }
    };
    let a = agent(args.visits_a, args.reward_a, args.c_puct_a);
    let b = agent(args.visits_b, args.reward_b, args.c_puct_b);
    let report = with_threads(args.threads, || {
        mcts::play_match(&m, &a, &b, args.episodes, args.seed)
    })??;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).expect("in-memory write");
    let mut out = Outputs::new();
    out.add(&args.out, buf);
    out.commit("mcts-match", args, Some(args.seed))
}

fn elo_fit(args: &EloArgs) -> Result<()> {
    let grid = elo::read_grid(open_file(&args.games)?, open_file(&args.anchors)?)?;
    let opts = FitOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        virtual_games: args.virtual_games,
    };
    let ratings = elo::fit(&grid, &opts)?;
    if !ratings.converged {
        eprintln!(
            "warning: elo fit stopped after {} iterations without converging",
            ratings.iterations
        );
    }
    let mut buf = Vec::new();
    elo::write_ratings(&ratings, &mut buf)?;
    let mut out = Outputs::new();
    out.add(&args.out, buf);
    out.commit("elo", args, None)
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::BanditScan(a) => bandit_scan(a),
        Command::GenMdp(a) => gen_mdp(a),
        Command::Solve(a) => solve(a),
        Command::Fig3(a) => fig3(a),
        Command::Fig4(a) => fig4(a),
        Command::MctsMatch(a) => mcts_match(a),
        Command::Elo(a) => elo_fit(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_parameter_error() {
                2
            } else {
                1
            }
        }
    }
}
