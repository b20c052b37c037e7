//! Batch experiments over random action-shared tree MDPs.
//!
//! Two experiments share one replicate scheme: replicate `i` generates its MDP
//! from [`rng::stream`]`(base_seed, i)`, replicates run in parallel on the
//! current rayon pool, and per-replicate results are reduced in index order.
//! Outputs are therefore bit-identical for any thread count.
//!
//! * [`winrate_gap_by_level`]: mean over states of
//!   `v_outcome[pi_outcome](s) - v_outcome[pi_score](s)`, per tree level.
//! * [`variance_preference_curve`]: binned median, against the best winrate, of
//!   the log ratio between the score variances of the actions chosen by two
//!   disagreeing optimal policies.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{self, AstMdp};
use crate::rng;
use crate::solver::{evaluate_policy, score_variance, solve_optimal, Policy, RewardKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Every state weighs once, pooled across all MDPs.
    Pooled,
    /// Aggregate within each MDP first, then aggregate the per-MDP values.
    PerMdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub branch: usize,
    pub depth: usize,
    pub num_actions: usize,
    pub runs: u64,
    pub bins: usize,
    pub base_seed: u64,
    pub pooling: Pooling,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            branch: 2,
            depth: 6,
            num_actions: 2,
            runs: 2000,
            bins: 100,
            base_seed: 0,
            pooling: Pooling::Pooled,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::param("runs must be at least 1"));
        }
        if self.bins == 0 {
            return Err(Error::param("bins must be at least 1"));
        }
        Ok(())
    }

    /// MDP of replicate `index`.
    pub fn replicate(&self, index: u64) -> Result<AstMdp> {
        mdp::generate_with_rng(
            self.branch,
            self.depth,
            self.num_actions,
            &mut rng::stream(self.base_seed, index),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub x_low: f64,
    pub x_high: f64,
    pub count: u64,
    /// `None` when `count == 0`.
    pub aggregate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCurve {
    pub aggregation: Aggregation,
    pub bins: Vec<Bin>,
}

impl BinnedCurve {
    pub fn non_empty(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.bins
            .iter()
            .filter_map(|b| b.aggregate.map(|y| (0.5 * (b.x_low + b.x_high), y)))
    }
}

/// `k`-th of `n` equal-width bins on `[0, 1]`; `x == 1` falls in the last bin.
pub fn unit_bin(x: f64, n: usize) -> usize {
    ((x * n as f64).floor() as usize).min(n - 1)
}

fn unit_edges(k: usize, n: usize) -> (f64, f64) {
    (k as f64 / n as f64, (k + 1) as f64 / n as f64)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Ranks starting at 1, ties receiving their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` with fewer than two points or a constant
/// series.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let mx = mean(&rx)?;
    let my = mean(&ry)?;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Percentile bootstrap interval for the mean at confidence `level`.
pub fn bootstrap_mean_ci(
    values: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Option<(f64, f64)> {
    if values.is_empty() || resamples == 0 {
        return None;
    }
    let mut rng = rng::stream(seed, 0);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lo = ((alpha * resamples as f64).floor() as usize).min(resamples - 1);
    let hi = (((1.0 - alpha) * resamples as f64).ceil() as usize)
        .saturating_sub(1)
        .min(resamples - 1);
    Some((means[lo], means[hi]))
}

fn run_replicates<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&AstMdp) -> Result<T> + Sync,
{
    (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            cfg.replicate(i)
                .and_then(|m| f(&m))
                .map_err(|e| Error::Replicate {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Per-level winrate loss of one MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGaps {
    /// `gap[s] = v_outcome[pi_outcome](s) - v_outcome[pi_score](s)` per flat state.
    pub per_state: Vec<f64>,
    /// Mean gap per level `0..=depth`.
    pub per_level: Vec<f64>,
    pub per_level_sum: Vec<f64>,
    pub score_ties: usize,
    pub outcome_ties: usize,
}

pub fn level_gaps(mdp: &AstMdp) -> Result<LevelGaps> {
    let best = solve_optimal(mdp, RewardKind::Outcome);
    let score = solve_optimal(mdp, RewardKind::Score);
    let cross = evaluate_policy(mdp, &score.policy, RewardKind::Outcome)?;
    let per_state: Vec<f64> = best.v.iter().zip(&cross.v).map(|(a, b)| a - b).collect();
    let mut per_level_sum = Vec::with_capacity(mdp.depth() + 1);
    let mut per_level = Vec::with_capacity(mdp.depth() + 1);
    for l in 0..=mdp.depth() {
        let lo = mdp.level_offset(l);
        let hi = mdp.level_offset(l + 1);
        let sum: f64 = per_state[lo..hi].iter().sum();
        per_level_sum.push(sum);
        per_level.push(sum / (hi - lo) as f64);
    }
    Ok(LevelGaps {
        per_state,
        per_level,
        score_ties: score.ties,
        outcome_ties: best.ties,
        per_level_sum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub curve: BinnedCurve,
    /// `per_replicate[i][level]`.
    pub per_replicate: Vec<Vec<f64>>,
    pub score_ties: usize,
    pub outcome_ties: usize,
}

/// Mean winrate loss of the score-optimal policy, one bin per level.
pub fn winrate_gap_by_level(cfg: &ExperimentConfig) -> Result<GapReport> {
    cfg.validate()?;
    let reps = run_replicates(cfg, level_gaps)?;
    let levels = cfg.depth + 1;
    let per_level_states: Vec<u64> = (0..levels)
        .map(|l| (cfg.branch as u64).pow(l as u32))
        .collect();
    let bins = (0..levels)
        .map(|l| {
            // Every MDP has the same number of states per level, so the two
            // poolings only differ by rounding.
            let aggregate = match cfg.pooling {
                Pooling::Pooled => {
                    let sum: f64 = reps.iter().map(|r| r.per_level_sum[l]).sum();
                    sum / (per_level_states[l] * cfg.runs) as f64
                }
                Pooling::PerMdp => {
                    reps.iter().map(|r| r.per_level[l]).sum::<f64>() / cfg.runs as f64
                }
            };
            Bin {
                x_low: l as f64,
                x_high: (l + 1) as f64,
                count: per_level_states[l] * cfg.runs,
                aggregate: Some(aggregate),
            }
        })
        .collect();
    Ok(GapReport {
        curve: BinnedCurve {
            aggregation: Aggregation::Mean,
            bins,
        },
        score_ties: reps.iter().map(|r| r.score_ties).sum(),
        outcome_ties: reps.iter().map(|r| r.outcome_ties).sum(),
        per_replicate: reps.into_iter().map(|r| r.per_level).collect(),
    })
}

/// Which optimal policy plays the role of the chooser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chooser {
    /// Chooser is outcome-optimal, the discarded action is score-optimal.
    Outcome,
    /// Chooser is score-optimal, the discarded action is outcome-optimal.
    Score,
}

impl std::str::FromStr for Chooser {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outcome" => Ok(Chooser::Outcome),
            "score" => Ok(Chooser::Score),
            other => Err(Error::param(format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarPrefSample {
    /// Best winrate `v_outcome[pi_outcome](s)`.
    pub x: f64,
    /// `ln Var(s, chosen) - ln Var(s, discarded)`, variances along the chooser's policy.
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    EqualAction,
    ZeroVariance,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarPrefSamples {
    pub samples: Vec<VarPrefSample>,
    pub examined: u64,
    pub equal_action: u64,
    pub zero_variance: u64,
    pub numerical_errors: u64,
}

/// Variance-preference samples of every non-leaf state of one MDP.
pub fn variance_preference_samples(mdp: &AstMdp, chooser: Chooser) -> Result<VarPrefSamples> {
    let outcome = solve_optimal(mdp, RewardKind::Outcome);
    let score = solve_optimal(mdp, RewardKind::Score);
    let (plus, minus): (&Policy, &Policy) = match chooser {
        Chooser::Outcome => (&outcome.policy, &score.policy),
        Chooser::Score => (&score.policy, &outcome.policy),
    };
    let var = score_variance(mdp, plus)?;
    let mut out = VarPrefSamples {
        numerical_errors: var.numerical_errors.len() as u64,
        ..Default::default()
    };
    for s in 0..mdp.num_internal() {
        out.examined += 1;
        let chosen = plus.action(s);
        let discarded = minus.action(s);
        if chosen == discarded {
            out.equal_action += 1;
            continue;
        }
        let vc = var.get(s, chosen);
        let vd = var.get(s, discarded);
        if vc <= 0.0 || vd <= 0.0 {
            out.zero_variance += 1;
            continue;
        }
        out.samples.push(VarPrefSample {
            x: outcome.v[s],
            y: vc.ln() - vd.ln(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarPrefReport {
    pub curve: BinnedCurve,
    pub samples: Vec<VarPrefSample>,
    pub examined: u64,
    pub equal_action: u64,
    pub zero_variance: u64,
    pub numerical_errors: u64,
}

impl VarPrefReport {
    /// Median `y` over samples with `lo <= x <= hi`.
    pub fn band_median(&self, lo: f64, hi: f64) -> Option<f64> {
        let ys: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.x >= lo && s.x <= hi)
            .map(|s| s.y)
            .collect();
        median(&ys)
    }

    /// Spearman correlation between bin centre and median `y` over non-empty bins.
    pub fn spearman(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self.curve.non_empty().unzip();
        spearman(&xs, &ys)
    }
}

fn bin_samples(samples: &[VarPrefSample], bins: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); bins];
    for s in samples {
        out[unit_bin(s.x, bins)].push(s.y);
    }
    out
}

/// Binned median of the variance log ratio against the best winrate.
pub fn variance_preference_curve(
    cfg: &ExperimentConfig,
    chooser: Chooser,
) -> Result<VarPrefReport> {
    cfg.validate()?;
    let reps = run_replicates(cfg, |m| variance_preference_samples(m, chooser))?;
    let n = cfg.bins;
    let per_bin = match cfg.pooling {
        Pooling::Pooled => {
            let all: Vec<VarPrefSample> = reps
                .iter()
                .flat_map(|r| r.samples.iter().copied())
                .collect();
            bin_samples(&all, n)
                .into_iter()
                .map(|ys| (ys.len() as u64, median(&ys)))
                .collect::<Vec<_>>()
        }
        Pooling::PerMdp => {
            let mut counts = vec![0u64; n];
            let mut medians = vec![Vec::new(); n];
            for r in &reps {
                for (k, ys) in bin_samples(&r.samples, n).into_iter().enumerate() {
                    counts[k] += ys.len() as u64;
                    if let Some(m) = median(&ys) {
                        medians[k].push(m);
                    }
                }
            }
            counts
                .into_iter()
                .zip(medians)
                .map(|(c, m)| (c, median(&m)))
                .collect()
        }
    };
    let bins = per_bin
        .into_iter()
        .enumerate()
        .map(|(k, (count, aggregate))| {
            let (x_low, x_high) = unit_edges(k, n);
            Bin {
                x_low,
                x_high,
                count,
                aggregate,
            }
        })
        .collect();
    Ok(VarPrefReport {
        curve: BinnedCurve {
            aggregation: Aggregation::Median,
            bins,
        },
        examined: reps.iter().map(|r| r.examined).sum(),
        equal_action: reps.iter().map(|r| r.equal_action).sum(),
        zero_variance: reps.iter().map(|r| r.zero_variance).sum(),
        numerical_errors: reps.iter().map(|r| r.numerical_errors).sum(),
        samples: reps.into_iter().flat_map(|r| r.samples).collect(),
    })
}

pub const CSV_HEADER: &str = "x_low,x_high,count,aggregate";

/// CSV with columns `x_low,x_high,count,aggregate`, LF line endings.
///
/// Reals use Rust's shortest round-trip formatting (at most 17 significant
/// digits), so parsing recovers every value exactly. Empty bins leave the
/// aggregate cell empty.
pub fn write_csv<W: Write>(curve: &BinnedCurve, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for b in &curve.bins {
        match b.aggregate {
            Some(y) => writeln!(out, "{},{},{},{}", b.x_low, b.x_high, b.count, y)?,
            None => writeln!(out, "{},{},{},", b.x_low, b.x_high, b.count)?,
        }
    }
    Ok(())
}

pub fn emit_csv(curve: &BinnedCurve, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(curve, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parses the output of [`write_csv`]. The aggregation kind is not stored in
/// the file and must be supplied.
pub fn read_csv<R: BufRead>(input: R, aggregation: Aggregation) -> Result<BinnedCurve> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h == CSV_HEADER => {}
        _ => return Err(Error::format("header", format!("expected `{CSV_HEADER}`"))),
    }
    let mut bins = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::format(format!("row {row}"), e.to_string()))?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::format(format!("row {row}"), "expected 4 cells"));
        }
        let real = |i: usize, name: &str| -> Result<f64> {
            cells[i].parse().map_err(|_| {
                Error::format(
                    format!("row {row}.{name}"),
                    format!("bad number `{}`", cells[i]),
                )
            })
        };
        bins.push(Bin {
            x_low: real(0, "x_low")?,
            x_high: real(1, "x_high")?,
            count: cells[2]
                .parse()
                .map_err(|_| Error::format(format!("row {row}.count"), "bad count"))?,
            aggregate: if cells[3].is_empty() {
                None
            } else {
                Some(real(3, "aggregate")?)
            },
        });
    }
    Ok(BinnedCurve { aggregation, bins })
}
