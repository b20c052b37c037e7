//! PUCT tree search over action-shared tree MDPs.
//!
//! Selection follows `argmax_a Q(a) + U(a)` with
//! `U(a) = c_puct * P(a) * sqrt(sum_b N(b)) / (1 + N(a))` and uniform priors.
//! Environment transitions are sampled on every simulation rather than
//! expanded as chance nodes, so the value noise the agent sees comes straight
//! from the MDP's randomness. A newly reached state is evaluated by uniform
//! random rollouts to a leaf; the backed-up value is the leaf score scaled by
//! `1 / b^d` (score reward) or the win indicator (outcome reward).

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{AstMdp, StateId};
use crate::rng;
use crate::solver::{Policy, RewardKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub visits: u32,
    pub c_puct: f64,
    pub rollouts_per_eval: u32,
    pub seed: u64,
}

impl SearchConfig {
    /// `c_puct` is 1.5 for the score reward and 1.0 for the outcome reward.
    pub fn for_kind(kind: RewardKind, visits: u32, seed: u64) -> Self {
        Self {
            visits,
            c_puct: default_c_puct(kind),
            rollouts_per_eval: 1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.visits == 0 {
            return Err(Error::param("visits must be at least 1"));
        }
        if !(self.c_puct > 0.0 && self.c_puct.is_finite()) {
            return Err(Error::param(format!(
                "c_puct must be positive, got {}",
                self.c_puct
            )));
        }
        if self.rollouts_per_eval == 0 {
            return Err(Error::param("rollouts_per_eval must be at least 1"));
        }
        Ok(())
    }
}

pub fn default_c_puct(kind: RewardKind) -> f64 {
    match kind {
        RewardKind::Score => 1.5,
        RewardKind::Outcome => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Most visited root action, lowest index on ties.
    pub action: usize,
    pub visits: Vec<u32>,
    /// Mean backed-up value per root action; 0 for unvisited actions.
    pub q: Vec<f64>,
}

const NONE: u32 = u32::MAX;

/// Search tree stored as flat arrays; node `i` owns stats `i * A .. (i + 1) * A`
/// and child slots `i * b .. (i + 1) * b`.
struct Tree {
    actions: usize,
    branch: usize,
    state: Vec<usize>,
    n: Vec<u32>,
    w: Vec<f64>,
    kids: Vec<u32>,
}

impl Tree {
    fn new(mdp: &AstMdp, root: usize) -> Self {
        let mut t = Tree {
            actions: mdp.num_actions(),
            branch: mdp.branch(),
            state: Vec::new(),
            n: Vec::new(),
            w: Vec::new(),
            kids: Vec::new(),
        };
        t.push(root);
        t
    }

    fn push(&mut self, state: usize) -> u32 {
        let id = self.state.len() as u32;
        self.state.push(state);
        self.n.extend(std::iter::repeat_n(0, self.actions));
        self.w.extend(std::iter::repeat_n(0.0, self.actions));
        self.kids.extend(std::iter::repeat_n(NONE, self.branch));
        id
    }

    fn q(&self, node: usize, a: usize) -> f64 {
        let i = node * self.actions + a;
        if self.n[i] == 0 {
            0.0
        } else {
            self.w[i] / self.n[i] as f64
        }
    }

    fn select(&self, node: usize, c_puct: f64) -> usize {
        let stats = &self.n[node * self.actions..(node + 1) * self.actions];
        let total: u32 = stats.iter().sum();
        let explore = c_puct * (total as f64).sqrt() / self.actions as f64;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (a, &na) in stats.iter().enumerate() {
            let score = self.q(node, a) + explore / (1.0 + na as f64);
            if score > best_score {
                best = a;
                best_score = score;
            }
        }
        best
    }
}

fn leaf_value(mdp: &AstMdp, kind: RewardKind, leaf: usize) -> f64 {
    let score = mdp.leaf_score(leaf);
    match kind {
        RewardKind::Score => score as f64 / mdp.score_bound() as f64,
        RewardKind::Outcome => kind.leaf_reward(score),
    }
}

fn rollout<R: Rng>(mdp: &AstMdp, kind: RewardKind, mut s: usize, rng: &mut R) -> f64 {
    while !mdp.is_leaf(s) {
        let a = rng.random_range(0..mdp.num_actions());
        s = mdp.sample_child(s, a, rng);
    }
    leaf_value(mdp, kind, s)
}

pub fn search(
    mdp: &AstMdp,
    root: StateId,
    kind: RewardKind,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    let s = mdp.flat(root)?;
    search_from(mdp, s, kind, cfg, &mut rng::stream(cfg.seed, 0))
}

/// Search from flat state `root`, drawing all randomness from `rng`.
pub fn search_from<R: Rng>(
    mdp: &AstMdp,
    root: usize,
    kind: RewardKind,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult> {
    cfg.validate()?;
    if root >= mdp.num_states() {
        return Err(Error::param(format!("state {root} out of range")));
    }
    if mdp.is_leaf(root) {
        return Err(Error::param("search root is a leaf"));
    }
    let mut tree = Tree::new(mdp, root);
    let mut path: Vec<(usize, usize)> = Vec::with_capacity(mdp.depth());
    for _ in 0..cfg.visits {
        path.clear();
        let mut node = 0usize;
        let value = loop {
            let s = tree.state[node];
            let a = tree.select(node, cfg.c_puct);
            path.push((node, a));
            let child = mdp.sample_child(s, a, rng);
            if mdp.is_leaf(child) {
                break leaf_value(mdp, kind, child);
            }
            let slot = node * tree.branch + (child - (mdp.branch() * s + 1));
            match tree.kids[slot] {
                NONE => {
                    let id = tree.push(child);
                    tree.kids[slot] = id;
                    let total: f64 = (0..cfg.rollouts_per_eval)
                        .map(|_| rollout(mdp, kind, child, rng))
                        .sum();
                    break total / cfg.rollouts_per_eval as f64;
                }
                next => node = next as usize,
            }
        };
        for &(node, a) in &path {
            let i = node * tree.actions + a;
            tree.n[i] += 1;
            tree.w[i] += value;
        }
    }
    let visits = tree.n[..tree.actions].to_vec();
    let q = (0..tree.actions).map(|a| tree.q(0, a)).collect();
    let mut action = 0;
    for a in 1..visits.len() {
        if visits[a] > visits[action] {
            action = a;
        }
    }
    Ok(SearchResult { action, visits, q })
}

/// A player in a match.
#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Search {
        kind: RewardKind,
        cfg: SearchConfig,
    },
    /// Plays a fixed policy, e.g. an exact optimum from the solver.
    Policy(Policy),
}

impl Agent {
    fn act(
        &self,
        mdp: &AstMdp,
        s: usize,
        match_seed: u64,
        episode: u64,
        step: u64,
    ) -> Result<usize> {
        match self {
            Agent::Search { kind, cfg } => {
                let key = rng::derive_seed(rng::derive_seed(cfg.seed, match_seed), episode);
                let mut r = rng::stream(key, step);
                Ok(search_from(mdp, s, *kind, cfg, &mut r)?.action)
            }
            Agent::Policy(pi) => {
                if pi.len() != mdp.num_internal() {
                    return Err(Error::param("policy does not cover the mdp"));
                }
                let a = pi.action(s);
                if a >= mdp.num_actions() {
                    return Err(Error::param(format!("policy action {a} out of range")));
                }
                Ok(a)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub score: i64,
    pub outcome: u8,
}

/// Plays one episode from the root. Environment draws come from `env_seed`,
/// one uniform per step, so agents facing the same `env_seed` share draws.
pub fn play_episode(
    mdp: &AstMdp,
    agent: &Agent,
    match_seed: u64,
    episode: u64,
) -> Result<EpisodeRecord> {
    let mut env = rng::stream(rng::derive_seed(match_seed, episode), u64::MAX);
    let mut s = 0;
    let mut step = 0;
    while !mdp.is_leaf(s) {
        let a = agent.act(mdp, s, match_seed, episode, step)?;
        s = mdp.child_for_uniform(s, a, env.random::<f64>());
        step += 1;
    }
    let score = mdp.leaf_score(s);
    Ok(EpisodeRecord {
        episode,
        score,
        outcome: u8::from(score > 0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub mean_score: f64,
    pub mean_outcome: f64,
    /// Standard error of `mean_outcome`.
    pub outcome_se: f64,
}

impl AgentSummary {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let n = records.len() as f64;
        let mean_score = records.iter().map(|r| r.score as f64).sum::<f64>() / n;
        let mean_outcome = records.iter().map(|r| r.outcome as f64).sum::<f64>() / n;
        let var = if records.len() > 1 {
            records
                .iter()
                .map(|r| (r.outcome as f64 - mean_outcome).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        AgentSummary {
            mean_score,
            mean_outcome,
            outcome_se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub a: Vec<EpisodeRecord>,
    pub b: Vec<EpisodeRecord>,
    pub summary_a: AgentSummary,
    pub summary_b: AgentSummary,
}

impl MatchReport {
    /// Mean and standard error of the per-episode outcome difference `a - b`.
    /// Both agents see the same environment draws in each episode.
    pub fn paired_outcome_gap(&self) -> (f64, f64) {
        let d: Vec<f64> = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(x, y)| x.outcome as f64 - y.outcome as f64)
            .collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let var = if d.len() > 1 {
            d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    }

    /// CSV with columns `episode,agent,score,outcome`; agents are `A` and `B`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "episode,agent,score,outcome")?;
        for (ra, rb) in self.a.iter().zip(&self.b) {
            writeln!(out, "{},A,{},{}", ra.episode, ra.score, ra.outcome)?;
            writeln!(out, "{},B,{},{}", rb.episode, rb.score, rb.outcome)?;
        }
        Ok(())
    }
}

/// Each episode runs both agents independently from the root with shared
/// environment draws. Episodes run in parallel; results are in episode order.
pub fn play_match(
    mdp: &AstMdp,
    a: &Agent,
    b: &Agent,
    episodes: u64,
    seed: u64,
) -> Result<MatchReport> {
    if episodes == 0 {
        return Err(Error::param("episodes must be at least 1"));
    }
    let pairs: Vec<(EpisodeRecord, EpisodeRecord)> = (0..episodes)
        .into_par_iter()
        .map(|e| {
            Ok((
                play_episode(mdp, a, seed, e)?,
                play_episode(mdp, b, seed, e)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (ra, rb): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(MatchReport {
        summary_a: AgentSummary::from_records(&ra),
        summary_b: AgentSummary::from_records(&rb),
        a: ra,
        b: rb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::generate;
    use crate::solver::solve_optimal;

    fn fixture() -> AstMdp {
        AstMdp::with_unbounded_scores(
            3,
            1,
            2,
            vec![10, 1, -1],
            vec![vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]]],
        )
        .unwrap()
    }

    const ROOT: StateId = StateId { level: 0, index: 0 };

    #[test]
    fn single_visit_picks_first_action() {
        let m = generate(2, 3, 3, 1).unwrap();
        for kind in [RewardKind::Score, RewardKind::Outcome] {
            let r = search(&m, ROOT, kind, &SearchConfig::for_kind(kind, 1, 9)).unwrap();
            assert_eq!(r.action, 0);
            assert_eq!(r.visits, vec![1, 0, 0]);
        }
    }

    #[test]
    fn visits_are_conserved_and_q_bounded() {
        let m = generate(2, 4, 2, 3).unwrap();
        for kind in [RewardKind::Score, RewardKind::Outcome] {
            for visits in [1, 7, 250] {
                let cfg = SearchConfig {
                    rollouts_per_eval: 2,
                    ..SearchConfig::for_kind(kind, visits, 4)
                };
                let r = search(&m, ROOT, kind, &cfg).unwrap();
                assert_eq!(r.visits.iter().sum::<u32>(), visits);
                let lo = if kind == RewardKind::Score { -1.0 } else { 0.0 };
                assert!(r.q.iter().all(|&q| (lo..=1.0).contains(&q)), "{:?}", r.q);
            }
        }
    }

    #[test]
    fn search_is_deterministic() {
        let m = generate(2, 4, 2, 3).unwrap();
        let cfg = SearchConfig::for_kind(RewardKind::Score, 300, 17);
        assert_eq!(
            search(&m, ROOT, RewardKind::Score, &cfg).unwrap(),
            search(&m, ROOT, RewardKind::Score, &cfg).unwrap()
        );
    }

    #[test]
    fn search_rejects_bad_input() {
        let m = fixture();
        let cfg = SearchConfig::for_kind(RewardKind::Score, 10, 0);
        let leaf = StateId { level: 1, index: 0 };
        assert!(matches!(
            search(&m, leaf, RewardKind::Score, &cfg),
            Err(Error::Param(_))
        ));
        let zero = SearchConfig { visits: 0, ..cfg };
        assert!(search(&m, ROOT, RewardKind::Score, &zero).is_err());
    }

    #[test]
    fn fixture_budgeted_search_finds_each_optimum() {
        let m = fixture();
        for (kind, want) in [(RewardKind::Score, 0), (RewardKind::Outcome, 1)] {
            let hits = (0..20)
                .filter(|&seed| {
                    let cfg = SearchConfig::for_kind(kind, 2000, seed);
                    search(&m, ROOT, kind, &cfg).unwrap().action == want
                })
                .count();
            assert!(hits >= 19, "{kind:?}: {hits}/20");
        }
    }

    #[test]
    fn search_from_inner_state() {
        let m = generate(2, 3, 2, 5).unwrap();
        let id = StateId { level: 2, index: 3 };
        let r = search(
            &m,
            id,
            RewardKind::Outcome,
            &SearchConfig::for_kind(RewardKind::Outcome, 50, 1),
        )
        .unwrap();
        assert_eq!(r.visits.iter().sum::<u32>(), 50);
    }

    #[test]
    fn identical_agents_identical_results() {
        let m = generate(2, 3, 2, 8).unwrap();
        let agent = Agent::Search {
            kind: RewardKind::Score,
            cfg: SearchConfig::for_kind(RewardKind::Score, 30, 2),
        };
        let r = play_match(&m, &agent, &agent, 50, 6).unwrap();
        assert_eq!(r.a, r.b);
        assert_eq!(r.summary_a, r.summary_b);
        assert_eq!(r.paired_outcome_gap(), (0.0, 0.0));
    }

    #[test]
    fn single_episode_summary() {
        let m = generate(2, 3, 2, 8).unwrap();
        let pi = solve_optimal(&m, RewardKind::Outcome).policy;
        let r = play_match(&m, &Agent::Policy(pi.clone()), &Agent::Policy(pi), 1, 3).unwrap();
        assert_eq!(r.summary_a.mean_score, r.a[0].score as f64);
        assert_eq!(r.summary_a.mean_outcome, r.a[0].outcome as f64);
        assert_eq!(r.summary_a.outcome_se, 0.0);
    }

    #[test]
    fn match_csv_layout() {
        let m = fixture();
        let a = Agent::Policy(Policy(vec![0]));
        let b = Agent::Policy(Policy(vec![1]));
        let r = play_match(&m, &a, &b, 2, 0).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "episode,agent,score,outcome");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "0,B,1,1");
        assert!(play_match(&m, &a, &b, 0, 0).is_err());
    }
}
