//! Exact dynamic programming on action-shared tree MDPs.
//!
//! The tree is finite and acyclic, so a single sweep from the leaves up to the
//! root is the exact fixed point of value iteration. Values are indexed by the
//! flat state index of [`AstMdp`]; q-tables by `s * num_actions + a` over
//! non-leaf states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::AstMdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Score,
    Outcome,
}

impl RewardKind {
    /// Reward collected at a leaf with the given score.
    pub fn leaf_reward(self, score: i64) -> f64 {
        match self {
            RewardKind::Score => score as f64,
            RewardKind::Outcome => {
                if score > 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "score" => Ok(RewardKind::Score),
            "outcome" => Ok(RewardKind::Outcome),
            other => Err(Error::param(format!("unknown reward kind `{other}`"))),
        }
    }
}

/// Deterministic policy: one action per non-leaf state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy(pub Vec<usize>);

impl Policy {
    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, mdp: &AstMdp) -> Result<()> {
        if self.0.len() != mdp.num_internal() {
            return Err(Error::param(format!(
                "policy covers {} states, mdp has {} non-leaf states",
                self.0.len(),
                mdp.num_internal()
            )));
        }
        if let Some((s, a)) = self
            .0
            .iter()
            .enumerate()
            .find(|(_, &a)| a >= mdp.num_actions())
        {
            return Err(Error::param(format!(
                "policy action {a} at state {s} out of range (num_actions = {})",
                mdp.num_actions()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub kind: RewardKind,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub policy: Policy,
    /// Non-leaf states whose maximal q was attained by more than one action.
    /// Always zero for policy evaluation.
    pub ties: usize,
}

impl SolveResult {
    pub fn q(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.q_width() + a]
    }

    pub fn q_row(&self, s: usize) -> &[f64] {
        let w = self.q_width();
        &self.q[s * w..(s + 1) * w]
    }

    fn q_width(&self) -> usize {
        self.q.len() / self.policy.len().max(1)
    }
}

/// Expected child value. The sum is clamped to the range of the values it
/// averages, which rounding in the probabilities could otherwise leave by an ulp.
fn expectation(mdp: &AstMdp, values: &[f64], s: usize, a: usize) -> f64 {
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&p, &v) in mdp.transition(s, a).iter().zip(&values[mdp.children(s)]) {
        if p > 0.0 {
            sum += p * v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    sum.clamp(lo, hi)
}

fn leaf_values(mdp: &AstMdp, kind: RewardKind) -> Vec<f64> {
    let mut v = vec![0.0; mdp.num_states()];
    for (i, &score) in mdp.leaf_scores().iter().enumerate() {
        v[mdp.num_internal() + i] = kind.leaf_reward(score);
    }
    v
}

/// Actions whose q is within `TIE_TOL * max(1, |max q|)` of the best are tied.
/// Probability vectors only sum to one up to rounding, so exact equality would
/// let the last ulp decide between actions of equal value.
pub const TIE_TOL: f64 = 1e-12;

/// Optimal values and the greedy policy (lowest action index on ties).
pub fn solve_optimal(mdp: &AstMdp, kind: RewardKind) -> SolveResult {
    let n_act = mdp.num_actions();
    let internal = mdp.num_internal();
    let mut v = leaf_values(mdp, kind);
    let mut q = vec![0.0; internal * n_act];
    let mut policy = vec![0; internal];
    let mut ties = 0;
    for s in (0..internal).rev() {
        let row = &mut q[s * n_act..(s + 1) * n_act];
        for (a, slot) in row.iter_mut().enumerate() {
            *slot = expectation(mdp, &v, s, a);
        }
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = top - TIE_TOL * top.abs().max(1.0);
        let best = row.iter().position(|&x| x >= floor).unwrap_or(0);
        if row.iter().filter(|&&x| x >= floor).count() > 1 {
            ties += 1;
        }
        policy[s] = best;
        v[s] = row[best];
    }
    SolveResult {
        kind,
        v,
        q,
        policy: Policy(policy),
        ties,
    }
}

/// Values of a fixed policy; `q(s, a)` is the value of playing `a` once in `s`
/// and following `pi` afterwards.
pub fn evaluate_policy(mdp: &AstMdp, pi: &Policy, kind: RewardKind) -> Result<SolveResult> {
    pi.check(mdp)?;
    let n_act = mdp.num_actions();
    let internal = mdp.num_internal();
    let mut v = leaf_values(mdp, kind);
    let mut q = vec![0.0; internal * n_act];
    for s in (0..internal).rev() {
        for a in 0..n_act {
            q[s * n_act + a] = expectation(mdp, &v, s, a);
        }
        v[s] = q[s * n_act + pi.action(s)];
    }
    Ok(SolveResult {
        kind,
        v,
        q,
        policy: pi.clone(),
        ties: 0,
    })
}

/// `E[score^2 | s, a]` when `pi` is followed after `(s, a)`.
pub fn second_moment(mdp: &AstMdp, pi: &Policy) -> Result<Vec<f64>> {
    pi.check(mdp)?;
    let n_act = mdp.num_actions();
    let internal = mdp.num_internal();
    let mut m2v = vec![0.0; mdp.num_states()];
    for (i, &score) in mdp.leaf_scores().iter().enumerate() {
        m2v[internal + i] = (score as f64) * (score as f64);
    }
    let mut m2 = vec![0.0; internal * n_act];
    for s in (0..internal).rev() {
        for a in 0..n_act {
            m2[s * n_act + a] = expectation(mdp, &m2v, s, a);
        }
        m2v[s] = m2[s * n_act + pi.action(s)];
    }
    Ok(m2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTable {
    pub num_actions: usize,
    /// Indexed like a q-table.
    pub values: Vec<f64>,
    /// Entries whose raw value fell below `-1e-9 * b^(2d)`; left unclamped.
    pub numerical_errors: Vec<(usize, usize)>,
}

impl VarianceTable {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }
}

/// Variance of the final score after `(s, a)` when `pi` is followed afterwards.
///
/// Computed as second moment minus squared mean. Negative values within
/// `1e-9 * b^(2d)` of zero are cancellation noise and clamped to zero.
pub fn score_variance(mdp: &AstMdp, pi: &Policy) -> Result<VarianceTable> {
    let m2 = second_moment(mdp, pi)?;
    let mean = evaluate_policy(mdp, pi, RewardKind::Score)?;
    let bound = mdp.score_bound() as f64;
    let slack = 1e-9 * bound * bound;
    let n_act = mdp.num_actions();
    let mut numerical_errors = Vec::new();
    let values = m2
        .iter()
        .zip(&mean.q)
        .enumerate()
        .map(|(i, (m2, q))| {
            let var = m2 - q * q;
            if var >= 0.0 {
                var
            } else if var >= -slack {
                0.0
            } else {
                numerical_errors.push((i / n_act, i % n_act));
                var
            }
        })
        .collect();
    Ok(VarianceTable {
        num_actions: n_act,
        values,
        numerical_errors,
    })
}
