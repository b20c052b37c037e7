//! Oracles shared by the integration tests. None of them call into the
//! solver; they work from the raw MDP definition.

#![allow(dead_code)]

use rand::Rng;
use scorewin::mdp::AstMdp;

/// Leaves (+10, +1, -1); action 0 splits between +10 and -1, action 1 is a sure +1.
pub fn fixture() -> AstMdp {
    AstMdp::with_unbounded_scores(
        3,
        1,
        2,
        vec![10, 1, -1],
        vec![vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]]],
    )
    .unwrap()
}

pub fn outcome(score: i64) -> f64 {
    if score > 0 {
        1.0
    } else {
        0.0
    }
}

/// Value of `s` under `policy` by plain recursion over the tree.
pub fn recursive_value(
    mdp: &AstMdp,
    policy: &[usize],
    s: usize,
    reward: &dyn Fn(i64) -> f64,
) -> f64 {
    if mdp.is_leaf(s) {
        return reward(mdp.leaf_score(s));
    }
    let a = policy[s];
    mdp.transition(s, a)
        .iter()
        .enumerate()
        .map(|(k, &p)| p * recursive_value(mdp, policy, mdp.branch() * s + 1 + k, reward))
        .sum()
}

/// Best root value over every deterministic policy.
pub fn brute_force_root(mdp: &AstMdp, reward: &dyn Fn(i64) -> f64) -> f64 {
    let internal = mdp.num_internal();
    let actions = mdp.num_actions();
    let total = actions.pow(internal as u32);
    let mut best = f64::NEG_INFINITY;
    let mut policy = vec![0; internal];
    for code in 0..total {
        let mut c = code;
        for slot in policy.iter_mut() {
            *slot = c % actions;
            c /= actions;
        }
        best = best.max(recursive_value(mdp, &policy, 0, reward));
    }
    best
}

/// Final scores of `n` trajectories that play `first` in `s` and `policy`
/// afterwards.
pub fn rollout_scores<R: Rng>(
    mdp: &AstMdp,
    policy: &[usize],
    s: usize,
    first: usize,
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mut state = s;
            let mut action = first;
            loop {
                let u: f64 = rng.random();
                let probs = mdp.transition(state, action);
                let mut acc = 0.0;
                let mut k = probs.len() - 1;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                state = mdp.branch() * state + 1 + k;
                if mdp.is_leaf(state) {
                    return mdp.leaf_score(state) as f64;
                }
                action = policy[state];
            }
        })
        .collect()
}

/// Sample mean, unbiased variance, and standard errors of both.
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub mean_se: f64,
    pub var_se: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Moments {
        mean,
        var,
        mean_se: (var / n).sqrt(),
        var_se: ((m4 - var * var).max(0.0) / n).sqrt(),
    }
}
