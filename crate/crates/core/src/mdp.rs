//! Action-shared tree MDPs.
//!
//! States form a complete `branch`-ary tree of height `depth`. Every
//! non-leaf state has the same child set under every action; the actions only
//! differ in the distribution they put on those children. Leaves carry an
//! integer score and end the episode.
//!
//! States are addressed by a flat index in level order: the root is `0`, the
//! children of `s` are `branch * s + 1 ..= branch * s + branch`. All non-leaf
//! states come before all leaves, so `s < num_internal()` iff `s` is a non-leaf.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest number of leaves `generate` accepts.
pub const MAX_LEAVES: u64 = 1 << 31;

/// Tolerance on the sum of a transition vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId {
    pub level: u32,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AstMdp {
    branch: usize,
    depth: usize,
    num_actions: usize,
    leaf_scores: Vec<i64>,
    // [(internal_state * num_actions + action) * branch + child]
    transitions: Vec<f64>,
}

fn checked_pow(base: usize, exp: usize) -> Option<u64> {
    (base as u64).checked_pow(exp as u32)
}

fn validate_shape(branch: usize, depth: usize, num_actions: usize) -> Result<u64> {
    if branch < 2 {
        return Err(Error::param(format!("branch must be >= 2, got {branch}")));
    }
    if depth < 1 {
        return Err(Error::param(format!("depth must be >= 1, got {depth}")));
    }
    if num_actions < 2 {
        return Err(Error::param(format!(
            "num_actions must be >= 2, got {num_actions}"
        )));
    }
    match checked_pow(branch, depth) {
        Some(n) if n <= MAX_LEAVES => Ok(n),
        _ => Err(Error::param(format!(
            "branch^depth = {branch}^{depth} exceeds 2^31 leaves"
        ))),
    }
}

impl AstMdp {
    /// Builds an MDP from explicit parts, checking every invariant.
    ///
    /// `transitions[s][a]` is the distribution over the children of the
    /// non-leaf state with flat index `s`.
    pub fn new(
        branch: usize,
        depth: usize,
        num_actions: usize,
        leaf_scores: Vec<i64>,
        transitions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        Self::build(branch, depth, num_actions, leaf_scores, transitions, true)
    }

    /// Like [`AstMdp::new`] but accepts leaf scores outside `[-b^d, b^d]`, for
    /// hand-built examples. Such an MDP does not survive a JSON round trip.
    pub fn with_unbounded_scores(
        branch: usize,
        depth: usize,
        num_actions: usize,
        leaf_scores: Vec<i64>,
        transitions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        Self::build(branch, depth, num_actions, leaf_scores, transitions, false)
    }

    fn build(
        branch: usize,
        depth: usize,
        num_actions: usize,
        leaf_scores: Vec<i64>,
        transitions: Vec<Vec<Vec<f64>>>,
        bounded: bool,
    ) -> Result<Self> {
        let leaves = validate_shape(branch, depth, num_actions)
            .map_err(|e| Error::format("branch/depth/num_actions", e.to_string()))?;
        if leaf_scores.len() as u64 != leaves {
            return Err(Error::format(
                "leaf_scores",
                format!("expected {leaves} entries, found {}", leaf_scores.len()),
            ));
        }
        let bound = if bounded { leaves as i64 } else { i64::MAX };
        if let Some((i, s)) = leaf_scores
            .iter()
            .enumerate()
            .find(|(_, s)| s.checked_abs().is_none_or(|a| a > bound))
        {
            return Err(Error::format(
                format!("leaf_scores[{i}]"),
                format!("score {s} outside [-{bound}, {bound}]"),
            ));
        }
        let internal = ((leaves - 1) / (branch as u64 - 1)) as usize;
        if transitions.len() != internal {
            return Err(Error::format(
                "transitions",
                format!("expected {internal} states, found {}", transitions.len()),
            ));
        }
        let mut flat = Vec::with_capacity(internal * num_actions * branch);
        for (s, per_action) in transitions.iter().enumerate() {
            if per_action.len() != num_actions {
                return Err(Error::format(
                    format!("transitions[{s}]"),
                    format!("expected {num_actions} actions, found {}", per_action.len()),
                ));
            }
            for (a, probs) in per_action.iter().enumerate() {
                check_simplex(probs, branch)
                    .map_err(|r| Error::format(format!("transitions[{s}][{a}]"), r))?;
                flat.extend_from_slice(probs);
            }
        }
        Ok(Self {
            branch,
            depth,
            num_actions,
            leaf_scores,
            transitions: flat,
        })
    }

    pub fn branch(&self) -> usize {
        self.branch
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_scores.len()
    }

    pub fn num_internal(&self) -> usize {
        (self.leaf_scores.len() - 1) / (self.branch - 1)
    }

    pub fn num_states(&self) -> usize {
        self.num_internal() + self.num_leaves()
    }

    /// `b^d`, the bound on absolute leaf scores.
    pub fn score_bound(&self) -> i64 {
        self.leaf_scores.len() as i64
    }

    pub fn leaf_scores(&self) -> &[i64] {
        &self.leaf_scores
    }

    pub fn is_leaf(&self, s: usize) -> bool {
        s >= self.num_internal()
    }

    /// Score of the leaf with flat index `s`.
    pub fn leaf_score(&self, s: usize) -> i64 {
        self.leaf_scores[s - self.num_internal()]
    }

    pub fn children(&self, s: usize) -> std::ops::Range<usize> {
        let first = self.branch * s + 1;
        first..first + self.branch
    }

    /// `None` for the root.
    pub fn parent(&self, s: usize) -> Option<usize> {
        (s > 0).then(|| (s - 1) / self.branch)
    }

    /// Flat index of the first state at `level`.
    pub fn level_offset(&self, level: usize) -> usize {
        (self.branch.pow(level as u32) - 1) / (self.branch - 1)
    }

    pub fn level_of(&self, s: usize) -> usize {
        let mut level = 0;
        let mut next = 1;
        while s >= next {
            level += 1;
            next = next * self.branch + 1;
        }
        level
    }

    pub fn flat(&self, id: StateId) -> Result<usize> {
        let level = id.level as usize;
        if level > self.depth {
            return Err(Error::param(format!(
                "level {level} beyond depth {}",
                self.depth
            )));
        }
        let width = self.branch.pow(id.level) as u64;
        if id.index >= width {
            return Err(Error::param(format!(
                "index {} out of range at level {level} (width {width})",
                id.index
            )));
        }
        Ok(self.level_offset(level) + id.index as usize)
    }

    pub fn state_id(&self, s: usize) -> StateId {
        let level = self.level_of(s);
        StateId {
            level: level as u32,
            index: (s - self.level_offset(level)) as u64,
        }
    }

    /// Distribution over `children(s)` when playing `action` in non-leaf `s`.
    pub fn transition(&self, s: usize, action: usize) -> &[f64] {
        let start = (s * self.num_actions + action) * self.branch;
        &self.transitions[start..start + self.branch]
    }

    /// Inverse-CDF draw of a child of `s` given a uniform `u` in `[0, 1)`.
    pub fn child_for_uniform(&self, s: usize, action: usize, u: f64) -> usize {
        let probs = self.transition(s, action);
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (k, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = k;
                acc += p;
                if u < acc {
                    return self.branch * s + 1 + k;
                }
            }
        }
        // u landed in the rounding gap above the accumulated mass
        self.branch * s + 1 + last_positive
    }

    pub fn sample_child<R: Rng + ?Sized>(&self, s: usize, action: usize, rng: &mut R) -> usize {
        self.child_for_uniform(s, action, rng.random::<f64>())
    }

    /// Transition vectors as `[state][action][child]`.
    pub fn transitions_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_internal())
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| self.transition(s, a).to_vec())
                    .collect()
            })
            .collect()
    }
}

fn check_simplex(probs: &[f64], branch: usize) -> std::result::Result<(), String> {
    if probs.len() != branch {
        return Err(format!(
            "expected {branch} probabilities, found {}",
            probs.len()
        ));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(format!("invalid probability {p}"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(format!("probabilities sum to {sum}, not 1"));
    }
    Ok(())
}

/// Random MDP: uniform integer leaf scores in `[-b^d, b^d]` and independent
/// Dirichlet(1, ..., 1) transition vectors, drawn from stream `(seed, 0)`.
pub fn generate(branch: usize, depth: usize, num_actions: usize, seed: u64) -> Result<AstMdp> {
    generate_with_rng(branch, depth, num_actions, &mut rng::stream(seed, 0))
}

/// Draw order: all leaf scores first, then transition vectors in
/// `(state, action)` order.
pub fn generate_with_rng<R: Rng + ?Sized>(
    branch: usize,
    depth: usize,
    num_actions: usize,
    rng: &mut R,
) -> Result<AstMdp> {
    let leaves = validate_shape(branch, depth, num_actions)?;
    let bound = leaves as i64;
    let leaf_scores: Vec<i64> = (0..leaves)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    let internal = ((leaves - 1) / (branch as u64 - 1)) as usize;
    let mut transitions = Vec::with_capacity(internal * num_actions * branch);
    for _ in 0..internal * num_actions {
        dirichlet_ones(branch, rng, &mut transitions);
    }
    Ok(AstMdp {
        branch,
        depth,
        num_actions,
        leaf_scores,
        transitions,
    })
}

/// Appends one symmetric Dirichlet(1) draw of dimension `dim`, as normalized
/// standard exponentials.
fn dirichlet_ones<R: Rng + ?Sized>(dim: usize, rng: &mut R, out: &mut Vec<f64>) {
    let start = out.len();
    let mut total = 0.0;
    for _ in 0..dim {
        let e: f64 = Exp1.sample(rng);
        total += e;
        out.push(e);
    }
    for p in &mut out[start..] {
        *p /= total;
    }
}

/// Same tree and scores, with every transition replaced by a point mass on a
/// uniformly chosen child.
pub fn make_deterministic(mdp: &AstMdp, seed: u64) -> AstMdp {
    let mut rng = rng::stream(seed, 1);
    let mut out = mdp.clone();
    for chunk in out.transitions.chunks_mut(mdp.branch) {
        let k = rng.random_range(0..mdp.branch);
        chunk.fill(0.0);
        chunk[k] = 1.0;
    }
    out
}

#[derive(Serialize, Deserialize)]
struct Document {
    branch: usize,
    depth: usize,
    num_actions: usize,
    leaf_scores: Vec<i64>,
    transitions: Vec<Vec<Vec<f64>>>,
}

/// JSON with fields `branch, depth, num_actions, leaf_scores, transitions`.
///
/// Probabilities are written as shortest round-trip decimals (never more than
/// 17 significant digits), so `deserialize(serialize(m)) == m` bit for bit.
pub fn serialize(mdp: &AstMdp) -> String {
    let doc = Document {
        branch: mdp.branch,
        depth: mdp.depth,
        num_actions: mdp.num_actions,
        leaf_scores: mdp.leaf_scores.clone(),
        transitions: mdp.transitions_nested(),
    };
    serde_json::to_string_pretty(&doc).expect("mdp document serializes")
}

pub fn deserialize(text: &str) -> Result<AstMdp> {
    let doc: Document = serde_json::from_str(text).map_err(|e| {
        let field = missing_field(&e.to_string()).unwrap_or_else(|| "document".to_string());
        Error::format(field, e.to_string())
    })?;
    AstMdp::new(
        doc.branch,
        doc.depth,
        doc.num_actions,
        doc.leaf_scores,
        doc.transitions,
    )
}

fn missing_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("missing field `")?;
    Some(rest.split('`').next()?.to_string())
}
