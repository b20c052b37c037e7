//! When does maximizing the expected score lose games?
//!
//! Tools for comparing score-optimal and win/lose-optimal play:
//!
//! * [`bandit`]: closed-form disagreement region of the two-armed Gaussian bandit.
//! * [`mdp`]: random action-shared tree MDPs and their JSON form.
//! * [`solver`]: exact backward induction, policy evaluation, score variance.
//! * [`analysis`]: batch experiments over many random MDPs, binned curves, CSV.
//! * [`mcts`]: a PUCT agent with score or outcome backups, and agent matches.
//! * [`elo`]: maximum-likelihood Elo ratings from pairwise results.
//! * [`cli`]: the `scorewin` command.
//!
//! ```
//! use scorewin::mdp::AstMdp;
//! use scorewin::solver::{evaluate_policy, solve_optimal, RewardKind};
//!
//! // Action 0 gambles between +10 and -1, action 1 is a sure +1.
//! let m = AstMdp::with_unbounded_scores(3, 1, 2, vec![10, 1, -1],
//!     vec![vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]]]).unwrap();
//! let by_score = solve_optimal(&m, RewardKind::Score);
//! let by_outcome = solve_optimal(&m, RewardKind::Outcome);
//! let winrate = evaluate_policy(&m, &by_score.policy, RewardKind::Outcome).unwrap();
//! assert_eq!(winrate.v[0], 0.5);
//! assert_eq!(by_outcome.v[0], 1.0);
//! ```

pub mod analysis;
pub mod bandit;
pub mod cli;
pub mod elo;
pub mod error;
pub mod mcts;
pub mod mdp;
pub mod rng;
pub mod solver;
pub mod svg;

pub use error::{Error, Result};
