// Smallest MDP where maximizing expected score loses winrate.
//
// One state, three leaves (+10, +1, -1). Action 0 gambles between +10 and -1,
// action 1 takes the sure +1.
//
// `cargo run --example counterexample`

use scorewin::mdp::AstMdp;
use scorewin::solver::{evaluate_policy, score_variance, solve_optimal, RewardKind};

fn main() -> scorewin::Result<()> {
    let m = AstMdp::with_unbounded_scores(
        3,
        1,
        2,
        vec![10, 1, -1],
        vec![vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]]],
    )?;
    let score = solve_optimal(&m, RewardKind::Score);
    let outcome = solve_optimal(&m, RewardKind::Outcome);
    println!(
        "score q {:?}, picks {}",
        score.q_row(0),
        score.policy.action(0)
    );
    println!(
        "outcome q {:?}, picks {}",
        outcome.q_row(0),
        outcome.policy.action(0)
    );

    let cross = evaluate_policy(&m, &score.policy, RewardKind::Outcome)?;
    println!(
        "winrate of score policy {} vs best {}",
        cross.v[0], outcome.v[0]
    );

    let var = score_variance(&m, &score.policy)?;
    println!(
        "score variance: action 0 {}, action 1 {}",
        var.get(0, 0),
        var.get(0, 1)
    );
    Ok(())
}
