// Generate a random tree MDP, save it, reload it, and solve both rewards.
//
// `cargo run --example generate_and_solve`

use scorewin::mdp::{self, StateId};
use scorewin::solver::{evaluate_policy, solve_optimal, RewardKind};

fn main() -> scorewin::Result<()> {
    let m = mdp::generate(2, 4, 3, 42)?;
    let json = mdp::serialize(&m);
    let m2 = mdp::deserialize(&json)?;
    assert_eq!(m, m2);
    println!(
        "{} states, {} leaves, {} bytes of json",
        m.num_states(),
        m.num_leaves(),
        json.len()
    );

    let score = solve_optimal(&m, RewardKind::Score);
    let outcome = solve_optimal(&m, RewardKind::Outcome);
    let cross = evaluate_policy(&m, &score.policy, RewardKind::Outcome)?;
    for level in 0..m.depth() {
        let s = m.flat(StateId {
            level: level as u32,
            index: 0,
        })?;
        println!(
            "level {level}: score action {}, outcome action {}, winrate {:.4} vs {:.4}",
            score.policy.action(s),
            outcome.policy.action(s),
            cross.v[s],
            outcome.v[s]
        );
    }

    // With deterministic transitions both policies win equally often.
    let det = mdp::make_deterministic(&m, 7);
    let det_score = solve_optimal(&det, RewardKind::Score);
    let det_cross = evaluate_policy(&det, &det_score.policy, RewardKind::Outcome)?;
    println!(
        "deterministic: equal winrates at every state: {}",
        det_cross.v == solve_optimal(&det, RewardKind::Outcome).v
    );
    Ok(())
}
