// Tree-search agents trained on score or on outcome, played on the same MDPs.
//
// `cargo run --release --example search_match`

use scorewin::mcts::{self, Agent, SearchConfig};
use scorewin::mdp::{self, StateId};
use scorewin::solver::RewardKind;

fn agent(kind: RewardKind, visits: u32) -> Agent {
    Agent::Search {
        kind,
        cfg: SearchConfig::for_kind(kind, visits, 5),
    }
}

fn main() -> scorewin::Result<()> {
    let m = mdp::generate(2, 6, 2, 11)?;
    let r = mcts::search(
        &m,
        StateId { level: 0, index: 0 },
        RewardKind::Outcome,
        &SearchConfig::for_kind(RewardKind::Outcome, 2000, 1),
    )?;
    println!(
        "root search: action {}, visits {:?}, q {:?}",
        r.action, r.visits, r.q
    );

    for visits in [10, 100, 1000] {
        let mut gaps = Vec::new();
        for i in 0..20 {
            let m = mdp::generate(2, 6, 2, 100 + i)?;
            let report = mcts::play_match(
                &m,
                &agent(RewardKind::Outcome, visits),
                &agent(RewardKind::Score, visits),
                50,
                i,
            )?;
            gaps.push(report.paired_outcome_gap().0);
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        println!("{visits:>5} visits: outcome agent wins {mean:+.4} more often");
    }
    Ok(())
}
