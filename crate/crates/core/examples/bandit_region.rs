// Two-armed Gaussian bandits where the higher-mean arm is the worse bet.
//
// `cargo run --example bandit_region`

use scorewin::bandit::{self, Arm, BanditParams, ScanGrid};

fn main() -> scorewin::Result<()> {
    let rows = bandit::scan(&ScanGrid::default())?;
    let disagree = rows.iter().filter(|r| r.disagree).count();
    println!("{} of {} grid tuples disagree", disagree, rows.len());

    let p = BanditParams::new(2.0, 4.0, 1.0, 1.0)?;
    for arm in [Arm::First, Arm::Second] {
        let (mu, sigma) = p.arm(arm);
        let exact = bandit::arm_stats(mu, sigma)?;
        let mc = bandit::monte_carlo_arm_stats(&p, arm, 200_000, 1)?;
        println!(
            "{arm:?}: mean {:.3}, win prob {:.4} (sampled {:.4})",
            exact.score_mean, exact.win_prob, mc.win_prob
        );
    }
    println!("in region: {}", bandit::in_disagreement_region(&p));
    Ok(())
}
