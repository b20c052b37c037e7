// Mean winrate loss of the score-optimal policy, by tree level.
//
// `cargo run --release --example winrate_gap`

use scorewin::analysis::{self, ExperimentConfig};

fn main() -> scorewin::Result<()> {
    let cfg = ExperimentConfig {
        base_seed: 1,
        ..ExperimentConfig::default()
    };
    let report = analysis::winrate_gap_by_level(&cfg)?;
    for bin in &report.curve.bins {
        println!(
            "level {}: {:.5}",
            bin.x_low,
            bin.aggregate.unwrap_or(f64::NAN)
        );
    }
    let level0: Vec<f64> = report.per_replicate.iter().map(|r| r[0]).collect();
    if let Some((lo, hi)) = analysis::bootstrap_mean_ci(&level0, 2000, 0.95, 3) {
        println!("root gap 95% interval: {lo:.5} .. {hi:.5}");
    }
    println!(
        "argmax ties: score {}, outcome {}",
        report.score_ties, report.outcome_ties
    );
    Ok(())
}
