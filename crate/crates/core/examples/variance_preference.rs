// When behind, the winrate-optimal choice takes more variance; when ahead, less.
//
// `cargo run --release --example variance_preference`

use scorewin::analysis::{self, Chooser, ExperimentConfig};

fn main() -> scorewin::Result<()> {
    let cfg = ExperimentConfig {
        base_seed: 1,
        bins: 10,
        ..ExperimentConfig::default()
    };
    for chooser in [Chooser::Outcome, Chooser::Score] {
        let r = analysis::variance_preference_curve(&cfg, chooser)?;
        println!(
            "{chooser:?} chooser, {} samples of {} states",
            r.samples.len(),
            r.examined
        );
        for b in &r.curve.bins {
            match b.aggregate {
                Some(y) => println!(
                    "  x {:.1}-{:.1}: median {:+.4} ({} samples)",
                    b.x_low, b.x_high, y, b.count
                ),
                None => println!("  x {:.1}-{:.1}: empty", b.x_low, b.x_high),
            }
        }
        println!("  spearman {:.3}", r.spearman().unwrap_or(f64::NAN));
    }
    Ok(())
}
