// Recover Elo ratings from simulated games against an anchored player.
//
// `cargo run --example elo_fit`

use rand::Rng;
use scorewin::elo::{self, FitOptions, MatchGrid};
use scorewin::rng;

fn main() -> scorewin::Result<()> {
    let truth = [
        ("anchor", 0.0),
        ("weak", -300.0),
        ("strong", 250.0),
        ("stronger", 600.0),
    ];
    let mut grid = MatchGrid::new();
    let mut r = rng::stream(2, 0);
    for (i, &(a, ea)) in truth.iter().enumerate() {
        for &(b, eb) in &truth[i + 1..] {
            let p = elo::win_probability(ea, eb);
            let wins = (0..400).filter(|_| r.random::<f64>() < p).count() as u64;
            grid.add_games(a, b, wins, 400 - wins)?;
        }
    }
    grid.anchor("anchor", 0.0)?;
    let fit = elo::fit(&grid, &FitOptions::default())?;
    for (name, e) in truth {
        println!(
            "{name:>8}: true {e:>6.0}, fitted {:>8.1}",
            fit.get(name).unwrap()
        );
    }
    println!(
        "{} iterations, log-likelihood {:.2}",
        fit.iterations, fit.log_likelihood
    );
    println!(
        "a 1500 point favourite loses with probability {:.3e}",
        1.0 - elo::win_probability(1500.0, 0.0)
    );
    Ok(())
}
