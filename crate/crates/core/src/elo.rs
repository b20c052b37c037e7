//! Maximum-likelihood Elo ratings from pairwise win counts.
//!
//! Model: `P(i beats j) = 1 / (1 + 10^((e_j - e_i) / 400))`, games are
//! independent, there are no draws. Anchored players keep their given rating
//! and fix the gauge; all other ratings maximize the Bernoulli log-likelihood.
//! The optimizer is Newton's method on the free ratings with backtracking on
//! the likelihood.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural-log slope of the model: `ln(10) / 400`.
const SLOPE: f64 = std::f64::consts::LN_10 / 400.0;

pub fn win_probability(elo_i: f64, elo_j: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((elo_j - elo_i) / 400.0))
}

/// `ln(1 / (1 + e^-x))` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    x.min(0.0) - (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub wins_ij: f64,
    pub wins_ji: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchGrid {
    players: Vec<String>,
    index: HashMap<String, usize>,
    results: BTreeMap<(usize, usize), (f64, f64)>,
    anchors: BTreeMap<usize, f64>,
}

impl MatchGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn player(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.players.len();
        self.players.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    /// Adds `wins_ij` wins of `a` over `b` and `wins_ji` of `b` over `a`.
    /// Repeated pairs accumulate.
    pub fn add_games(&mut self, a: &str, b: &str, wins_ab: u64, wins_ba: u64) -> Result<()> {
        if a == b {
            return Err(Error::param(format!("player `{a}` cannot play itself")));
        }
        let (i, j) = (self.player(a), self.player(b));
        let (key, w) = if i < j {
            ((i, j), (wins_ab as f64, wins_ba as f64))
        } else {
            ((j, i), (wins_ba as f64, wins_ab as f64))
        };
        let slot = self.results.entry(key).or_insert((0.0, 0.0));
        slot.0 += w.0;
        slot.1 += w.1;
        Ok(())
    }

    pub fn anchor(&mut self, name: &str, elo: f64) -> Result<()> {
        if !elo.is_finite() {
            return Err(Error::param(format!(
                "anchor `{name}` has non-finite rating"
            )));
        }
        let i = self.player(name);
        self.anchors.insert(i, elo);
        Ok(())
    }

    pub fn results(&self) -> impl Iterator<Item = PairResult> + '_ {
        self.results
            .iter()
            .map(|(&(i, j), &(wins_ij, wins_ji))| PairResult {
                i,
                j,
                wins_ij,
                wins_ji,
            })
    }

    /// Log-likelihood of the data under the given ratings (indexed like `players`).
    pub fn log_likelihood(&self, elo: &[f64]) -> f64 {
        self.results()
            .map(|r| {
                let x = SLOPE * (elo[r.i] - elo[r.j]);
                let mut ll = 0.0;
                if r.wins_ij > 0.0 {
                    ll += r.wins_ij * log_sigmoid(x);
                }
                if r.wins_ji > 0.0 {
                    ll += r.wins_ji * log_sigmoid(-x);
                }
                ll
            })
            .sum()
    }

    fn with_virtual_games(&self, eps: f64) -> MatchGrid {
        let mut g = self.clone();
        for w in g.results.values_mut() {
            if w.0 + w.1 > 0.0 {
                w.0 += eps;
                w.1 += eps;
            }
        }
        g
    }

    /// Players not reachable from any anchor through `edge(i, j)` steps.
    fn unreachable(&self, edge: impl Fn(&PairResult) -> (bool, bool)) -> Vec<usize> {
        let n = self.players.len();
        let mut adj = vec![Vec::new(); n];
        for r in self.results() {
            let (fwd, back) = edge(&r);
            if fwd {
                adj[r.i].push(r.j);
            }
            if back {
                adj[r.j].push(r.i);
            }
        }
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = self.anchors.keys().copied().collect();
        for &a in &queue {
            seen[a] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        (0..n).filter(|&i| !seen[i]).collect()
    }

    fn names(&self, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|&i| self.players[i].clone()).collect()
    }

    /// Checks that the likelihood has a finite maximizer.
    ///
    /// With all anchors merged into one vertex, the "beat" graph must be
    /// strongly connected: otherwise some group of players never lost (or never
    /// won) against everyone else and its ratings are unbounded.
    pub fn check_estimable(&self) -> Result<()> {
        if self.anchors.is_empty() {
            return Err(Error::Estimation("at least one anchor is required".into()));
        }
        let cut = self.unreachable(|r| {
            let played = r.wins_ij + r.wins_ji > 0.0;
            (played, played)
        });
        if !cut.is_empty() {
            return Err(Error::Estimation(format!(
                "players {:?} are not connected to any anchor",
                self.names(&cut)
            )));
        }
        // i -> j when i beat j: unreachable players never lost to the rest.
        let unbeaten = self.unreachable(|r| (r.wins_ij > 0.0, r.wins_ji > 0.0));
        if !unbeaten.is_empty() {
            return Err(Error::Divergence {
                players: self.names(&unbeaten),
                reason: "never lost against the anchored component; rating is unbounded above"
                    .into(),
            });
        }
        let winless = self.unreachable(|r| (r.wins_ji > 0.0, r.wins_ij > 0.0));
        if !winless.is_empty() {
            return Err(Error::Divergence {
                players: self.names(&winless),
                reason: "never won against the anchored component; rating is unbounded below"
                    .into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Converged when the largest rating update is below `tol * 400` Elo.
    pub tol: f64,
    pub max_iter: usize,
    /// Virtual wins added in both directions to every pair that played. Zero
    /// gives the plain maximum-likelihood estimate.
    pub virtual_games: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 10_000,
            virtual_games: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratings {
    pub players: Vec<String>,
    pub elo: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl Ratings {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.players
            .iter()
            .position(|p| p == name)
            .map(|i| self.elo[i])
    }
}

pub fn fit(grid: &MatchGrid, opts: &FitOptions) -> Result<Ratings> {
    if opts.tol.is_nan()
        || opts.tol <= 0.0
        || opts.virtual_games < 0.0
        || !opts.virtual_games.is_finite()
    {
        return Err(Error::param(
            "tol must be positive and virtual_games non-negative",
        ));
    }
    let data = if opts.virtual_games > 0.0 {
        grid.with_virtual_games(opts.virtual_games)
    } else {
        grid.clone()
    };
    data.check_estimable()?;

    let n = data.players.len();
    let anchor_mean = data.anchors.values().sum::<f64>() / data.anchors.len() as f64;
    let mut elo: Vec<f64> = (0..n)
        .map(|i| data.anchors.get(&i).copied().unwrap_or(anchor_mean))
        .collect();
    let free: Vec<usize> = (0..n).filter(|i| !data.anchors.contains_key(i)).collect();
    let slot: HashMap<usize, usize> = free.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    let mut ll = data.log_likelihood(&elo);
    let mut iterations = 0;
    let mut converged = free.is_empty();
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let m = free.len();
        let mut grad = DVector::<f64>::zeros(m);
        // Negative Hessian (Fisher information) of the free ratings.
        let mut info = DMatrix::<f64>::zeros(m, m);
        for r in data.results() {
            let total = r.wins_ij + r.wins_ji;
            if total == 0.0 {
                continue;
            }
            let p = win_probability(elo[r.i], elo[r.j]);
            let g = SLOPE * (r.wins_ij - total * p);
            let h = SLOPE * SLOPE * total * p * (1.0 - p);
            let (si, sj) = (slot.get(&r.i).copied(), slot.get(&r.j).copied());
            if let Some(a) = si {
                grad[a] += g;
                info[(a, a)] += h;
            }
            if let Some(b) = sj {
                grad[b] -= g;
                info[(b, b)] += h;
            }
            if let (Some(a), Some(b)) = (si, sj) {
                info[(a, b)] -= h;
                info[(b, a)] -= h;
            }
        }
        let step = match info.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            // Flat likelihood directions at extreme ratings; fall back to a
            // scaled gradient step.
            None => grad.scale(400.0 / grad.amax().max(f64::MIN_POSITIVE)),
        };

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = elo.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += scale * step[k];
            }
            let trial_ll = data.log_likelihood(&trial);
            if trial_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = Some((trial, trial_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, trial_ll)) = accepted else {
            converged = true;
            break;
        };
        let max_delta = free
            .iter()
            .map(|&i| (trial[i] - elo[i]).abs())
            .fold(0.0, f64::max);
        elo = trial;
        ll = trial_ll;
        if max_delta < opts.tol * 400.0 {
            converged = true;
        }
    }

    Ok(Ratings {
        players: data.players.clone(),
        // reported against the observed games, without virtual ones
        log_likelihood: grid.log_likelihood(&elo),
        elo,
        converged,
        iterations,
    })
}

#[derive(Debug, Deserialize)]
struct GameRow {
    player_i: String,
    player_j: String,
    wins_ij: u64,
    wins_ji: u64,
}

#[derive(Debug, Deserialize)]
struct AnchorRow {
    player: String,
    elo: f64,
}

/// Builds a grid from a games CSV (`player_i,player_j,wins_ij,wins_ji`) and an
/// anchors CSV (`player,elo`).
pub fn read_grid<G: Read, A: Read>(games: G, anchors: A) -> Result<MatchGrid> {
    let mut grid = MatchGrid::new();
    for row in csv::Reader::from_reader(games).deserialize() {
        let row: GameRow = row?;
        grid.add_games(&row.player_i, &row.player_j, row.wins_ij, row.wins_ji)?;
    }
    for row in csv::Reader::from_reader(anchors).deserialize() {
        let row: AnchorRow = row?;
        grid.anchor(&row.player, row.elo)?;
    }
    Ok(grid)
}

/// `player,elo` rows in player order.
pub fn write_ratings<W: Write>(ratings: &Ratings, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["player", "elo"])?;
    for (p, e) in ratings.players.iter().zip(&ratings.elo) {
        w.write_record([p.as_str(), &e.to_string()])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_player(a_wins: u64, b_wins: u64) -> MatchGrid {
        let mut g = MatchGrid::new();
        g.add_games("A", "B", a_wins, b_wins).unwrap();
        g.anchor("A", 0.0).unwrap();
        g
    }

    #[test]
    fn win_probability_examples() {
        assert_eq!(win_probability(0.0, 0.0), 0.5);
        let p = win_probability(1500.0, 0.0);
        assert!((p - 0.999_822_203_676_150_3).abs() < 1e-12);
        assert!((1.0 - p - 1.777_963_238_497_04e-4).abs() < 1e-12);
        assert!(1.0 - p < 1.0 / 5000.0);
        for (a, b) in [(10.0, -40.0), (2000.0, 1.0), (-3.0, 7.5)] {
            assert!((win_probability(a, b) + win_probability(b, a) - 1.0).abs() < 1e-15);
        }
        assert!(win_probability(1.0, 0.0) > win_probability(0.0, 0.0));
    }

    #[test]
    fn even_split_gives_equal_rating() {
        let r = fit(&two_player(50, 50), &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.get("A"), Some(0.0));
        assert!(r.get("B").unwrap().abs() < 1e-9);
    }

    #[test]
    fn three_to_one_closed_form() {
        let r = fit(&two_player(75, 25), &FitOptions::default()).unwrap();
        let want = -400.0 * 3f64.log10();
        assert!((r.get("B").unwrap() - want).abs() < 1e-6, "{:?}", r);
        assert!((want + 190.848_501_887_865).abs() < 1e-9);
    }

    #[test]
    fn chain_beats_partial_solution() {
        let mut g = MatchGrid::new();
        g.add_games("A", "B", 60, 40).unwrap();
        g.add_games("B", "C", 60, 40).unwrap();
        g.anchor("A", 0.0).unwrap();
        let r = fit(&g, &FitOptions::default()).unwrap();
        let pairwise = -400.0 * 1.5f64.log10();
        assert!((r.get("B").unwrap() - pairwise).abs() < 1e-6);
        // C left where the A-B-only fit would put a newcomer: at B's rating.
        let partial = vec![0.0, pairwise, pairwise];
        assert!(r.log_likelihood > g.log_likelihood(&partial));
        assert!((r.log_likelihood - g.log_likelihood(&r.elo)).abs() < 1e-9);
    }

    #[test]
    fn disconnected_grid_names_players() {
        let mut g = two_player(3, 3);
        g.add_games("X", "Y", 2, 2).unwrap();
        match fit(&g, &FitOptions::default()) {
            Err(Error::Estimation(msg)) => assert!(msg.contains('X') && msg.contains('Y')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn perfect_record_diverges_unless_regularized() {
        let g = two_player(0, 10);
        match fit(&g, &FitOptions::default()) {
            Err(Error::Divergence { players, .. }) => assert_eq!(players, vec!["B".to_string()]),
            other => panic!("{other:?}"),
        }
        let g = two_player(10, 0);
        assert!(matches!(
            fit(&g, &FitOptions::default()),
            Err(Error::Divergence { .. })
        ));
        let opts = FitOptions {
            virtual_games: 0.5,
            ..Default::default()
        };
        let r = fit(&g, &opts).unwrap();
        // 10.5 : 0.5 virtual split
        let want = -400.0 * 21f64.log10();
        assert!((r.get("B").unwrap() - want).abs() < 1e-6);
    }

    #[test]
    fn anchors_are_required_and_fixed() {
        let mut g = MatchGrid::new();
        g.add_games("A", "B", 1, 1).unwrap();
        assert!(matches!(
            fit(&g, &FitOptions::default()),
            Err(Error::Estimation(_))
        ));
        g.anchor("A", 1234.5).unwrap();
        g.anchor("B", 1000.0).unwrap();
        let r = fit(&g, &FitOptions::default()).unwrap();
        assert_eq!(r.elo, vec![1234.5, 1000.0]);
        assert!(g.add_games("A", "A", 1, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let games = "player_i,player_j,wins_ij,wins_ji\nA,B,75,25\n";
        let anchors = "player,elo\nA,0\n";
        let g = read_grid(games.as_bytes(), anchors.as_bytes()).unwrap();
        let r = fit(&g, &FitOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_ratings(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("player,elo\nA,0\nB,-190.84850188"));
    }
}
