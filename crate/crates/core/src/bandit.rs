//! Two-armed Gaussian bandit with a score reward and a win/lose reward.
//!
//! Arm `i` pays a score `X_i ~ N(mu_i, sigma_i^2)` and an outcome `1{X_i > 0}`.
//! The expected outcome is `Phi(mu_i / sigma_i)`, so the two rewards can rank
//! the arms differently. [`in_disagreement_region`] is the exact closed-form
//! characterization of when that happens.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditParams {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
}

impl BanditParams {
    pub fn new(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> Result<Self> {
        check_arm(mu1, sigma1)?;
        check_arm(mu2, sigma2)?;
        Ok(Self {
            mu1,
            sigma1,
            mu2,
            sigma2,
        })
    }

    pub fn arm(&self, arm: Arm) -> (f64, f64) {
        match arm {
            Arm::First => (self.mu1, self.sigma1),
            Arm::Second => (self.mu2, self.sigma2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    First,
    Second,
}

/// Expected score and expected outcome of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub score_mean: f64,
    pub win_prob: f64,
}

fn check_arm(mu: f64, sigma: f64) -> Result<()> {
    if !mu.is_finite() || !sigma.is_finite() {
        return Err(Error::param(format!(
            "non-finite arm parameters ({mu}, {sigma})"
        )));
    }
    if sigma <= 0.0 {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Standard normal CDF, `0.5 * erfc(-x / sqrt 2)`.
///
/// `libm::erfc` is accurate to about one ulp, which keeps the relative error
/// below 1e-12 for all `|x| <= 8` (the tail is never cancelled because `erfc`
/// is evaluated directly rather than as `1 - erf`).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn arm_stats(mu: f64, sigma: f64) -> Result<ArmStats> {
    check_arm(mu, sigma)?;
    Ok(ArmStats {
        score_mean: mu,
        win_prob: normal_cdf(mu / sigma),
    })
}

/// True iff the score reward strictly prefers one arm while the outcome reward
/// strictly prefers the other. Boundary cases (equal means, a zero mean, or
/// `sigma1 == sigma2 * mu1 / mu2`) are not in the region.
pub fn in_disagreement_region(p: &BanditParams) -> bool {
    let BanditParams {
        mu1,
        sigma1,
        mu2,
        sigma2,
    } = *p;
    // Either arm may carry the larger mean; order them first.
    let (hi_mu, hi_sigma, lo_mu, lo_sigma) = if mu1 >= mu2 {
        (mu1, sigma1, mu2, sigma2)
    } else {
        (mu2, sigma2, mu1, sigma1)
    };
    if hi_mu > lo_mu && lo_mu > 0.0 {
        hi_sigma > lo_sigma * hi_mu / lo_mu
    } else if lo_mu < hi_mu && hi_mu < 0.0 {
        hi_sigma < lo_sigma * hi_mu / lo_mu
    } else {
        false
    }
}

/// Which arm a reward prefers: `1`, `2`, or `0` on a tie.
pub fn preference(first: f64, second: f64) -> u8 {
    if first > second {
        1
    } else if second > first {
        2
    } else {
        0
    }
}

/// Empirical score mean and positive-sample frequency of `n` draws from one arm.
pub fn monte_carlo_arm_stats(p: &BanditParams, arm: Arm, n: u64, seed: u64) -> Result<ArmStats> {
    if n == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let (mu, sigma) = p.arm(arm);
    check_arm(mu, sigma)?;
    let normal = Normal::new(mu, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = rng::stream(seed, 0);
    let mut sum = 0.0;
    let mut wins = 0u64;
    for _ in 0..n {
        let x = normal.sample(&mut rng);
        sum += x;
        if x > 0.0 {
            wins += 1;
        }
    }
    Ok(ArmStats {
        score_mean: sum / n as f64,
        win_prob: wins as f64 / n as f64,
    })
}

/// One row of a parameter scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub score_pref: u8,
    pub outcome_pref: u8,
    pub disagree: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_step: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_step: f64,
    /// Drop mu values equal to zero.
    pub skip_zero_mu: bool,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            mu_min: -3.0,
            mu_max: 3.0,
            mu_step: 0.5,
            sigma_min: 0.25,
            sigma_max: 4.0,
            sigma_step: 0.25,
            skip_zero_mu: true,
        }
    }
}

fn axis(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) || step <= 0.0 || max < min {
        return Err(Error::param(format!(
            "bad grid axis [{min}, {max}] step {step}"
        )));
    }
    // Integer stepping so the grid points are exact multiples of the step.
    let count = ((max - min) / step + 1e-9).floor() as u64 + 1;
    Ok((0..count).map(|k| min + k as f64 * step).collect())
}

impl ScanGrid {
    pub fn mu_values(&self) -> Result<Vec<f64>> {
        let mut values = axis(self.mu_min, self.mu_max, self.mu_step)?;
        if self.skip_zero_mu {
            values.retain(|&m| m != 0.0);
        }
        Ok(values)
    }

    pub fn sigma_values(&self) -> Result<Vec<f64>> {
        let values = axis(self.sigma_min, self.sigma_max, self.sigma_step)?;
        if values[0] <= 0.0 {
            return Err(Error::param("sigma grid must be positive"));
        }
        Ok(values)
    }
}

/// Evaluates every `(mu1, sigma1, mu2, sigma2)` tuple of the grid, with `mu1 != mu2`.
pub fn scan(grid: &ScanGrid) -> Result<Vec<ScanRow>> {
    let mus = grid.mu_values()?;
    let sigmas = grid.sigma_values()?;
    let mut rows = Vec::new();
    for &mu1 in &mus {
        for &sigma1 in &sigmas {
            for &mu2 in &mus {
                if mu1 == mu2 {
                    continue;
                }
                for &sigma2 in &sigmas {
                    let p = BanditParams::new(mu1, sigma1, mu2, sigma2)?;
                    let a = arm_stats(mu1, sigma1)?;
                    let b = arm_stats(mu2, sigma2)?;
                    rows.push(ScanRow {
                        mu1,
                        sigma1,
                        mu2,
                        sigma2,
                        score_pref: preference(a.score_mean, b.score_mean),
                        outcome_pref: preference(a.win_prob, b.win_prob),
                        disagree: in_disagreement_region(&p),
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    // High-precision values of Phi from an arbitrary-precision erf.
    const PHI_HALF: f64 = 0.691_462_461_274_013_1;
    const PHI_ONE: f64 = 0.841_344_746_068_542_9;
    const PHI_MINUS_THREE: f64 = 0.001_349_898_031_630_094_5;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn arm_stats_examples() {
        let s = arm_stats(0.0, 1.0).unwrap();
        assert_eq!(s.score_mean, 0.0);
        assert_eq!(s.win_prob, 0.5);

        let s = arm_stats(2.0, 4.0).unwrap();
        assert_eq!(s.score_mean, 2.0);
        assert!(rel(s.win_prob, PHI_HALF) < 1e-12);

        let s = arm_stats(1.0, 1.0).unwrap();
        assert!(rel(s.win_prob, PHI_ONE) < 1e-12);

        assert!(rel(normal_cdf(-3.0), PHI_MINUS_THREE) < 1e-12);
    }

    #[test]
    fn arm_stats_rejects_bad_input() {
        assert!(arm_stats(0.0, 0.0).is_err());
        assert!(arm_stats(0.0, -1.0).is_err());
        assert!(arm_stats(f64::NAN, 1.0).is_err());
        assert!(arm_stats(1.0, f64::INFINITY).is_err());
        assert!(BanditParams::new(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn region_examples() {
        let p = BanditParams::new(2.0, 4.0, 1.0, 1.0).unwrap();
        assert!(in_disagreement_region(&p));
        let p = BanditParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(!in_disagreement_region(&p));

        let p = BanditParams::new(-1.0, 1.0, -2.0, 4.0).unwrap();
        assert!(in_disagreement_region(&p));
        let a = arm_stats(-1.0, 1.0).unwrap();
        let b = arm_stats(-2.0, 4.0).unwrap();
        assert!(a.score_mean > b.score_mean);
        assert!(a.win_prob < b.win_prob);
    }

    #[test]
    fn region_boundaries_are_excluded() {
        // sigma1 == sigma2 * mu1 / mu2 exactly
        let p = BanditParams::new(2.0, 2.0, 1.0, 1.0).unwrap();
        assert!(!in_disagreement_region(&p));
        let p = BanditParams::new(-1.0, 0.5, -2.0, 1.0).unwrap();
        assert!(!in_disagreement_region(&p));
        // a zero mean
        let p = BanditParams::new(1.0, 10.0, 0.0, 1.0).unwrap();
        assert!(!in_disagreement_region(&p));
        // opposite signs never disagree
        let p = BanditParams::new(1.0, 100.0, -1.0, 0.1).unwrap();
        assert!(!in_disagreement_region(&p));
    }

    #[test]
    fn region_is_symmetric_in_arm_labels() {
        let p = BanditParams::new(1.0, 1.0, 2.0, 4.0).unwrap();
        assert!(in_disagreement_region(&p));
    }

    #[test]
    fn monte_carlo_examples() {
        let p = BanditParams::new(0.0, 1.0, 2.0, 4.0).unwrap();
        let s = monte_carlo_arm_stats(&p, Arm::First, 1_000_000, 1).unwrap();
        assert!((s.win_prob - 0.5).abs() < 0.002);
        let s = monte_carlo_arm_stats(&p, Arm::Second, 1_000_000, 7).unwrap();
        assert!((s.win_prob - PHI_HALF).abs() < 0.002);

        let p = BanditParams::new(-3.0, 1.0, 1.0, 1.0).unwrap();
        let s = monte_carlo_arm_stats(&p, Arm::First, 100_000, 3).unwrap();
        assert!((s.score_mean + 3.0).abs() < 0.02);
    }

    #[test]
    fn monte_carlo_rejects_zero_samples() {
        let p = BanditParams::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            monte_carlo_arm_stats(&p, Arm::First, 0, 0),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let p = BanditParams::new(0.3, 1.2, 0.0, 1.0).unwrap();
        let a = monte_carlo_arm_stats(&p, Arm::First, 1000, 11).unwrap();
        let b = monte_carlo_arm_stats(&p, Arm::First, 1000, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_scan_grid_size() {
        let grid = ScanGrid::default();
        assert_eq!(grid.mu_values().unwrap().len(), 12);
        assert_eq!(grid.sigma_values().unwrap().len(), 16);
        assert_eq!(scan(&grid).unwrap().len(), 12 * 11 * 16 * 16);
    }
}
