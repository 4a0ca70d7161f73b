use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::replicates::map_replicates;
use crate::stats::{wilson_interval, Z_99};

use super::path::{check_grid_dt, IncrementSource};

/// Outcome of the small-ball comparison at one level `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallBallRow {
    pub y: f64,
    pub successes: u64,
    pub trials: u64,
    /// Empirical `P{sup_{s<=t} |W_s| < y √t}`.
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(2/π) exp(-π²/(8y²))`.
    pub lower: f64,
    /// `(4/π) exp(-π²/(8y²))`.
    pub upper: f64,
    /// The 99% Wilson interval meets `[lower, upper]`.
    pub pass: bool,
}

/// Two-sided bounds on `P{sup_{s<=t}|W_s| < y √t}`.
pub fn small_ball_bounds(y: f64) -> (f64, f64) {
    let e = (-PI * PI / (8.0 * y * y)).exp();
    (2.0 / PI * e, 4.0 / PI * e)
}

/// `P{sup_{s<=t}|W_s| < y}` from the reflection series
/// `(4/π) Σ_k (-1)^k/(2k+1) exp(-(2k+1)² π² t / (8 y²))`.
pub fn small_ball_series(y: f64, t: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..200 {
        let j = (2 * k + 1) as f64;
        let term = (-j * j * PI * PI * t / (8.0 * y * y)).exp() / j;
        sum += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (4.0 / PI * sum).clamp(0.0, 1.0)
}

/// Number of the (ascending) levels that one path on `[0, t]` stays
/// strictly inside; the survivors are always a suffix of `ys`.
///
/// Crossings between grid points are detected with the Brownian-bridge
/// probability of touching either barrier, using one uniform per grid step
/// for all levels so that survival is monotone in `y`.
fn surviving_levels(ys: &[f64], steps: u64, grid_dt: f64, src: &mut IncrementSource) -> usize {
    let mut first_alive = 0usize;
    let far = 20.0 * grid_dt;
    let mut w = 0.0f64;
    for _ in 0..steps {
        let w1 = w + src.next_increment();
        while first_alive < ys.len() && w1.abs() >= ys[first_alive] {
            first_alive += 1;
        }
        if first_alive == ys.len() {
            return 0;
        }
        let y = ys[first_alive];
        if (y - w) * (y - w1) < far || (y + w) * (y + w1) < far {
            let u = src.uniform();
            while first_alive < ys.len() {
                let y = ys[first_alive];
                let p = (-2.0 * (y - w) * (y - w1) / grid_dt).exp() + (-2.0 * (y + w) * (y + w1) / grid_dt).exp();
                if u < p {
                    first_alive += 1;
                } else {
                    break;
                }
            }
            if first_alive == ys.len() {
                return 0;
            }
        }
        w = w1;
    }
    ys.len() - first_alive
}

/// Monte Carlo check of the small-ball bounds at each level in `y_values`.
/// Levels are scaled by `√t`, so the bounds do not depend on `t`.
pub fn small_ball_check(y_values: &[f64], t: f64, replicates: u64, seed: u64, grid_dt: f64) -> Result<Vec<SmallBallRow>> {
    check_grid_dt(grid_dt)?;
    if y_values.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return Err(LabError::Parameter("levels must be positive and finite".into()));
    }
    if !(t > 0.0 && t.is_finite()) || replicates == 0 {
        return Err(LabError::Parameter("need t > 0 and at least one replicate".into()));
    }
    let mut order: Vec<usize> = (0..y_values.len()).collect();
    order.sort_by(|&a, &b| y_values[a].total_cmp(&y_values[b]));
    let scaled: Vec<f64> = order.iter().map(|&i| y_values[i] * t.sqrt()).collect();
    let steps = (t / grid_dt).round() as u64;
    let survivors = map_replicates(replicates, |r| {
        let mut src = IncrementSource::new(grid_dt, seed, r);
        surviving_levels(&scaled, steps, grid_dt, &mut src)
    });
    let mut rows = vec![None; y_values.len()];
    for (rank, &i) in order.iter().enumerate() {
        let alive_needed = scaled.len() - rank;
        let successes = survivors.iter().filter(|&&s| s >= alive_needed).count() as u64;
        let (ci_low, ci_high) = wilson_interval(successes, replicates, Z_99);
        let (lower, upper) = small_ball_bounds(y_values[i]);
        rows[i] = Some(SmallBallRow {
            y: y_values[i],
            successes,
            trials: replicates,
            empirical: successes as f64 / replicates as f64,
            ci_low,
            ci_high,
            lower,
            upper,
            pass: ci_low <= upper && ci_high >= lower,
        });
    }
    Ok(rows.into_iter().map(Option::unwrap).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        let (lo, hi) = small_ball_bounds(0.5);
        assert!((lo - 0.004578).abs() < 1e-5 && (hi - 0.009157).abs() < 1e-5);
        let (lo, hi) = small_ball_bounds(1.0);
        assert!((lo - 0.18539).abs() < 1e-4 && (hi - 0.37078).abs() < 1e-4);
    }

    #[test]
    fn large_levels_are_trivially_consistent() {
        let rows = small_ball_check(&[10.0], 1.0, 1000, 1, 1e-2).unwrap();
        assert_eq!(rows[0].empirical, 1.0);
        assert!(rows[0].upper > 1.0 && rows[0].pass);
    }

    #[test]
    fn rows_follow_input_order_and_are_monotone() {
        let rows = small_ball_check(&[1.0, 0.5, 0.7], 1.0, 2000, 2, 1e-2).unwrap();
        assert_eq!(rows.iter().map(|r| r.y).collect::<Vec<_>>(), vec![1.0, 0.5, 0.7]);
        assert!(rows[1].successes <= rows[2].successes && rows[2].successes <= rows[0].successes);
        assert!(rows.iter().all(|r| r.ci_low <= r.empirical && r.empirical <= r.ci_high));
    }

    #[test]
    fn bad_parameters() {
        assert!(small_ball_check(&[0.0], 1.0, 10, 1, 1e-2).is_err());
        assert!(small_ball_check(&[1.0], 1.0, 0, 1, 1e-2).is_err());
        assert!(small_ball_check(&[1.0], 1.0, 10, 1, 0.0).is_err());
    }
}
