use crate::error::{LabError, Result};
use crate::replicates::map_replicates;
use crate::rng::Purpose;
use crate::stats::linear_fit;
use crate::walk::simulate_local_time_1d;

use super::local_time::{check_resolution, OccupationAccumulator};
use super::path::{check_grid_dt, BrownianPath, IncrementSource};

/// `α(t) = ∫ (ℓ_t^x)² dx` together with the width of the occupied region,
/// which bounds it below: `α(t) ≥ t² / range` by Cauchy–Schwarz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSample {
    pub t: f64,
    pub alpha: f64,
    pub range: f64,
}

impl AlphaSample {
    pub fn satisfies_lower_bound(&self) -> bool {
        self.alpha >= self.t * self.t / self.range * (1.0 - 1e-9)
    }
}

/// α of a stored path at each of the (ascending) `times`.
pub fn alpha_at_times(path: &BrownianPath, bin_width: f64, times: &[f64]) -> Result<Vec<AlphaSample>> {
    check_resolution(path.grid_dt, bin_width)?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(LabError::Parameter("times must be ascending".into()));
    }
    if let Some(&t) = times.last() {
        if t > path.t_max() * (1.0 + 1e-12) {
            return Err(LabError::InsufficientPath { needed: (t / path.grid_dt).ceil() as usize, found: path.steps() });
        }
    }
    let mut acc = OccupationAccumulator::new(bin_width)?;
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    let snapshot = |acc: &OccupationAccumulator, out: &mut Vec<AlphaSample>, t: f64| {
        out.push(AlphaSample { t, alpha: acc.alpha(), range: acc.occupied_bins().max(1) as f64 * bin_width });
    };
    while next < times.len() && times[next] <= 0.0 {
        snapshot(&acc, &mut out, times[next]);
        next += 1;
    }
    for (i, w) in path.values.windows(2).enumerate() {
        acc.add_segment(w[0], w[1], path.grid_dt);
        let t = (i + 1) as f64 * path.grid_dt;
        while next < times.len() && times[next] <= t + 0.5 * path.grid_dt {
            snapshot(&acc, &mut out, times[next]);
            next += 1;
        }
    }
    Ok(out)
}

/// Walk proxy for α(1): `n^{-3/2} Σ_x (L_n^x)²` of a simple walk on Z.
/// The range is the number of visited sites over `√n`.
pub fn alpha_proxy(n: u64, seed: u64, replicate: u64) -> AlphaSample {
    let field = simulate_local_time_1d(n, seed, replicate, Purpose::Walk);
    let scale = (n as f64).powf(1.5);
    AlphaSample { t: 1.0, alpha: field.sum_sq() / scale, range: field.support_size() as f64 / (n as f64).sqrt() }
}

/// `m` independent proxy samples (replicates `0..m`).
pub fn alpha_proxy_samples(n: u64, m: u64, seed: u64) -> Vec<AlphaSample> {
    map_replicates(m, |r| alpha_proxy(n, seed, r))
}

/// Largest increment `α(k+1) - α(k-1)` over integer `k < n` of a Brownian
/// path on `[0, n]`, divided by `n √(log n)`.
pub fn alpha_increment_ratio(n: u64, grid_dt: f64, bin_width: f64, seed: u64, replicate: u64) -> Result<f64> {
    check_grid_dt(grid_dt)?;
    check_resolution(grid_dt, bin_width)?;
    if n < 2 {
        return Err(LabError::Parameter("need n >= 2".into()));
    }
    let per_unit = (1.0 / grid_dt).round() as u64;
    let mut acc = OccupationAccumulator::new(bin_width)?;
    let mut src = IncrementSource::new(1.0 / per_unit as f64, seed, replicate);
    let mut w = 0.0;
    let mut history = vec![0.0f64];
    let mut best = 0.0f64;
    for k in 1..=n {
        for _ in 0..per_unit {
            let w1 = w + src.next_increment();
            acc.add_segment(w, w1, 1.0 / per_unit as f64);
            w = w1;
        }
        history.push(acc.alpha());
        if k >= 2 {
            best = best.max(history[k as usize] - history[k as usize - 2]);
        }
    }
    Ok(best / (n as f64 * (n as f64).ln().sqrt()))
}

/// Lower bound on r² below which the Laplace fit is flagged.
pub const A_STAR_MIN_R2: f64 = 0.99;

/// Minimum sample size for the a* fit.
pub const A_STAR_MIN_SAMPLES: usize = 100_000;

/// Laplace-transform fit of `-log E e^{-λα}` against `a* λ^{2/3} + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AStarFit {
    pub a_star: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(λ, -log mean e^{-λα})` for the λ values used.
    pub points: Vec<(f64, f64)>,
    /// λ values whose empirical mean underflowed.
    pub dropped: Vec<f64>,
    pub poor_fit: bool,
}

/// `k` geometrically spaced values from `lo` to `hi`.
pub fn lambda_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

pub fn a_star_fit(alphas: &[f64], lambdas: &[f64]) -> Result<AStarFit> {
    if alphas.len() < A_STAR_MIN_SAMPLES {
        return Err(LabError::Parameter(format!(
            "the Laplace fit needs at least {A_STAR_MIN_SAMPLES} samples, got {}",
            alphas.len()
        )));
    }
    if lambdas.iter().any(|&l| !(5.0..=100.0).contains(&l)) {
        return Err(LabError::Parameter("λ values must lie in [5, 100]".into()));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(LabError::Input("α samples must be finite and nonnegative".into()));
    }
    let min_alpha = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = alphas.len() as f64;
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &lambda in lambdas {
        // The largest term of the mean; if it underflows so does the mean.
        let top = -lambda * min_alpha;
        if top.exp() == 0.0 {
            dropped.push(lambda);
            continue;
        }
        let s: f64 = alphas.iter().map(|a| (-lambda * a - top).exp()).sum();
        points.push((lambda, -(top + s.ln() - n.ln())));
    }
    if points.len() < 3 {
        return Err(LabError::Input(format!("only {} λ values survived underflow; need 3", points.len())));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.powf(2.0 / 3.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(AStarFit {
        a_star: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points,
        dropped,
        poor_fit: fit.r_squared < A_STAR_MIN_R2,
    })
}
