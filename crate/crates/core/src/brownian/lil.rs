use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::hamiltonian::HamiltonianTrace;

use super::path::IncrementSource;

/// Reference value of the small-deviation constant of α(1).
pub const A_STAR: f64 = 2.189;

/// Checkpoints below this index are ignored by the running minimum
/// (`log log n` is not yet positive enough to normalise anything).
pub const LIL_BURN_IN: u64 = 1000;

/// Shortest horizon accepted for a LIL trajectory.
pub const LIL_MIN_HORIZON: u64 = 1_000_000;

/// Normalisation of `max_{k<=n}|H_k|` in the liminf statement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LilForm {
    /// `(log log n / n)^{3/4}`
    Line,
    /// `(log log n / (n log n))^{1/2}`
    Plane,
    /// `(log log n / n)^{1/2}`, d >= 3
    Space,
    /// `(log log t / t)^{1/2}` for Brownian motion itself.
    Brownian,
}

impl LilForm {
    pub fn for_dimension(dim: usize) -> Result<Self> {
        match dim {
            0 => Err(LabError::UnsupportedDimension { dim, reason: "walks need d >= 1" }),
            1 => Ok(LilForm::Line),
            2 => Ok(LilForm::Plane),
            _ => Ok(LilForm::Space),
        }
    }

    /// Factor multiplying the running maximum at index `n`.
    pub fn normaliser(self, n: f64) -> f64 {
        let l2 = n.ln().ln();
        match self {
            LilForm::Line => (l2 / n).powf(0.75),
            LilForm::Plane => (l2 / (n * n.ln())).sqrt(),
            LilForm::Space | LilForm::Brownian => (l2 / n).sqrt(),
        }
    }
}

/// Predicted liminf constant: `(a*)^{3/4} π/4`, `√π/4` or `π √(κ/8)`; for
/// Brownian motion Chung's `π/√8`.
pub fn lil_constant(form: LilForm, kappa: Option<f64>) -> Result<f64> {
    Ok(match form {
        LilForm::Line => A_STAR.powf(0.75) * PI / 4.0,
        LilForm::Plane => PI.sqrt() / 4.0,
        LilForm::Space => {
            let k = kappa.ok_or_else(|| LabError::Parameter("the d >= 3 constant needs κ".into()))?;
            PI * (k / 8.0).sqrt()
        }
        LilForm::Brownian => PI / 8f64.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LilPoint {
    pub n: u64,
    pub statistic: f64,
    pub running_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LilTrajectory {
    pub form: LilForm,
    pub points: Vec<LilPoint>,
}

impl LilTrajectory {
    pub fn final_running_min(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.running_min)
    }
}

/// `r(n)` from `(n, max_{k<=n}|X_k|)` pairs; the running minimum starts at
/// the burn-in index.
pub fn lil_from_maxima(form: LilForm, maxima: &[(u64, f64)]) -> Result<LilTrajectory> {
    let horizon = maxima.iter().map(|p| p.0).max().unwrap_or(0);
    if horizon < LIL_MIN_HORIZON {
        return Err(LabError::InsufficientHorizon { needed: LIL_MIN_HORIZON, got: horizon });
    }
    let mut running = f64::INFINITY;
    let points = maxima
        .iter()
        .filter(|p| p.0 >= LIL_BURN_IN)
        .map(|&(n, m)| {
            let statistic = form.normaliser(n as f64) * m;
            running = running.min(statistic);
            LilPoint { n, statistic, running_min: running }
        })
        .collect();
    Ok(LilTrajectory { form, points })
}

/// LIL trajectory of a Hamiltonian trace in dimension `dim`.
pub fn lil_trajectory(trace: &HamiltonianTrace, dim: usize) -> Result<LilTrajectory> {
    let maxima: Vec<(u64, f64)> = trace.checkpoints.iter().map(|c| (c.k, c.max_abs_h)).collect();
    lil_from_maxima(LilForm::for_dimension(dim)?, &maxima)
}

/// Chung statistic of Brownian motion sampled at integer times up to
/// `t_max`, recorded at the given ascending checkpoints.
pub fn brownian_lil(t_max: u64, checkpoints: &[u64], seed: u64, replicate: u64) -> Result<LilTrajectory> {
    let mut src = IncrementSource::new(1.0, seed, replicate);
    let mut w = 0.0f64;
    let mut max = 0.0f64;
    let mut maxima = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for t in 1..=t_max {
        w += src.next_increment();
        max = max.max(w.abs());
        while next < checkpoints.len() && checkpoints[next] <= t {
            if checkpoints[next] == t {
                maxima.push((t, max));
            }
            next += 1;
        }
    }
    lil_from_maxima(LilForm::Brownian, &maxima)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicted_constants() {
        assert!((lil_constant(LilForm::Line, None).unwrap() - 1.4135).abs() < 1e-4);
        assert!((lil_constant(LilForm::Plane, None).unwrap() - 0.4431).abs() < 1e-4);
        assert!((lil_constant(LilForm::Space, Some(0.516386)).unwrap() - 0.7982).abs() < 1e-4);
        assert!((lil_constant(LilForm::Brownian, None).unwrap() - 1.1107).abs() < 1e-4);
        assert!(lil_constant(LilForm::Space, None).is_err());
    }

    #[test]
    fn short_horizon_is_rejected() {
        let err = lil_from_maxima(LilForm::Line, &[(1000, 5.0), (10_000, 20.0)]).unwrap_err();
        assert!(matches!(err, LabError::InsufficientHorizon { .. }));
    }

    #[test]
    fn running_minimum_is_monotone() {
        let maxima: Vec<(u64, f64)> = (3..=20).map(|e| (1u64 << e, (1u64 << e) as f64 * 0.9)).collect();
        let t = lil_from_maxima(LilForm::Space, &maxima).unwrap();
        assert!(t.points.iter().all(|p| p.n >= LIL_BURN_IN));
        assert!(t.points.windows(2).all(|w| w[1].running_min <= w[0].running_min));
    }
}
