use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{LabError, Result};
use crate::rng::{self, LabRng, Purpose};

/// Brownian motion sampled on a uniform grid, `values[0] = W(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub grid_dt: f64,
    pub values: Vec<f64>,
}

pub(crate) fn check_grid_dt(grid_dt: f64) -> Result<()> {
    if !(grid_dt > 0.0 && grid_dt.is_finite()) {
        return Err(LabError::Parameter(format!("grid step must be positive, got {grid_dt}")));
    }
    Ok(())
}

impl BrownianPath {
    pub fn from_values(grid_dt: f64, values: Vec<f64>) -> Result<Self> {
        check_grid_dt(grid_dt)?;
        if values.is_empty() {
            return Err(LabError::Input("a path needs at least its starting value".into()));
        }
        Ok(BrownianPath { grid_dt, values })
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.steps() as f64 * self.grid_dt
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    pub fn quadratic_variation(&self) -> f64 {
        self.increments().map(|d| d * d).sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `(inf, sup)` of the grid values.
    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((0.0f64, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }
}

/// Gaussian increments of variance `grid_dt`.
#[derive(Debug, Clone)]
pub struct IncrementSource {
    rng: LabRng,
    sd: f64,
}

impl IncrementSource {
    pub fn new(grid_dt: f64, seed: u64, replicate: u64) -> Self {
        IncrementSource { rng: rng::stream(seed, replicate, Purpose::Brownian), sd: grid_dt.sqrt() }
    }

    #[inline]
    pub fn next_increment(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sd * z
    }

    /// A uniform on (0, 1) from the same stream.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        rng::open01(self.rng.random())
    }
}

/// Path on `[0, t_max]` from replicate 0 of the Brownian stream.
pub fn brownian_path(t_max: f64, grid_dt: f64, seed: u64) -> Result<BrownianPath> {
    brownian_path_replicate(t_max, grid_dt, seed, 0)
}

pub fn brownian_path_replicate(t_max: f64, grid_dt: f64, seed: u64, replicate: u64) -> Result<BrownianPath> {
    check_grid_dt(grid_dt)?;
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(LabError::Parameter(format!("time horizon must be finite and nonnegative, got {t_max}")));
    }
    let steps = (t_max / grid_dt).round() as usize;
    let mut src = IncrementSource::new(grid_dt, seed, replicate);
    let mut values = Vec::with_capacity(steps + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..steps {
        w += src.next_increment();
        values.push(w);
    }
    Ok(BrownianPath { grid_dt, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, ks_critical_99, normal_cdf, Sample};

    #[test]
    fn zero_grid_step_is_rejected() {
        assert!(matches!(brownian_path(1.0, 0.0, 1), Err(LabError::Parameter(_))));
    }

    #[test]
    fn increments_are_standard_gaussian() {
        let p = brownian_path(10.0, 1e-3, 3).unwrap();
        let z: Vec<f64> = p.increments().map(|d| d / p.grid_dt.sqrt()).collect();
        let n = z.len();
        let ks = ks_one_sample(&Sample::new(z), normal_cdf).unwrap();
        assert!(ks < ks_critical_99(n), "ks = {ks}");
    }

    #[test]
    fn quadratic_variation_on_unit_interval() {
        let p = brownian_path(1.0, 1e-4, 9).unwrap();
        assert_eq!(p.steps(), 10_000);
        assert!((p.quadratic_variation() - 1.0).abs() < 0.05);
    }

    #[test]
    fn terminal_value_moments() {
        let m = 2000;
        let w: Vec<f64> = (0..m).map(|r| *brownian_path_replicate(1.0, 1e-3, 5, r).unwrap().values.last().unwrap()).collect();
        let mean = w.iter().sum::<f64>() / m as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 1.0).abs() < 0.12, "variance {var}");
    }
}
