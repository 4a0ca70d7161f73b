use crate::error::{LabError, Result};

use super::path::BrownianPath;

/// Occupation time collected in bins of width `h` centred at `j h`.
///
/// Each grid segment is treated as linear between its endpoints, and its
/// duration is split across the bins it crosses in proportion to length.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationAccumulator {
    h: f64,
    offset: i64,
    occupation: Vec<f64>,
    elapsed: f64,
    sum_sq: f64,
}

impl OccupationAccumulator {
    pub fn new(bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(LabError::Parameter(format!("bin width must be positive, got {bin_width}")));
        }
        Ok(OccupationAccumulator { h: bin_width, offset: 0, occupation: Vec::new(), elapsed: 0.0, sum_sq: 0.0 })
    }

    pub fn bin_width(&self) -> f64 {
        self.h
    }

    /// Index of the bin containing `x`.
    #[inline]
    pub fn bin_of(&self, x: f64) -> i64 {
        (x / self.h).round() as i64
    }

    fn ensure(&mut self, j: i64) -> usize {
        if self.occupation.is_empty() {
            self.offset = j;
            self.occupation.push(0.0);
            return 0;
        }
        if j < self.offset {
            let grow = ((self.offset - j) as usize).max(self.occupation.len());
            let mut v = vec![0.0; grow];
            v.extend_from_slice(&self.occupation);
            self.occupation = v;
            self.offset -= grow as i64;
        }
        let idx = (j - self.offset) as usize;
        if idx >= self.occupation.len() {
            let len = (idx + 1).max(2 * self.occupation.len());
            self.occupation.resize(len, 0.0);
        }
        idx
    }

    #[inline]
    fn deposit(&mut self, j: i64, time: f64) {
        let idx = self.ensure(j);
        let o = &mut self.occupation[idx];
        self.sum_sq += time * (2.0 * *o + time);
        *o += time;
    }

    /// Add the segment from `x0` to `x1` lasting `dt`.
    #[inline]
    pub fn add_segment(&mut self, x0: f64, x1: f64, dt: f64) {
        self.elapsed += dt;
        let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
        let (jlo, jhi) = (self.bin_of(lo), self.bin_of(hi));
        if jlo == jhi {
            self.deposit(jlo, dt);
            return;
        }
        let per_length = dt / (hi - lo);
        for j in jlo..=jhi {
            let a = lo.max((j as f64 - 0.5) * self.h);
            let b = hi.min((j as f64 + 0.5) * self.h);
            if b > a {
                self.deposit(j, (b - a) * per_length);
            }
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Local-time estimate in bin `j`: occupation divided by the width.
    #[inline]
    pub fn density(&self, j: i64) -> f64 {
        let idx = j - self.offset;
        if idx < 0 || idx as usize >= self.occupation.len() {
            0.0
        } else {
            self.occupation[idx as usize] / self.h
        }
    }

    /// `∫ ℓ² dx` for the binned field, maintained incrementally.
    pub fn alpha(&self) -> f64 {
        self.sum_sq / self.h
    }

    /// Bins with positive occupation.
    pub fn occupied_bins(&self) -> usize {
        self.occupation.iter().filter(|&&o| o > 0.0).count()
    }

    pub fn field(&self) -> BrownianLocalTimeField {
        let first = self.occupation.iter().position(|&o| o > 0.0).unwrap_or(0);
        let last = self.occupation.iter().rposition(|&o| o > 0.0).map_or(0, |i| i + 1);
        BrownianLocalTimeField {
            bin_width: self.h,
            first_bin: self.offset + first as i64,
            bins: self.occupation[first..last.max(first)].iter().map(|o| o / self.h).collect(),
        }
    }
}

/// Binned Brownian local time: `bins[i]` estimates `ℓ^x` for `x` in the
/// bin centred at `(first_bin + i) * bin_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLocalTimeField {
    pub bin_width: f64,
    pub first_bin: i64,
    pub bins: Vec<f64>,
}

impl BrownianLocalTimeField {
    /// Time represented by the field, `bin_width · Σ bins`.
    pub fn total_time(&self) -> f64 {
        self.bin_width * self.bins.iter().sum::<f64>()
    }

    /// Estimate of `ℓ^x`.
    pub fn at(&self, x: f64) -> f64 {
        let j = (x / self.bin_width).round() as i64 - self.first_bin;
        if j < 0 || j as usize >= self.bins.len() {
            0.0
        } else {
            self.bins[j as usize]
        }
    }

    /// `∫ (ℓ^x)² dx`.
    pub fn alpha(&self) -> f64 {
        self.bin_width * self.bins.iter().map(|b| b * b).sum::<f64>()
    }

    /// Width of the bins with positive local time.
    pub fn support_width(&self) -> f64 {
        self.bin_width * self.bins.iter().filter(|&&b| b > 0.0).count() as f64
    }
}

/// Binned local time of `path` over its whole horizon. The bin width must
/// be at least `√grid_dt`, otherwise bins are narrower than a typical step.
pub fn local_time(path: &BrownianPath, bin_width: f64) -> Result<BrownianLocalTimeField> {
    check_resolution(path.grid_dt, bin_width)?;
    let mut acc = OccupationAccumulator::new(bin_width)?;
    for w in path.values.windows(2) {
        acc.add_segment(w[0], w[1], path.grid_dt);
    }
    Ok(acc.field())
}

pub(crate) fn check_resolution(grid_dt: f64, bin_width: f64) -> Result<()> {
    // Allow for rounding in e.g. 0.1 vs sqrt(0.01).
    if !(bin_width >= grid_dt.sqrt() * (1.0 - 1e-12)) {
        return Err(LabError::Parameter(format!(
            "bin width {bin_width} is below the resolution limit sqrt(grid_dt) = {}",
            grid_dt.sqrt()
        )));
    }
    Ok(())
}
