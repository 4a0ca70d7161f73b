use crate::error::{LabError, Result};

use super::local_time::{check_resolution, OccupationAccumulator};
use super::path::{check_grid_dt, BrownianPath, IncrementSource};

/// Coupling error at one walk length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingError {
    pub n: u64,
    /// `max_x |L_n^x - ℓ_{τ_n}^x|` with `τ_n` the n-th displacement time.
    pub at_displacement_time: f64,
    /// `max_x |L_n^x - ℓ_n^x|` at the deterministic time `n`.
    pub at_fixed_time: f64,
    /// τ_n.
    pub displacement_time: f64,
}

/// A simple walk built from a Brownian path by successive unit
/// displacements, with its local-time discrepancy.
#[derive(Debug, Clone, PartialEq)]
pub struct RevezCoupling {
    /// Walk positions `S_1..S_n`.
    pub embedded_walk: Vec<i64>,
    /// Grid index (number of grid steps) at which each displacement completed.
    pub hitting_indices: Vec<u64>,
    pub grid_dt: f64,
    /// One entry per requested walk length, ascending in `n`.
    pub errors: Vec<CouplingError>,
}

impl RevezCoupling {
    /// Error at the largest walk length.
    pub fn coupling_error(&self) -> f64 {
        self.errors.last().map_or(0.0, |e| e.at_displacement_time)
    }

    pub fn displacement_times(&self) -> Vec<f64> {
        self.hitting_indices.iter().map(|&i| i as f64 * self.grid_dt).collect()
    }
}

/// Dense walk local times over integer sites.
#[derive(Debug, Clone, Default)]
struct Visits {
    offset: i64,
    counts: Vec<u64>,
}

impl Visits {
    fn bump(&mut self, x: i64) {
        if self.counts.is_empty() {
            self.offset = x;
        }
        if x < self.offset {
            let grow = (self.offset - x) as usize;
            let mut v = vec![0; grow];
            v.extend_from_slice(&self.counts);
            self.counts = v;
            self.offset = x;
        }
        let i = (x - self.offset) as usize;
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += 1;
    }

    fn get(&self, x: i64) -> u64 {
        let i = x - self.offset;
        if i < 0 || i as usize >= self.counts.len() {
            0
        } else {
            self.counts[i as usize]
        }
    }

    fn range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.counts.len() as i64 - 1)
    }
}

/// Snapshot of `ℓ` at integer sites over `[lo, lo + values.len())`.
#[derive(Debug, Clone)]
struct IntegerLocalTimes {
    lo: i64,
    values: Vec<f64>,
}

impl IntegerLocalTimes {
    fn take(acc: &OccupationAccumulator, per_unit: i64, lo: i64, hi: i64) -> Self {
        IntegerLocalTimes { lo, values: (lo..=hi).map(|x| acc.density(x * per_unit)).collect() }
    }

    fn get(&self, x: i64) -> f64 {
        let i = x - self.lo;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }
}

fn sup_distance(walk: &Visits, ell: &IntegerLocalTimes) -> f64 {
    let (wlo, whi) = walk.range();
    let lo = wlo.min(ell.lo);
    let hi = whi.max(ell.lo + ell.values.len() as i64 - 1);
    (lo..=hi).map(|x| (walk.get(x) as f64 - ell.get(x)).abs()).fold(0.0, f64::max)
}

/// Incremental coupler fed one grid segment at a time.
struct Coupler {
    grid_dt: f64,
    per_unit: i64,
    acc: OccupationAccumulator,
    visits: Visits,
    s: i64,
    grid_steps: u64,
    walk: Vec<i64>,
    hits: Vec<u64>,
    /// Brownian integer range so far.
    w_lo: i64,
    w_hi: i64,
    targets: Vec<u64>,
    at_displacement: Vec<Option<(f64, f64)>>,
    walk_snapshots: Vec<Option<Visits>>,
    fixed_snapshots: Vec<Option<IntegerLocalTimes>>,
    next_fixed: usize,
}

impl Coupler {
    fn new(grid_dt: f64, bin_width: f64, mut targets: Vec<u64>) -> Result<Self> {
        check_grid_dt(grid_dt)?;
        check_resolution(grid_dt, bin_width)?;
        let per_unit = (1.0 / bin_width).round();
        if per_unit < 1.0 || (per_unit * bin_width - 1.0).abs() > 1e-9 {
            return Err(LabError::Parameter(format!("bin width {bin_width} must divide 1 so integers are bin centres")));
        }
        targets.sort_unstable();
        targets.dedup();
        if targets.first() == Some(&0) || targets.is_empty() {
            return Err(LabError::Parameter("walk lengths must be positive".into()));
        }
        let m = targets.len();
        Ok(Coupler {
            grid_dt,
            per_unit: per_unit as i64,
            acc: OccupationAccumulator::new(bin_width)?,
            visits: Visits::default(),
            s: 0,
            grid_steps: 0,
            walk: Vec::new(),
            hits: Vec::new(),
            w_lo: 0,
            w_hi: 0,
            targets,
            at_displacement: vec![None; m],
            walk_snapshots: vec![None; m],
            fixed_snapshots: vec![None; m],
            next_fixed: 0,
        })
    }

    fn n_max(&self) -> u64 {
        *self.targets.last().unwrap()
    }

    fn done(&self) -> bool {
        self.walk.len() as u64 >= self.n_max() && self.next_fixed == self.targets.len()
    }

    /// Feed the segment `w0 -> w1`. `bridge_u`, when given, is a uniform
    /// used to detect a crossing between grid points.
    #[inline]
    fn segment(&mut self, w0: f64, w1: f64, bridge_u: Option<f64>) {
        let dt = self.grid_dt;
        self.acc.add_segment(w0, w1, dt);
        self.grid_steps += 1;
        self.w_lo = self.w_lo.min(w1.floor() as i64);
        self.w_hi = self.w_hi.max(w1.ceil() as i64);
        if (self.walk.len() as u64) < self.n_max() {
            let hi = (self.s + 1) as f64;
            let lo = (self.s - 1) as f64;
            let mut step = if w1 >= hi {
                1
            } else if w1 <= lo {
                -1
            } else {
                0
            };
            if step == 0 {
                if let Some(u) = bridge_u {
                    let p_up = (-2.0 * (hi - w0) * (hi - w1) / dt).exp();
                    let p_down = (-2.0 * (w0 - lo) * (w1 - lo) / dt).exp();
                    if u < p_up {
                        step = 1;
                    } else if u < p_up + p_down {
                        step = -1;
                    }
                }
            }
            if step != 0 {
                self.s += step;
                self.visits.bump(self.s);
                self.walk.push(self.s);
                self.hits.push(self.grid_steps);
                let k = self.walk.len() as u64;
                if let Ok(i) = self.targets.binary_search(&k) {
                    let (vlo, vhi) = self.visits.range();
                    let ell = IntegerLocalTimes::take(&self.acc, self.per_unit, vlo.min(self.w_lo), vhi.max(self.w_hi));
                    let err = sup_distance(&self.visits, &ell);
                    self.at_displacement[i] = Some((err, self.grid_steps as f64 * dt));
                    self.walk_snapshots[i] = Some(self.visits.clone());
                }
            }
        }
        let t = self.grid_steps as f64 * dt;
        while self.next_fixed < self.targets.len() && t >= self.targets[self.next_fixed] as f64 - 0.5 * dt {
            self.fixed_snapshots[self.next_fixed] =
                Some(IntegerLocalTimes::take(&self.acc, self.per_unit, self.w_lo, self.w_hi));
            self.next_fixed += 1;
        }
    }

    /// Needs a bridge check at all: only near a barrier.
    #[inline]
    fn near_barrier(&self, w0: f64, w1: f64) -> bool {
        let far = 20.0 * self.grid_dt;
        let hi = (self.s + 1) as f64;
        let lo = (self.s - 1) as f64;
        (hi - w0) * (hi - w1) < far || (w0 - lo) * (w1 - lo) < far
    }

    fn finish(self) -> RevezCoupling {
        let errors = self
            .targets
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let (at_disp, tau) = self.at_displacement[i].expect("walk reached every target");
                let walk = self.walk_snapshots[i].as_ref().unwrap();
                let fixed = sup_distance(walk, self.fixed_snapshots[i].as_ref().unwrap());
                CouplingError { n, at_displacement_time: at_disp, at_fixed_time: fixed, displacement_time: tau }
            })
            .collect();
        RevezCoupling { embedded_walk: self.walk, hitting_indices: self.hits, grid_dt: self.grid_dt, errors }
    }
}

/// Build the walk from a stored path, detecting displacements at grid
/// points only. Fails if the path has fewer than `n_steps` displacements
/// or ends before time `n_steps`.
pub fn revesz_embed(path: &BrownianPath, n_steps: u64, bin_width: f64) -> Result<RevezCoupling> {
    let mut c = Coupler::new(path.grid_dt, bin_width, vec![n_steps])?;
    for w in path.values.windows(2) {
        c.segment(w[0], w[1], None);
        if c.done() {
            return Ok(c.finish());
        }
    }
    Err(LabError::InsufficientPath { needed: n_steps as usize, found: c.walk.len() })
}

/// Streamed coupling: the Brownian path is generated on the fly (so it
/// never runs out) with bridge-corrected displacement detection, and the
/// coupling error is recorded at every walk length in `ns`.
pub fn revesz_stream(ns: &[u64], grid_dt: f64, bin_width: f64, seed: u64, replicate: u64) -> Result<RevezCoupling> {
    let mut c = Coupler::new(grid_dt, bin_width, ns.to_vec())?;
    let mut src = IncrementSource::new(grid_dt, seed, replicate);
    let mut w = 0.0f64;
    while !c.done() {
        let w1 = w + src.next_increment();
        let u = if c.near_barrier(w, w1) { Some(src.uniform()) } else { None };
        c.segment(w, w1, u);
        w = w1;
    }
    Ok(c.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::brownian_path;

    #[test]
    fn embedded_walk_is_a_simple_walk() {
        let c = revesz_stream(&[2000], 1e-2, 0.1, 4, 0).unwrap();
        assert_eq!(c.embedded_walk.len(), 2000);
        let mut prev = 0;
        for &s in &c.embedded_walk {
            assert_eq!((s - prev).abs(), 1);
            prev = s;
        }
        assert!(c.hitting_indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(c.errors.len(), 1);
        assert!(c.errors[0].at_displacement_time > 0.0);
    }

    #[test]
    fn short_path_is_insufficient() {
        let p = brownian_path(5.0, 1e-2, 1).unwrap();
        assert!(matches!(revesz_embed(&p, 1000, 0.1), Err(LabError::InsufficientPath { needed: 1000, .. })));
    }

    #[test]
    fn stored_path_embedding() {
        let p = brownian_path(400.0, 1e-2, 2).unwrap();
        let c = revesz_embed(&p, 100, 0.1).unwrap();
        assert_eq!(c.embedded_walk.len(), 100);
        // Each displacement moves the path by at least one unit.
        let t = c.displacement_times();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        // Without bridge checks a displacement is seen once the grid value
        // is at or beyond the new site.
        let mut prev = 0;
        for (&s, &i) in c.embedded_walk.iter().zip(&c.hitting_indices) {
            let w = p.values[i as usize];
            if s > prev {
                assert!(w >= s as f64);
            } else {
                assert!(w <= s as f64);
            }
            prev = s;
        }
    }

    #[test]
    fn bin_width_must_divide_one() {
        assert!(revesz_stream(&[10], 1e-2, 0.3, 1, 0).is_err());
        assert!(revesz_stream(&[10], 1e-2, 0.05, 1, 0).is_err());
    }

    #[test]
    fn displacement_statistics() {
        let n = 20_000;
        let c = revesz_stream(&[n], 1e-2, 0.1, 8, 0).unwrap();
        let ups = c.embedded_walk.iter().scan(0, |p, &s| {
            let up = s > *p;
            *p = s;
            Some(up)
        });
        let freq = ups.filter(|&u| u).count() as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 / (n as f64).sqrt(), "up frequency {freq}");
        let mean_gap = *c.displacement_times().last().unwrap() / n as f64;
        assert!((mean_gap - 1.0).abs() < 0.05, "mean displacement time {mean_gap}");
    }
}
