//! Exact return probabilities of the simple random walk, expected
//! self-intersection counts, and the constant κ = Σ_k P{S_k = 0}.
//!
//! Return probabilities are built dimension by dimension: out of k steps,
//! the number j taken along the first axis is Binomial(k, 1/d), and the
//! remaining k - j steps form a (d-1)-dimensional walk, so
//!
//!   P_d(k) = Σ_j Bin(k, 1/d)(j) · P_1(j) · P_{d-1}(k - j).
//!
//! The binomial weights are evaluated in log space and truncated to
//! ±13 standard deviations around the mean (neglected mass < 1e-37),
//! which costs O(√k) per entry.
//!
//! κ is computed two ways: the truncated series with a local-limit tail,
//! and the lattice Green function G(0) = (2π)^{-d} ∫ dθ / (1 - φ(θ)) by
//! Gauss–Legendre quadrature. G(0) - 1 = κ.

use crate::error::{LabError, Result};
use crate::stats::CompensatedSum;
use crate::walk::check_dimension;

/// Table of P{S_k = 0} for k = 0..=max_steps in a fixed dimension.
#[derive(Debug, Clone)]
pub struct ReturnProbabilities {
    dim: usize,
    probs: Vec<f64>,
}

/// ln k! for k = 0..=n with compensated accumulation.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = CompensatedSum::default();
    out.push(0.0);
    for k in 1..=n {
        acc.add((k as f64).ln());
        out.push(acc.value());
    }
    out
}

/// P_1(k) = C(k, k/2) 2^{-k} for even k, else 0.
fn one_dimensional(max_steps: usize) -> Vec<f64> {
    let mut p = vec![0.0; max_steps + 1];
    p[0] = 1.0;
    let mut j = 2;
    while j <= max_steps {
        p[j] = p[j - 2] * (j - 1) as f64 / j as f64;
        j += 2;
    }
    p
}

impl ReturnProbabilities {
    pub fn new(dim: usize, max_steps: usize) -> Result<Self> {
        check_dimension(dim)?;
        let p1 = one_dimensional(max_steps);
        let mut probs = p1.clone();
        if dim > 1 {
            let lf = log_factorials(max_steps);
            for d in 2..=dim {
                probs = add_axis(&probs, &p1, d, &lf);
            }
        }
        Ok(ReturnProbabilities { dim, probs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_steps(&self) -> usize {
        self.probs.len() - 1
    }

    /// P{S_k = 0}; panics past the table.
    pub fn get(&self, k: usize) -> f64 {
        self.probs[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Rough bound on the accumulated floating-point error of any entry:
    /// log-space weights carry absolute error ~ k·ε in the exponent.
    pub fn rounding_error_bound(&self) -> f64 {
        let k = self.max_steps() as f64;
        (self.dim as f64) * (k.max(1.0) * f64::EPSILON * 8.0 + 1e-37)
    }
}

/// Combine a (d-1)-dimensional table with one more axis.
fn add_axis(lower: &[f64], p1: &[f64], d: usize, lf: &[f64]) -> Vec<f64> {
    let n = lower.len() - 1;
    let p = 1.0 / d as f64;
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut out = vec![0.0; n + 1];
    out[0] = 1.0;
    for k in (2..=n).step_by(2) {
        let kf = k as f64;
        let sd = (kf * p * (1.0 - p)).sqrt();
        let lo = ((kf * p - 13.0 * sd - 2.0).floor().max(0.0)) as usize & !1;
        let hi = ((kf * p + 13.0 * sd + 2.0).ceil() as usize).min(k);
        let mut acc = 0.0;
        let mut j = lo;
        while j <= hi {
            let lw = lf[k] - lf[j] - lf[k - j] + j as f64 * lp + (k - j) as f64 * lq;
            acc += lw.exp() * p1[j] * lower[k - j];
            j += 2;
        }
        out[k] = acc;
    }
    out
}

/// Exact P{S_k = 0} for the d-dimensional simple walk.
pub fn return_probability(k: usize, dim: usize) -> Result<f64> {
    if k % 2 == 1 {
        check_dimension(dim)?;
        return Ok(0.0);
    }
    Ok(ReturnProbabilities::new(dim, k)?.get(k))
}

/// E[#{i < k <= n : S_i = S_k}] = Σ_{j=1}^{n-1} (n - j) P{S_j = 0}, with a
/// floating-point error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionExpectation {
    pub value: f64,
    pub error_bound: f64,
}

pub fn intersection_count_expect(n: usize, dim: usize) -> Result<IntersectionExpectation> {
    if n == 0 {
        return Err(LabError::Parameter("intersection count needs n >= 1".into()));
    }
    let table = ReturnProbabilities::new(dim, n)?;
    Ok(intersection_expectation_from(&table, n))
}

/// Same as [`intersection_count_expect`] from a precomputed table.
pub fn intersection_expectation_from(table: &ReturnProbabilities, n: usize) -> IntersectionExpectation {
    assert!(n <= table.max_steps() + 1, "table too short for n = {n}");
    let mut acc = CompensatedSum::default();
    for j in 1..n {
        acc.add((n - j) as f64 * table.get(j));
    }
    let value = acc.value();
    IntersectionExpectation { value, error_bound: value * table.rounding_error_bound() + f64::EPSILON * n as f64 }
}

/// Leading local-limit term: P{S_{2m} = 0} ≈ 2 (d / (4π m))^{d/2}.
fn local_limit(two_m: usize, dim: usize) -> f64 {
    let m = (two_m / 2) as f64;
    2.0 * (dim as f64 / (4.0 * std::f64::consts::PI * m)).powf(dim as f64 / 2.0)
}

/// Σ_{m > m0} m^{-s} by Euler–Maclaurin (s > 1).
fn power_tail(m0: usize, s: f64) -> f64 {
    let a = (m0 + 1) as f64;
    a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s / 12.0 * a.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * a.powf(-s - 3.0)
}

/// Truncated series Σ_{k<=K} P{S_k=0} plus a local-limit tail scaled by the
/// observed ratio at the cutoff.
fn kappa_series_at(dim: usize, cutoff: usize) -> Result<(f64, f64)> {
    let table = ReturnProbabilities::new(dim, cutoff)?;
    let mut acc = CompensatedSum::default();
    for k in 1..=cutoff {
        acc.add(table.get(k));
    }
    let k_last = cutoff & !1;
    let ratio = table.get(k_last) / local_limit(k_last, dim);
    let s = dim as f64 / 2.0;
    let coef = 2.0 * (dim as f64 / (4.0 * std::f64::consts::PI)).powf(s);
    let tail = coef * power_tail(k_last / 2, s);
    // The correction to the local limit is O(1/m); `ratio` captures it at
    // the cutoff and decays further out, so the two tails bracket the truth.
    let corrected = tail * ratio;
    Ok((acc.value() + corrected, (tail - corrected).abs()))
}

/// κ by truncated series with tail estimate, refined until consecutive
/// cutoffs agree within `tol / 4`.
pub fn kappa_series(dim: usize, tol: f64) -> Result<f64> {
    check_dimension(dim)?;
    if dim <= 2 {
        return Err(LabError::DivergentSeries(dim));
    }
    if !(tol > 0.0) {
        return Err(LabError::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut cutoff = 1 << 10;
    let (mut prev, _) = kappa_series_at(dim, cutoff)?;
    loop {
        cutoff *= 2;
        let (cur, tail_spread) = kappa_series_at(dim, cutoff)?;
        if ((cur - prev).abs() < tol / 4.0 && tail_spread < tol / 4.0) || cutoff >= 1 << 20 {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Lattice Green function at the origin, G(0) = Σ_{k>=0} P{S_k = 0}.
///
/// The last angular integral is done in closed form,
/// ∫_{-π}^{π} dθ / (a - cos θ) = 2π / √(a² - 1), leaving
///
///   G(0) = d π^{1-d} ∫_{[0,π]^{d-1}} (a² - 1)^{-1/2},  a = d - Σ cos θ_i.
///
/// The remaining point singularity at θ = 0 behaves like 1/|θ|. The cube is
/// split by which coordinate is largest (all pieces are equal by symmetry)
/// and each piece is mapped by θ_max = r, θ_other = r·s with Jacobian
/// r^{d-2}, which cancels the singularity; the smooth result is integrated
/// with a tensor Gauss–Legendre rule of `nodes` points per axis.
pub fn green_function_origin(dim: usize, nodes: usize) -> Result<f64> {
    check_dimension(dim)?;
    if dim <= 2 {
        return Err(LabError::DivergentSeries(dim));
    }
    if nodes < 8 {
        return Err(LabError::Parameter("quadrature needs at least 8 nodes per axis".into()));
    }
    let m = dim - 1;
    let pi = std::f64::consts::PI;
    let (gx, gw) = gauss_legendre(nodes);
    // Nodes mapped to [0, 1].
    let unit: Vec<(f64, f64)> = gx.iter().zip(&gw).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect();

    let mut total = CompensatedSum::default();
    let mut idx = vec![0usize; m - 1];
    for &(u, wu) in &unit {
        let r = pi * u;
        let cos_r = r.cos();
        loop {
            let mut weight = wu * pi;
            let mut a = dim as f64 - cos_r;
            let mut one_minus = 1.0 - cos_r;
            for &i in &idx {
                let (s, ws) = unit[i];
                weight *= ws;
                let c = (r * s).cos();
                a -= c;
                one_minus += 1.0 - c;
            }
            // a² - 1 = (a - 1)(a + 1) with a - 1 = Σ (1 - cos θ_i) kept exact.
            let val = r.powi(m as i32 - 1) / (one_minus * (a + 1.0)).sqrt();
            total.add(weight * val);
            if !advance(&mut idx, nodes) {
                break;
            }
        }
    }
    Ok(dim as f64 * pi.powi(1 - dim as i32) * m as f64 * total.value())
}

fn advance(idx: &mut [usize], base: usize) -> bool {
    for v in idx.iter_mut() {
        *v += 1;
        if *v < base {
            return true;
        }
        *v = 0;
    }
    false
}

/// κ from the Green-function quadrature: G(0) - 1.
pub fn kappa_quadrature(dim: usize) -> Result<f64> {
    Ok(green_function_origin(dim, 96)? - 1.0)
}

/// κ within ±tol; errors for d <= 2 where the series diverges.
pub fn kappa(dim: usize, tol: f64) -> Result<f64> {
    kappa_series(dim, tol)
}
