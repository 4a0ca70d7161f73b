//! Statistical primitives shared by the experiments: normal distribution
//! functions, Kolmogorov–Smirnov distances, log-log regression and
//! confidence intervals.
//!
//! KS p-values are deliberately absent; experiments compare statistics
//! against fixed critical values.

use crate::error::{LabError, Result};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

/// Standard normal CDF.
///
/// Evaluated as `erfc(-x/sqrt 2)/2` with the fdlibm rational approximations
/// of `erfc` (libm crate), whose error is below one ulp on the whole line;
/// the composed error is far below 1e-12.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse standard normal CDF for `p` in (0, 1).
///
/// Acklam's rational approximation (relative error 1.15e-9) followed by
/// one Halley step against [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile needs p in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// A sample of reals, optionally known to be sorted.
#[derive(Debug, Clone, Default)]
pub struct Sample {
    values: Vec<f64>,
    sorted: bool,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Self {
        Sample { values, sorted: false }
    }

    /// Sort in place (NaNs last) and mark as sorted.
    pub fn into_sorted(mut self) -> Self {
        self.sort();
        self
    }

    pub fn sort(&mut self) {
        if !self.sorted {
            self.values.sort_by(f64::total_cmp);
            self.sorted = true;
        }
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn sorted_values(&self) -> std::borrow::Cow<'_, [f64]> {
        if self.sorted {
            std::borrow::Cow::Borrowed(&self.values)
        } else {
            let mut v = self.values.clone();
            v.sort_by(f64::total_cmp);
            std::borrow::Cow::Owned(v)
        }
    }

    /// Empirical quantile by linear interpolation between order statistics.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        quantile_sorted(&self.sorted_values(), q)
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }
}

impl From<Vec<f64>> for Sample {
    fn from(values: Vec<f64>) -> Self {
        Sample::new(values)
    }
}

fn quantile_sorted(v: &[f64], q: f64) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(v[lo] + (v[hi] - v[lo]) * frac)
}

/// Median of a slice (interpolated for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n - F|`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &Sample, cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(LabError::Input("KS statistic of an empty sample".into()));
    }
    let v = sample.sorted_values();
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov distance between empirical CDFs.
pub fn ks_two_sample(a: &Sample, b: &Sample) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::Input("KS statistic of an empty sample".into()));
    }
    let (a, b) = (a.sorted_values(), b.sorted_values());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// 99% asymptotic critical value of the one-sample KS statistic.
pub fn ks_critical_99(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// 99% asymptotic critical value of the two-sample KS statistic.
pub fn ks_two_sample_critical_99(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Ordinary least squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// OLS fit of `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(LabError::Input("x and y lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(LabError::Input(format!("need at least 3 points, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(LabError::Input("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A constant response is fitted exactly by a flat line.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(SlopeFit { slope, intercept, r_squared })
}

/// OLS on `(ln n, ln value)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if let Some(&(n, v)) = points.iter().find(|(n, v)| !(*n > 0.0 && *v > 0.0)) {
        return Err(LabError::Input(format!("log-log fit needs positive data, got ({n}, {v})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    linear_fit(&xs, &ys)
}

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline(always)]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline(always)]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean with a symmetric normal-theory confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(LabError::Input("need at least two values for a standard error".into()));
        }
        let n = values.len();
        let mean = pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Ok(MeanEstimate { mean, std_error: (var / n as f64).sqrt(), n })
    }

    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }

    /// Distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// Batch-means estimate for a correlated series: the series is cut into
/// `batches` contiguous blocks and the block means treated as independent.
pub fn batch_means(values: &[f64], batches: usize) -> Result<MeanEstimate> {
    if batches < 2 || values.len() < batches {
        return Err(LabError::Input(format!(
            "cannot form {batches} batches from {} values",
            values.len()
        )));
    }
    let size = values.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| pairwise_sum(&values[b * size..(b + 1) * size]) / size as f64)
        .collect();
    MeanEstimate::from_values(&means)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Root mean square.
pub fn rms(values: &[f64]) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    (pairwise_sum(&sq) / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn normal_cdf_reference_values() {
        // High-precision reference values of Phi.
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-14);
        assert_abs_diff_eq!(normal_cdf(-1.96), 0.024_997_895_148_220_435, epsilon = 1e-14);
        assert_abs_diff_eq!(normal_cdf(3.0), 0.998_650_101_968_369_9, epsilon = 1e-14);
        assert_abs_diff_eq!(normal_cdf(-6.0), 9.865_876_450_376_98e-10, epsilon = 1e-20);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn ks_exact_quantiles_give_half_over_n() {
        let n = 100;
        let v: Vec<f64> = (1..=n).map(|i| normal_quantile((i as f64 - 0.5) / n as f64)).collect();
        let d = ks_one_sample(&Sample::new(v), normal_cdf).unwrap();
        assert_abs_diff_eq!(d, 0.005, epsilon = 1e-12);
    }

    #[test]
    fn ks_constant_sample() {
        let d = ks_one_sample(&Sample::new(vec![0.0; 3]), normal_cdf).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ks_uniform_below_critical_value() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let d = ks_one_sample(&Sample::new(v), |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 1.63 / (n as f64).sqrt(), "d = {d}");
    }

    #[test]
    fn ks_empty_is_an_error() {
        assert!(ks_one_sample(&Sample::default(), normal_cdf).is_err());
        assert!(ks_two_sample(&Sample::default(), &Sample::new(vec![1.0])).is_err());
    }

    #[test]
    fn ks_two_sample_examples() {
        let a = Sample::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(ks_two_sample(&a, &a.clone()).unwrap(), 0.0);
        let d = ks_two_sample(&Sample::new(vec![0.0]), &Sample::new(vec![1.0])).unwrap();
        assert_eq!(d, 1.0);
        let d = ks_two_sample(&Sample::new(vec![1.0, 1.0, 4.0, 4.0]), &Sample::new(vec![1.0, 1.0, 1.0, 4.0])).unwrap();
        assert_abs_diff_eq!(d, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn ks_two_normal_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 2000;
        let mut draw = || Sample::new((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
        let (a, b) = (draw(), draw());
        let d = ks_two_sample(&a, &b).unwrap();
        assert!(d < 1.63 * (2.0 / n as f64).sqrt(), "d = {d}");
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = (10..=18).map(|k| (2f64.powi(k), 2f64.powf(1.5 * k as f64))).collect();
        let fit = loglog_slope(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);

        let flat: Vec<(f64, f64)> = (10..=18).map(|k| (2f64.powi(k), 3.0)).collect();
        assert_abs_diff_eq!(loglog_slope(&flat).unwrap().slope, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn slope_with_one_percent_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<(f64, f64)> = (10..=18)
            .map(|k| {
                let noise = 1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0);
                (2f64.powi(k), 2f64.powf(1.5 * k as f64) * noise)
            })
            .collect();
        let s = loglog_slope(&pts).unwrap().slope;
        assert!((1.48..=1.52).contains(&s), "slope = {s}");
    }

    #[test]
    fn slope_rejects_nonpositive() {
        assert!(loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(loglog_slope(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100, Z_99);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, _) = wilson_interval(0, 100, Z_99);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn batch_means_of_constant_blocks() {
        let v: Vec<f64> = (0..100).map(|i| (i / 10) as f64).collect();
        let est = batch_means(&v, 10).unwrap();
        assert_abs_diff_eq!(est.mean, 4.5, epsilon = 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    proptest! {
        #[test]
        fn ks_two_sample_symmetric_and_rank_invariant(
            a in prop::collection::vec(-50.0f64..50.0, 1..40),
            b in prop::collection::vec(-50.0f64..50.0, 1..40),
        ) {
            let (sa, sb) = (Sample::new(a.clone()), Sample::new(b.clone()));
            let d = ks_two_sample(&sa, &sb).unwrap();
            prop_assert_eq!(d, ks_two_sample(&sb, &sa).unwrap());
            let t = |v: &Vec<f64>| Sample::new(v.iter().map(|x| x.powi(3) + 2.0 * x).collect());
            prop_assert!((d - ks_two_sample(&t(&a), &t(&b)).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn ks_one_sample_transform_invariant(a in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let d = ks_one_sample(&Sample::new(a.clone()), normal_cdf).unwrap();
            let moved: Vec<f64> = a.iter().map(|x| x.exp()).collect();
            let d2 = ks_one_sample(&Sample::new(moved), |y| normal_cdf(y.ln())).unwrap();
            prop_assert!((d - d2).abs() < 1e-12);
        }

        #[test]
        fn loglog_slope_scale_invariant(c in 0.01f64..100.0, s in -2.0f64..2.0) {
            let pts: Vec<(f64, f64)> = (1..8).map(|k| (k as f64, (k as f64).powf(s) * (1.0 + 0.1 * (k % 3) as f64))).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, v)| (n, c * v)).collect();
            let (f1, f2) = (loglog_slope(&pts).unwrap(), loglog_slope(&scaled).unwrap());
            prop_assert!((f1.slope - f2.slope).abs() < 1e-9);
            prop_assert!((f2.intercept - f1.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
