//! Charge laws and their Skorokhod embedding into a Brownian path.
//!
//! A charge law is mean zero with unit variance. The embedding realises each
//! charge as the exit point of a Brownian motion from a random interval
//! `[a, b]` with `a < 0 < b`, drawn with probability proportional to
//! `(b - a) μ(a) μ(b)` (the randomized two-point construction). The exit
//! time is the charge's duration; its mean equals `E q² = 1`.
//!
//! Interval exits are simulated on an Euler grid. At each substep the
//! Brownian-bridge probability of an unseen crossing of a barrier at
//! distance `x0` (start) and `x1` (end), `exp(-2 x0 x1 / dt)`, is tested,
//! which removes the O(√dt) bias of checking grid values only.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{LabError, Result};
use crate::rng::{self, LabRng, Purpose};
use crate::stats::{normal_cdf, normal_pdf, normal_quantile};

/// Tolerance for the moment checks of a discrete law.
const MOMENT_TOL: f64 = 1e-12;

/// Duration assigned to the zero atom, which needs no Brownian time.
pub const EPS_MIN_DURATION: f64 = 1e-12;

/// Number of points in the discrete stand-in for the Gaussian law.
pub const GAUSSIAN_QUANTIZATION_POINTS: usize = 64;

/// A finitely supported charge law.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    points: Vec<f64>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteLaw {
    /// Build from `(point, probability)` pairs; points are sorted and
    /// merged. Fails unless probabilities sum to 1, the mean is 0 and the
    /// variance is 1 (each to 1e-12).
    pub fn new(support: &[(f64, f64)]) -> Result<Self> {
        if support.is_empty() {
            return Err(LabError::InvalidModel("empty support".into()));
        }
        let mut pts: Vec<(f64, f64)> = support.to_vec();
        if pts.iter().any(|(x, p)| !x.is_finite() || !(p.is_finite() && *p >= 0.0)) {
            return Err(LabError::InvalidModel("support points and probabilities must be finite, probabilities >= 0".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (x, p) in pts {
            if p == 0.0 {
                continue;
            }
            if points.last() == Some(&x) {
                *probs.last_mut().unwrap() += p;
            } else {
                points.push(x);
                probs.push(p);
            }
        }
        let total: f64 = probs.iter().sum();
        let mean: f64 = points.iter().zip(&probs).map(|(x, p)| x * p).sum();
        let second: f64 = points.iter().zip(&probs).map(|(x, p)| x * x * p).sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(LabError::InvalidModel(format!("probabilities sum to {total}, not 1")));
        }
        if mean.abs() > MOMENT_TOL {
            return Err(LabError::InvalidModel(format!("mean is {mean}, not 0")));
        }
        if (second - 1.0).abs() > MOMENT_TOL {
            return Err(LabError::InvalidModel(format!("variance is {second}, not 1")));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(DiscreteLaw { points, probs, cdf })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// E|q|^p.
    pub fn abs_moment(&self, p: f64) -> f64 {
        self.points.iter().zip(&self.probs).map(|(x, w)| x.abs().powf(p) * w).sum()
    }

    #[inline]
    fn sample_from(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).min(self.points.len() - 1);
        self.points[i]
    }

    /// CDF of the law at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|&p| p <= x);
        if i == 0 {
            0.0
        } else {
            self.cdf[i - 1]
        }
    }
}

/// Quantize N(0,1) into `k` equiprobable cells, each represented by its
/// conditional mean, then rescale to unit variance. Returns the law and its
/// exact Kolmogorov distance to the Gaussian CDF.
pub fn quantize_gaussian(k: usize) -> Result<(DiscreteLaw, f64)> {
    if k < 2 || k % 2 != 0 {
        return Err(LabError::Parameter("quantization needs an even number of cells >= 2".into()));
    }
    let edges: Vec<f64> = (0..=k)
        .map(|i| match i {
            0 => f64::NEG_INFINITY,
            i if i == k => f64::INFINITY,
            i => normal_quantile(i as f64 / k as f64),
        })
        .collect();
    let pdf = |x: f64| if x.is_finite() { normal_pdf(x) } else { 0.0 };
    let mut points: Vec<f64> = edges.windows(2).map(|e| k as f64 * (pdf(e[0]) - pdf(e[1]))).collect();
    // Force exact symmetry so the mean is zero to rounding.
    for i in 0..k / 2 {
        let m = 0.5 * (points[k - 1 - i] - points[i]);
        points[i] = -m;
        points[k - 1 - i] = m;
    }
    let var: f64 = points.iter().map(|x| x * x).sum::<f64>() / k as f64;
    let scale = var.sqrt().recip();
    let support: Vec<(f64, f64)> = points.iter().map(|x| (x * scale, 1.0 / k as f64)).collect();
    let law = DiscreteLaw::new(&support)?;
    let mut ks = 0.0f64;
    let mut below = 0.0;
    for (x, c) in law.points.iter().zip(&law.cdf) {
        let f = normal_cdf(*x);
        ks = ks.max((f - below).abs()).max((f - c).abs());
        below = *c;
    }
    Ok((law, ks))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChargeKind {
    Rademacher,
    Gaussian,
    Discrete(DiscreteLaw),
}

/// A charge law together with the moment order it is declared to have.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeModel {
    pub kind: ChargeKind,
    pub declared_moment_order: u32,
}

/// Moment order needed in dimension `d`: 6 if d = 1, else 4.
pub fn required_moment_order(dim: usize) -> u32 {
    if dim == 1 {
        6
    } else {
        4
    }
}

impl ChargeModel {
    pub fn rademacher() -> Self {
        ChargeModel { kind: ChargeKind::Rademacher, declared_moment_order: 6 }
    }

    pub fn gaussian() -> Self {
        ChargeModel { kind: ChargeKind::Gaussian, declared_moment_order: 6 }
    }

    pub fn discrete(support: &[(f64, f64)]) -> Result<Self> {
        Ok(ChargeModel { kind: ChargeKind::Discrete(DiscreteLaw::new(support)?), declared_moment_order: 6 })
    }

    /// The 64-point quantized Gaussian as a discrete model.
    pub fn gaussian_quantized() -> Self {
        let (law, _) = quantize_gaussian(GAUSSIAN_QUANTIZATION_POINTS).expect("64 is a valid cell count");
        ChargeModel { kind: ChargeKind::Discrete(law), declared_moment_order: 6 }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ChargeKind::Rademacher => "rademacher",
            ChargeKind::Gaussian => "gaussian",
            ChargeKind::Discrete(_) => "discrete",
        }
    }

    /// Check the moment condition for a walk in dimension `dim`.
    pub fn validate_for_dimension(&self, dim: usize) -> Result<()> {
        let need = required_moment_order(dim);
        if self.declared_moment_order < need {
            return Err(LabError::InvalidModel(format!(
                "dimension {dim} needs a finite moment of order {need}, model declares {}",
                self.declared_moment_order
            )));
        }
        if let ChargeKind::Discrete(law) = &self.kind {
            if !law.abs_moment(need as f64).is_finite() {
                return Err(LabError::InvalidModel(format!("moment of order {need} is not finite")));
            }
        }
        Ok(())
    }

    /// Var(q²), which sets the size of the squared-charge fluctuations.
    pub fn variance_of_square(&self) -> f64 {
        match &self.kind {
            ChargeKind::Rademacher => 0.0,
            ChargeKind::Gaussian => 2.0,
            ChargeKind::Discrete(law) => law.abs_moment(4.0) - 1.0,
        }
    }
}

/// Table form of a charge model, as read from experiment config files.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChargeModelSpec {
    pub kind: String,
    #[serde(default)]
    pub support: Vec<[f64; 2]>,
    #[serde(default)]
    pub declared_moment_order: Option<u32>,
}

impl ChargeModelSpec {
    pub fn build(&self) -> Result<ChargeModel> {
        let mut model = match self.kind.as_str() {
            "rademacher" => ChargeModel::rademacher(),
            "gaussian" => ChargeModel::gaussian(),
            "gaussian-quantized" => ChargeModel::gaussian_quantized(),
            "discrete" => {
                let pairs: Vec<(f64, f64)> = self.support.iter().map(|p| (p[0], p[1])).collect();
                ChargeModel::discrete(&pairs)?
            }
            other => return Err(LabError::InvalidModel(format!("unknown charge kind `{other}`"))),
        };
        if self.kind != "discrete" && !self.support.is_empty() {
            return Err(LabError::InvalidModel(format!("kind `{}` takes no support table", self.kind)));
        }
        if let Some(order) = self.declared_moment_order {
            model.declared_moment_order = order;
        }
        Ok(model)
    }
}

/// Streaming i.i.d. charge sampler.
#[derive(Debug, Clone)]
pub struct ChargeSampler {
    model: ChargeModel,
    rng: LabRng,
}

impl ChargeSampler {
    pub fn new(model: ChargeModel, rng: LabRng) -> Self {
        ChargeSampler { model, rng }
    }

    #[inline]
    pub fn next_charge(&mut self) -> f64 {
        match &self.model.kind {
            ChargeKind::Rademacher => {
                if self.rng.next_u64() >> 63 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            ChargeKind::Gaussian => self.rng.sample(StandardNormal),
            ChargeKind::Discrete(law) => law.sample_from(rng::open01(self.rng.next_u64())),
        }
    }
}

/// `n` i.i.d. charges from the `(seed, replicate 0)` charge stream.
pub fn sample_charges(model: &ChargeModel, n: usize, seed: u64) -> Vec<f64> {
    let mut s = ChargeSampler::new(model.clone(), rng::stream(seed, 0, Purpose::Charges));
    (0..n).map(|_| s.next_charge()).collect()
}

/// Sequence of `(charge, duration)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChargeStream {
    pub pairs: Vec<(f64, f64)>,
}

impl ChargeStream {
    /// Unit durations for the given charges.
    pub fn unit(charges: &[f64]) -> Self {
        ChargeStream { pairs: charges.iter().map(|&q| (q, 1.0)).collect() }
    }

    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((q, dt)) = pairs.iter().find(|(q, dt)| !q.is_finite() || !(*dt > 0.0 && dt.is_finite())) {
            return Err(LabError::Input(format!("invalid pair ({q}, {dt}): durations must be positive")));
        }
        Ok(ChargeStream { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn charges(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// Embedding times T_k = Σ_{i<=k} dt_i.
    pub fn times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.pairs
            .iter()
            .map(|p| {
                t += p.1;
                t
            })
            .collect()
    }
}

/// Gaussian charges cannot be embedded with finitely many intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaussianEmbedding {
    /// Embed the 64-point quantization instead.
    #[default]
    Quantize,
    Reject,
}

/// Randomized two-point Skorokhod embedding of a discrete law.
#[derive(Debug, Clone)]
pub struct SkorohodEmbedder {
    law: DiscreteLaw,
    zero_mass: f64,
    /// (a, b, cumulative probability including the zero atom)
    intervals: Vec<(f64, f64, f64)>,
    grid_dt: f64,
    /// Kolmogorov distance of the embedded law to the requested one
    /// (nonzero only for quantized Gaussians).
    pub quantization_ks: f64,
}

impl SkorohodEmbedder {
    pub fn new(model: &ChargeModel, grid_dt: f64, gaussian: GaussianEmbedding) -> Result<Self> {
        if !(grid_dt > 0.0 && grid_dt <= 0.01) {
            return Err(LabError::Parameter(format!("embedding grid step must lie in (0, 0.01], got {grid_dt}")));
        }
        let (law, quantization_ks) = match &model.kind {
            ChargeKind::Rademacher => (DiscreteLaw::new(&[(-1.0, 0.5), (1.0, 0.5)])?, 0.0),
            ChargeKind::Discrete(law) => (law.clone(), 0.0),
            ChargeKind::Gaussian => match gaussian {
                GaussianEmbedding::Quantize => quantize_gaussian(GAUSSIAN_QUANTIZATION_POINTS)?,
                GaussianEmbedding::Reject => {
                    return Err(LabError::NotEmbeddable(
                        "gaussian charges need infinitely many intervals; use quantization or unit durations".into(),
                    ))
                }
            },
        };
        let zero_mass: f64 = law.points.iter().zip(&law.probs).filter(|(x, _)| **x == 0.0).map(|(_, p)| p).sum();
        let c: f64 = law.points.iter().zip(&law.probs).filter(|(x, _)| **x > 0.0).map(|(x, p)| x * p).sum();
        let mut intervals = Vec::new();
        let mut acc = zero_mass;
        for (&a, &pa) in law.points.iter().zip(&law.probs).filter(|(x, _)| **x < 0.0) {
            for (&b, &pb) in law.points.iter().zip(&law.probs).filter(|(x, _)| **x > 0.0) {
                acc += (b - a) * pa * pb / c;
                intervals.push((a, b, acc));
            }
        }
        if let Some(last) = intervals.last_mut() {
            last.2 = 1.0;
        }
        Ok(SkorohodEmbedder { law, zero_mass, intervals, grid_dt, quantization_ks })
    }

    pub fn law(&self) -> &DiscreteLaw {
        &self.law
    }

    pub fn grid_dt(&self) -> f64 {
        self.grid_dt
    }

    /// Next `(q, dt)`.
    pub fn next_pair<R: RngCore>(&self, rng: &mut R) -> (f64, f64) {
        let u = rng::open01(rng.next_u64());
        if u < self.zero_mass {
            return (0.0, EPS_MIN_DURATION);
        }
        let i = self.intervals.partition_point(|iv| iv.2 < u).min(self.intervals.len() - 1);
        let (a, b, _) = self.intervals[i];
        interval_exit(rng, a, b, self.grid_dt)
    }
}

/// Exit point and exit time of a Brownian motion started at 0 from
/// `(lo, hi)`, simulated on a grid of step `dt` with bridge correction.
pub fn interval_exit<R: RngCore>(rng: &mut R, lo: f64, hi: f64, dt: f64) -> (f64, f64) {
    debug_assert!(lo < 0.0 && 0.0 < hi);
    let sd = dt.sqrt();
    // Beyond this product of barrier distances the bridge probability is < e^-40.
    let far = 20.0 * dt;
    let mut w = 0.0f64;
    let mut t = 0.0f64;
    loop {
        let z: f64 = StandardNormal.sample_with(rng);
        let w1 = w + sd * z;
        t += dt;
        if w1 >= hi {
            return (hi, t - 0.5 * dt);
        }
        if w1 <= lo {
            return (lo, t - 0.5 * dt);
        }
        let up = (hi - w) * (hi - w1);
        let down = (w - lo) * (w1 - lo);
        if up < far || down < far {
            let p_up = (-2.0 * up / dt).exp();
            let p_down = (-2.0 * down / dt).exp();
            let u = rng::open01(rng.next_u64());
            if u < p_up {
                return (hi, t - 0.5 * dt);
            }
            if u < p_up + p_down {
                return (lo, t - 0.5 * dt);
            }
        }
        w = w1;
    }
}

trait SampleWith {
    fn sample_with<R: RngCore>(self, rng: &mut R) -> f64;
}

impl SampleWith for StandardNormal {
    #[inline(always)]
    fn sample_with<R: RngCore>(self, rng: &mut R) -> f64 {
        use rand_distr::Distribution;
        self.sample(rng)
    }
}

/// `n` Skorokhod-embedded `(q, dt)` pairs from the `(seed, replicate 0)`
/// duration stream.
pub fn skorohod_stream(model: &ChargeModel, n: usize, grid_dt: f64, seed: u64) -> Result<ChargeStream> {
    skorohod_stream_with(model, n, grid_dt, seed, GaussianEmbedding::default())
}

pub fn skorohod_stream_with(
    model: &ChargeModel,
    n: usize,
    grid_dt: f64,
    seed: u64,
    gaussian: GaussianEmbedding,
) -> Result<ChargeStream> {
    let emb = SkorohodEmbedder::new(model, grid_dt, gaussian)?;
    let mut rng = rng::stream(seed, 0, Purpose::Durations);
    Ok(ChargeStream { pairs: (0..n).map(|_| emb.next_pair(&mut rng)).collect() })
}

/// How charge durations are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DurationMode {
    /// dt ≡ 1 with exact draws from the charge law.
    Unit,
    /// Skorokhod-embedded durations on a grid of the given step.
    Embedded { grid_dt: f64 },
}

/// Per-replicate supplier of `(q, dt)` pairs.
#[derive(Debug, Clone)]
pub enum ChargeFeed {
    Unit(ChargeSampler),
    Embedded { embedder: SkorohodEmbedder, rng: LabRng },
}

impl ChargeFeed {
    pub fn new(model: &ChargeModel, mode: DurationMode, seed: u64, replicate: u64) -> Result<Self> {
        Ok(match mode {
            DurationMode::Unit => {
                ChargeFeed::Unit(ChargeSampler::new(model.clone(), rng::stream(seed, replicate, Purpose::Charges)))
            }
            DurationMode::Embedded { grid_dt } => ChargeFeed::Embedded {
                embedder: SkorohodEmbedder::new(model, grid_dt, GaussianEmbedding::Quantize)?,
                rng: rng::stream(seed, replicate, Purpose::Durations),
            },
        })
    }

    #[inline]
    pub fn next_pair(&mut self) -> (f64, f64) {
        match self {
            ChargeFeed::Unit(s) => (s.next_charge(), 1.0),
            ChargeFeed::Embedded { embedder, rng } => embedder.next_pair(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_two_sample, MeanEstimate, Sample};
    use approx::assert_abs_diff_eq;

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn rademacher_moments() {
        let n = 100_000;
        let q = sample_charges(&ChargeModel::rademacher(), n, 3);
        let (m, v) = mean_var(&q);
        assert!(m.abs() < 5.0 / (n as f64).sqrt());
        assert!((v - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt());
        assert!(q.iter().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn gaussian_and_discrete_moments() {
        let n = 100_000;
        for model in [
            ChargeModel::gaussian(),
            ChargeModel::discrete(&[(-2.0, 0.125), (0.0, 0.75), (2.0, 0.125)]).unwrap(),
            ChargeModel::gaussian_quantized(),
        ] {
            let q = sample_charges(&model, n, 8);
            let (m, v) = mean_var(&q);
            let sd_var = (model.variance_of_square() / n as f64).sqrt();
            assert!(m.abs() < 5.0 / (n as f64).sqrt(), "{}: mean {m}", model.name());
            assert!((v - 1.0).abs() < 5.0 * sd_var.max(1e-9), "{}: var {v}", model.name());
        }
    }

    #[test]
    fn discrete_validation() {
        assert!(ChargeModel::discrete(&[(-2.0, 0.125), (0.0, 0.75), (2.0, 0.125)]).is_ok());
        let err = ChargeModel::discrete(&[(-1.0, 0.3), (1.0, 0.5)]).unwrap_err();
        assert!(matches!(err, LabError::InvalidModel(_)));
        // Mean zero, probabilities sum to one, but variance 4.
        assert!(ChargeModel::discrete(&[(-2.0, 0.5), (2.0, 0.5)]).is_err());
        assert!(ChargeModel::discrete(&[]).is_err());
    }

    #[test]
    fn moment_order_per_dimension() {
        let mut m = ChargeModel::rademacher();
        assert_eq!(required_moment_order(1), 6);
        assert_eq!(required_moment_order(3), 4);
        m.declared_moment_order = 4;
        assert!(m.validate_for_dimension(2).is_ok());
        assert!(m.validate_for_dimension(1).is_err());
    }

    #[test]
    fn quantized_gaussian_is_close_to_normal() {
        let (law, ks) = quantize_gaussian(64).unwrap();
        assert_eq!(law.points().len(), 64);
        // Equiprobable cells: the distance is at least half a cell and
        // cannot exceed a full one.
        assert!(ks >= 0.5 / 64.0 - 1e-12 && ks <= 1.0 / 64.0, "ks = {ks}");
        assert_abs_diff_eq!(law.abs_moment(2.0), 1.0, epsilon = 1e-12);
        // Kurtosis slightly below 3 since the quantizer trims the tails.
        let k4 = law.abs_moment(4.0);
        assert!(k4 > 2.8 && k4 < 3.0, "fourth moment {k4}");
    }

    #[test]
    fn spec_table_parsing() {
        let spec: ChargeModelSpec = toml::from_str("kind = \"discrete\"\nsupport = [[-2.0, 0.125], [0.0, 0.75], [2.0, 0.125]]").unwrap();
        assert!(matches!(spec.build().unwrap().kind, ChargeKind::Discrete(_)));
        let bad: ChargeModelSpec = toml::from_str("kind = \"cauchy\"").unwrap();
        assert!(bad.build().is_err());
        let extra: ChargeModelSpec = toml::from_str("kind = \"rademacher\"\nsupport = [[1.0, 1.0]]").unwrap();
        assert!(extra.build().is_err());
    }

    #[test]
    fn rademacher_embedding_exit_statistics() {
        let n = 10_000;
        let s = skorohod_stream(&ChargeModel::rademacher(), n, 1e-3, 21).unwrap();
        let ups = s.charges().iter().filter(|&&q| q == 1.0).count() as f64 / n as f64;
        assert!((ups - 0.5).abs() < 0.02, "up frequency {ups}");
        let (m, v) = mean_var(&s.durations());
        // E T = 1 and Var T = E T² - 1 = 5/3 - 1 = 2/3 for the exit of [-1, 1].
        assert!((m - 1.0).abs() < 0.05, "mean exit time {m}");
        assert!((v - 2.0 / 3.0).abs() < 0.05, "exit time variance {v}");
        assert!(s.durations().iter().all(|&t| t > 0.0));
    }

    #[test]
    fn two_point_law_reduces_to_rademacher() {
        let a = skorohod_stream(&ChargeModel::rademacher(), 200, 5e-3, 4).unwrap();
        let b = skorohod_stream(&ChargeModel::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap(), 200, 5e-3, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn embedded_discrete_law_has_right_marginals() {
        let model = ChargeModel::discrete(&[(-2.0, 0.125), (0.0, 0.75), (2.0, 0.125)]).unwrap();
        let n = 10_000;
        let s = skorohod_stream(&model, n, 1e-2, 99).unwrap();
        let q = s.charges();
        let zeros = q.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
        assert!((zeros - 0.75).abs() < 5.0 * (0.75 * 0.25 / n as f64).sqrt());
        for &x in &q {
            assert!(x == 0.0 || x == 2.0 || x == -2.0);
        }
        let d = MeanEstimate::from_values(&s.durations()).unwrap();
        let qsq = MeanEstimate::from_values(&q.iter().map(|x| x * x).collect::<Vec<_>>()).unwrap();
        assert!(d.z_score(1.0).abs() < 5.0, "E dt = {} ± {}", d.mean, d.std_error);
        assert!(qsq.z_score(1.0).abs() < 5.0);
        let t = s.times();
        let var_dt = {
            let (_, v) = mean_var(&s.durations());
            v
        };
        assert!((t[n - 1] / n as f64 - 1.0).abs() < 5.0 * (var_dt / n as f64).sqrt());
    }

    #[test]
    fn unit_and_embedded_rademacher_marginals_agree() {
        let n = 10_000;
        let unit = sample_charges(&ChargeModel::rademacher(), n, 5);
        let emb = skorohod_stream(&ChargeModel::rademacher(), n, 5e-3, 6).unwrap();
        let d = ks_two_sample(&Sample::new(unit), &Sample::new(emb.charges())).unwrap();
        assert!(d < 0.03, "ks = {d}");
    }

    #[test]
    fn gaussian_embedding_policy() {
        let err = skorohod_stream_with(&ChargeModel::gaussian(), 10, 1e-3, 1, GaussianEmbedding::Reject).unwrap_err();
        assert!(matches!(err, LabError::NotEmbeddable(_)));
        let emb = SkorohodEmbedder::new(&ChargeModel::gaussian(), 1e-3, GaussianEmbedding::Quantize).unwrap();
        assert!(emb.quantization_ks > 0.0 && emb.quantization_ks <= 1.0 / 64.0);
    }

    #[test]
    fn grid_step_guard() {
        assert!(skorohod_stream(&ChargeModel::rademacher(), 1, 0.0, 1).is_err());
        assert!(skorohod_stream(&ChargeModel::rademacher(), 1, 0.02, 1).is_err());
    }

    #[test]
    fn charge_stream_rejects_nonpositive_durations() {
        assert!(ChargeStream::from_pairs(vec![(1.0, 0.0)]).is_err());
        assert!(ChargeStream::from_pairs(vec![(1.0, 0.5)]).is_ok());
    }
}
