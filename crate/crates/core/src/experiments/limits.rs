use rand::Rng;
use rand_distr::StandardNormal;

use crate::charges::{ChargeFeed, ChargeModel, DurationMode};
use crate::error::{LabError, Result};
use crate::hamiltonian::{run_polymer, Checkpoints};
use crate::lattice::intersection_count_expect;
use crate::replicates::try_map_replicates;
use crate::rng::{self, Purpose};
use crate::stats::{ks_critical_99, ks_one_sample, ks_two_sample, ks_two_sample_critical_99, normal_cdf, Sample};
use crate::walk::{simulate_local_time_1d, WalkConfig};

use super::report::{Check, CsvRow, ExperimentReport, ReportRow};
use super::Ctx;

/// KS threshold: the stated 0.05, or the 99% critical value when a quick
/// run's sample is too small for 0.05 to be meaningful.
fn ks_threshold(ctx: &Ctx<'_>, critical: f64) -> f64 {
    ctx.cfg.tol("ks_max", ctx.pick(0.05, critical.max(0.05)))
}

/// `H_n / √E[I_n]` against the standard normal in d >= 3.
pub(crate) fn run_e1(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let ns = ctx.cfg.n_values_or(&[ctx.pick(100_000, 10_000)]);
    let m = ctx.cfg.replicates_or(ctx.pick(2000, 300));
    let model = ctx.cfg.model_or(ChargeModel::rademacher())?;
    let mode = ctx.cfg.duration_mode_or(DurationMode::Unit)?;
    for d in ctx.cfg.dimensions_or(&[3]) {
        if d < 3 {
            return Err(LabError::UnsupportedDimension { dim: d, reason: "the Gaussian limit holds for d >= 3" });
        }
        model.validate_for_dimension(d)?;
        for &n in &ns {
            let expected_i = intersection_count_expect(n as usize, d)?.value;
            let scale = expected_i.sqrt();
            let seed = ctx.seed;
            let values = try_map_replicates(m, |r| {
                let mut feed = ChargeFeed::new(&model, mode, seed, r)?;
                let run = run_polymer(&WalkConfig::new(d, n, seed).replicate(r), &mut feed, &Checkpoints::new(vec![]))?;
                Ok(run.trace.last.h / scale)
            })?;
            for (r, v) in values.iter().enumerate() {
                report.csv.push(CsvRow::replicate(r as u64, d, n, "H_over_sqrt_EI", *v));
            }
            let ks = ks_one_sample(&Sample::new(values), normal_cdf)?;
            let threshold = ks_threshold(ctx, ks_critical_99(m as usize));
            report.row(ReportRow::info(format!("E_I_n_d{d}_n{n}"), expected_i));
            report.row(ReportRow::checked(format!("ks_vs_normal_d{d}_n{n}"), ks, Check::Below(threshold), 3));
            report.csv.push(CsvRow::aggregate(d, n, "ks_vs_normal", ks));
        }
    }
    Ok(())
}

/// `H_{[nt]} / n^{3/4}` in d = 1 against `t^{3/4} √(Σ L̃² / (2 n^{3/2})) Z`
/// built from an independent walk `L̃` and an independent normal `Z`.
pub(crate) fn run_mixture(ctx: &Ctx<'_>, report: &mut ExperimentReport, ts: &[f64]) -> Result<()> {
    if let Some(d) = ctx.cfg.dimensions.as_ref().and_then(|ds| ds.iter().find(|&&d| d != 1)) {
        return Err(LabError::UnsupportedDimension { dim: *d, reason: "the mixture limit is a d = 1 statement" });
    }
    if ts.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(LabError::Config("t_values must lie in (0, 1]".into()));
    }
    let n = *ctx.cfg.n_values_or(&[ctx.pick(100_000, 10_000)]).last().unwrap();
    let m = ctx.cfg.replicates_or(ctx.pick(2000, 300));
    let model = ctx.cfg.model_or(ChargeModel::rademacher())?;
    let mode = ctx.cfg.duration_mode_or(DurationMode::Unit)?;
    model.validate_for_dimension(1)?;
    let ks_at: Vec<u64> = ts.iter().map(|&t| ((n as f64 * t).floor() as u64).max(1)).collect();
    let checkpoints = Checkpoints::new(ks_at.clone());
    let n34 = (n as f64).powf(0.75);
    let n32 = (n as f64).powf(1.5);
    let seed = ctx.seed;
    let samples = try_map_replicates(m, |r| {
        let mut feed = ChargeFeed::new(&model, mode, seed, r)?;
        let run = run_polymer(&WalkConfig::new(1, n, seed).replicate(r), &mut feed, &checkpoints)?;
        let hs: Vec<f64> = ks_at.iter().map(|&k| run.trace.at(k).expect("checkpoint recorded").h / n34).collect();
        let shadow = simulate_local_time_1d(n, seed, r, Purpose::ShadowWalk);
        let z: f64 = rng::stream(seed, r, Purpose::Normals).sample(StandardNormal);
        let mix = (shadow.sum_sq() / (2.0 * n32)).sqrt() * z;
        Ok((hs, mix))
    })?;
    let threshold = ks_threshold(ctx, ks_two_sample_critical_99(m as usize, m as usize));
    for (i, &t) in ts.iter().enumerate() {
        let scale = t.powf(0.75);
        let h: Vec<f64> = samples.iter().map(|s| s.0[i]).collect();
        let mix: Vec<f64> = samples.iter().map(|s| scale * s.1).collect();
        for (r, (a, b)) in h.iter().zip(&mix).enumerate() {
            report.csv.push(CsvRow::replicate(r as u64, 1, ks_at[i], "H_scaled", *a));
            report.csv.push(CsvRow::replicate(r as u64, 1, ks_at[i], "mixture", *b));
        }
        let ks = ks_two_sample(&Sample::new(h), &Sample::new(mix))?;
        report.row(ReportRow::checked(format!("ks_mixture_t{t}"), ks, Check::Below(threshold), 4));
        report.csv.push(CsvRow::aggregate(1, ks_at[i], format!("ks_mixture_t{t}"), ks));
    }
    Ok(())
}
