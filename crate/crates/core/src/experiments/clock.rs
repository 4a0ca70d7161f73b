use std::f64::consts::PI;

use crate::charges::{ChargeFeed, ChargeModel, DurationMode};
use crate::error::Result;
use crate::hamiltonian::{run_polymer, Checkpoint, Checkpoints, HamiltonianTrace};
use crate::lattice::{intersection_expectation_from, kappa_series, ReturnProbabilities};
use crate::replicates::try_map_replicates;
use crate::stats::{loglog_slope, median, rms, MeanEstimate};
use crate::walk::{record_path, WalkConfig};

use super::report::{Check, CsvRow, ExperimentReport, ReportRow};
use super::Ctx;

pub(crate) fn run(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    clock_ratios(ctx, report)?;
    planar_intersections(ctx, report)?;
    component_slopes(ctx, report)
}

fn walk(ctx: &Ctx<'_>, d: usize, n: u64, r: u64) -> WalkConfig {
    let mut cfg = WalkConfig::new(d, n, ctx.seed).replicate(r);
    cfg.count_initial_site = ctx.cfg.count_initial_site;
    cfg
}

/// `Ξ_n / (½ Σ_x L²)` in d = 1 and `Ξ_n / (κ n)` in d = 3.
fn clock_ratios(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let n = ctx.pick(1_000_000, 100_000);
    let m = ctx.cfg.replicates_or(ctx.pick(200, 50));
    let model = ctx.cfg.model_or(ChargeModel::gaussian())?;
    let mode = ctx.cfg.duration_mode_or(DurationMode::Unit)?;
    let kappa = kappa_series(3, 1e-8)?;
    for d in [1usize, 3] {
        model.validate_for_dimension(d)?;
        let ratios = try_map_replicates(m, |r| {
            let mut feed = ChargeFeed::new(&model, mode, ctx.seed, r)?;
            let run = run_polymer(&walk(ctx, d, n, r), &mut feed, &Checkpoints::new(vec![]))?;
            let xi = run.trace.last.xi;
            Ok(if d == 1 { xi / (0.5 * run.occupancy.sum_count_sq()) } else { xi / (kappa * n as f64) })
        })?;
        let statistic = if d == 1 { "Xi_over_half_sum_L2" } else { "Xi_over_kappa_n" };
        for (r, v) in ratios.iter().enumerate() {
            report.csv.push(CsvRow::replicate(r as u64, d, n, statistic, *v));
        }
        let med = median(&ratios).expect("replicates >= 1");
        let bracket = if d == 1 {
            Check::Between(ctx.cfg.tol("clock_d1_lo", 0.9), ctx.cfg.tol("clock_d1_hi", 1.1))
        } else {
            Check::Between(ctx.cfg.tol("clock_d3_lo", 0.95), ctx.cfg.tol("clock_d3_hi", 1.05))
        };
        report.row(ReportRow::checked(format!("median_{statistic}_d{d}"), med, bracket, 5));
        report.csv.push(CsvRow::aggregate(d, n, format!("median_{statistic}"), med));
    }
    Ok(())
}

/// Planar intersection count: the engine against a direct pair count on
/// the same path, and the Monte Carlo mean against the exact expectation.
fn planar_intersections(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let n = 10_000u64;
    let m = ctx.cfg.replicates_or(ctx.pick(2000, 500));
    let pairs = try_map_replicates(m, |r| {
        let cfg = walk(ctx, 2, n, r);
        let engine = crate::walk::simulate_walk(&cfg, |_| 0.0)?.intersection_count() as f64;
        let mut sites: Vec<Vec<i64>> = record_path(&cfg)?.into_iter().map(|s| s.coords).collect();
        sites.sort_unstable();
        let direct: u64 = sites
            .chunk_by(|a, b| a == b)
            .map(|run| {
                let c = run.len() as u64;
                c * (c - 1) / 2
            })
            .sum();
        Ok((engine, direct as f64))
    })?;
    let counts: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    for (r, (e, d)) in pairs.iter().enumerate() {
        report.csv.push(CsvRow::replicate(r as u64, 2, n, "I_n", *e));
        report.csv.push(CsvRow::replicate(r as u64, 2, n, "I_n_direct", *d));
    }
    let table = ReturnProbabilities::new(2, n as usize)?;
    let exact = intersection_expectation_from(&table, n as usize).value;
    let origin_visits: f64 = (1..=n as usize).map(|k| table.get(k)).sum();
    let discrepancy = pairs.iter().map(|(e, d)| e - d).sum::<f64>() / m as f64;
    let est = MeanEstimate::from_values(&counts)?;
    let z = est.z_score(exact);
    let (lo, hi) = est.ci(3.0);
    report.row(ReportRow::info("mean_I_n_d2", est.mean).with_ci(lo, hi));
    report.row(ReportRow::info("exact_E_I_n_d2", exact));
    report.row(
        ReportRow::checked("discrepancy_engine_minus_direct_d2", discrepancy, Check::AbsBelow(ctx.cfg.tol("discrepancy_max", 1e-9)), 5)
            .with_note(format!("expected visits to the origin {origin_visits:.4}")),
    );
    report.row(ReportRow::checked("z_score_I_n_d2", z, Check::AbsBelow(ctx.cfg.tol("z_max", 3.0)), 5));
    let constant = est.mean / (n as f64 * (n as f64).ln());
    report.row(ReportRow::info("I_n_over_n_log_n_d2", constant).with_note(format!(
        "report only; compare 1/(2π) = {:.6} and 1/π = {:.6}",
        1.0 / (2.0 * PI),
        1.0 / PI
    )));
    report.csv.push(CsvRow::aggregate(2, n, "mean_I_n", est.mean));
    report.csv.push(CsvRow::aggregate(2, n, "exact_E_I_n", exact));
    report.csv.push(CsvRow::aggregate(2, n, "discrepancy_engine_minus_direct", discrepancy));
    report.csv.push(CsvRow::aggregate(2, n, "I_n_over_n_log_n", constant));
    Ok(())
}

fn traces(
    ctx: &Ctx<'_>,
    d: usize,
    model: &ChargeModel,
    mode: DurationMode,
    cp: &Checkpoints,
    m: u64,
) -> Result<Vec<HamiltonianTrace>> {
    let n = *cp.as_slice().last().unwrap();
    try_map_replicates(m, |r| {
        let mut feed = ChargeFeed::new(model, mode, ctx.seed, r)?;
        Ok(run_polymer(&walk(ctx, d, n, r), &mut feed, cp)?.trace)
    })
}

fn rms_slope(
    report: &mut ExperimentReport,
    traces: &[HamiltonianTrace],
    cp: &Checkpoints,
    d: usize,
    name: &str,
    field: fn(&Checkpoint) -> f64,
) -> Result<f64> {
    let points: Vec<(f64, f64)> = cp
        .as_slice()
        .iter()
        .map(|&k| {
            let values: Vec<f64> = traces.iter().map(|t| field(t.at(k).expect("checkpoint recorded"))).collect();
            (k as f64, rms(&values))
        })
        .collect();
    for &(k, v) in &points {
        report.csv.push(CsvRow::aggregate(d, k as u64, format!("rms_{name}"), v));
    }
    Ok(loglog_slope(&points)?.slope)
}

/// RMS growth exponents of M_n, N_n and Ξ^(2).
fn component_slopes(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let (lo, hi) = ctx.pick((10, 18), (10, 14));
    let m = ctx.pick(200, 50);
    let cp = Checkpoints::powers_of_two(lo, hi);
    let quantized = ChargeModel::gaussian_quantized();
    let tol = |key: &str, v: f64| ctx.cfg.tol(key, v);

    let t1 = traces(ctx, 1, &quantized, DurationMode::Unit, &cp, m)?;
    let s = rms_slope(report, &t1, &cp, 1, "M", |c| c.m)?;
    report.row(ReportRow::checked("slope_rms_M_d1", s, Check::Between(tol("M_d1_lo", 0.85), tol("M_d1_hi", 1.17)), 6));
    let s = rms_slope(report, &t1, &cp, 1, "Xi2", |c| c.xi2)?;
    report.row(ReportRow::checked("slope_rms_Xi2_d1", s, Check::Between(tol("Xi2_d1_lo", 1.10), tol("Xi2_d1_hi", 1.45)), 6));
    drop(t1);

    let t3 = traces(ctx, 3, &quantized, DurationMode::Unit, &cp, m)?;
    let s = rms_slope(report, &t3, &cp, 3, "M", |c| c.m)?;
    report.row(ReportRow::checked("slope_rms_M_d3", s, Check::Between(tol("M_d3_lo", 0.40), tol("M_d3_hi", 0.75)), 6));
    let s = rms_slope(report, &t3, &cp, 3, "Xi2", |c| c.xi2)?;
    report.row(ReportRow::checked("slope_rms_Xi2_d3", s, Check::Between(tol("Xi2_d3_lo", 0.40), tol("Xi2_d3_hi", 0.75)), 6));
    drop(t3);

    // N_n vanishes for unit durations; it needs embedded ones.
    let te = traces(ctx, 1, &ChargeModel::rademacher(), DurationMode::Embedded { grid_dt: 1e-2 }, &cp, m)?;
    let s = rms_slope(report, &te, &cp, 1, "N", |c| c.n)?;
    let mut row = ReportRow::checked("slope_rms_N_d1_embedded", s, Check::Between(tol("N_d1_lo", 0.85), tol("N_d1_hi", 1.15)), 6);
    row.criterion = None;
    report.row(row);
    Ok(())
}
