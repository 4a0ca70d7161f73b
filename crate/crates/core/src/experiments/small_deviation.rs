use crate::brownian::{a_star_fit, alpha_proxy_samples, lambda_grid, small_ball_check, small_ball_series, A_STAR};
use crate::error::Result;
use crate::stats::MeanEstimate;

use super::report::{Check, CsvRow, ExperimentReport, ReportRow};
use super::Ctx;

/// `E α(1) = (8/3)/√(2π)`.
const MEAN_ALPHA_1: f64 = 1.063_846_081_070_487;

pub(crate) fn run(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    small_ball(ctx, report)?;
    laplace_fit(ctx, report)
}

fn small_ball(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let ys = ctx.cfg.y_values.clone().unwrap_or_else(|| vec![0.4, 0.5, 0.7, 1.0]);
    let m = ctx.cfg.replicates_or(ctx.pick(100_000, 20_000));
    let grid_dt = ctx.cfg.grid_dt_or(1e-3);
    let rows = small_ball_check(&ys, 1.0, m, ctx.seed, grid_dt)?;
    for r in &rows {
        report.row(
            ReportRow::checked(format!("small_ball_y{}", r.y), r.empirical, Check::Flag(r.pass), 8)
                .with_ci(r.ci_low, r.ci_high)
                .with_note(format!("bounds [{:.6}, {:.6}]", r.lower, r.upper)),
        );
        report.csv.push(CsvRow::aggregate(1, m, format!("small_ball_y{}", r.y), r.empirical));
        report.csv.push(CsvRow::aggregate(1, m, format!("small_ball_ci_low_y{}", r.y), r.ci_low));
        report.csv.push(CsvRow::aggregate(1, m, format!("small_ball_ci_high_y{}", r.y), r.ci_high));
        report.csv.push(CsvRow::aggregate(1, m, format!("small_ball_lower_y{}", r.y), r.lower));
        report.csv.push(CsvRow::aggregate(1, m, format!("small_ball_upper_y{}", r.y), r.upper));
        if r.y == 1.0 {
            let series = small_ball_series(1.0, 1.0);
            report.row(
                ReportRow::checked("small_ball_y1_minus_series", r.empirical - series, Check::AbsBelow(ctx.cfg.tol("series_gap", 0.01)), 8)
                    .with_note(format!("reflection series {series:.6}")),
            );
        }
    }
    Ok(())
}

fn laplace_fit(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let n = ctx.pick(100_000, 1_000);
    let m = ctx.pick(100_000u64, 100_000);
    let lambdas = ctx.cfg.lambdas.clone().unwrap_or_else(|| lambda_grid(5.0, 100.0, 20));
    let samples = alpha_proxy_samples(n, m, ctx.seed);
    let alphas: Vec<f64> = samples.iter().map(|s| s.alpha).collect();
    let mean = MeanEstimate::from_values(&alphas)?;
    report.row(
        ReportRow::info("mean_alpha_1", mean.mean)
            .with_ci(mean.ci(3.0).0, mean.ci(3.0).1)
            .with_note(format!("exact {MEAN_ALPHA_1:.4}; walk proxy at n = {n}")),
    );
    let fit = a_star_fit(&alphas, &lambdas)?;
    for &(l, y) in &fit.points {
        report.csv.push(CsvRow::aggregate(1, n, format!("neg_log_laplace_lambda{l}"), y));
    }
    report.row(
        ReportRow::checked("a_star", fit.a_star, Check::Between(ctx.cfg.tol("a_star_lo", 1.8), ctx.cfg.tol("a_star_hi", 2.6)), 9)
            .with_note(format!("reference {A_STAR}")),
    );
    report.row(ReportRow::checked("a_star_fit_r2", fit.r_squared, Check::Between(ctx.cfg.tol("r2_min", 0.99), 1.0), 9));
    report.row(ReportRow::info("a_star_intercept", fit.intercept));
    report.row(ReportRow::info("lambdas_dropped", fit.dropped.len() as f64));
    report.csv.push(CsvRow::aggregate(1, n, "a_star", fit.a_star));
    report.csv.push(CsvRow::aggregate(1, n, "a_star_r2", fit.r_squared));
    Ok(())
}
