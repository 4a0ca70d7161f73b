use crate::brownian::revesz_stream;
use crate::error::Result;
use crate::replicates::try_map_replicates;
use crate::stats::{loglog_slope, median};

use super::report::{Check, CsvRow, ExperimentReport, ReportRow};
use super::Ctx;

/// Median Révész coupling error against walk length.
pub(crate) fn run(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let default: Vec<u64> = ctx.pick(10..=18, 10..=16).map(|e| 1u64 << e).collect();
    let ns = ctx.cfg.n_values_or(&default);
    let m = ctx.cfg.replicates_or(ctx.pick(100, 30));
    let grid_dt = ctx.cfg.grid_dt_or(1e-2);
    let bin_width = ctx.cfg.tol("bin_width", 0.1);
    let seed = ctx.seed;
    let runs = try_map_replicates(m, |r| revesz_stream(&ns, grid_dt, bin_width, seed, r))?;
    let mut at_displacement = Vec::new();
    let mut at_fixed = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let e: Vec<f64> = runs.iter().map(|c| c.errors[i].at_displacement_time).collect();
        let f: Vec<f64> = runs.iter().map(|c| c.errors[i].at_fixed_time).collect();
        for (r, (a, b)) in e.iter().zip(&f).enumerate() {
            report.csv.push(CsvRow::replicate(r as u64, 1, n, "coupling_error", *a));
            report.csv.push(CsvRow::replicate(r as u64, 1, n, "coupling_error_fixed_time", *b));
        }
        let (me, mf) = (median(&e).unwrap(), median(&f).unwrap());
        report.csv.push(CsvRow::aggregate(1, n, "median_coupling_error", me));
        report.csv.push(CsvRow::aggregate(1, n, "median_coupling_error_fixed_time", mf));
        at_displacement.push((n as f64, me));
        at_fixed.push((n as f64, mf));
    }
    let fit = loglog_slope(&at_displacement)?;
    let fixed = loglog_slope(&at_fixed)?;
    let bracket = Check::Between(ctx.cfg.tol("slope_lo", 0.15), ctx.cfg.tol("slope_hi", 0.35));
    report.row(ReportRow::checked("slope_median_coupling_error", fit.slope, bracket, 7));
    report.row(ReportRow::info("r2_median_coupling_error", fit.r_squared));
    report.row(ReportRow::info("slope_median_coupling_error_fixed_time", fixed.slope).with_note("deterministic-time convention"));
    report.csv.push(CsvRow::aggregate(1, 0, "slope_coupling_error", fit.slope));
    report.csv.push(CsvRow::aggregate(1, 0, "slope_coupling_error_fixed_time", fixed.slope));

    let n_max = *ns.last().unwrap();
    let mut ups = 0u64;
    let mut total_time = 0.0;
    for c in &runs {
        let mut prev = 0;
        for &s in &c.embedded_walk {
            ups += (s > prev) as u64;
            prev = s;
        }
        total_time += c.displacement_times().last().copied().unwrap_or(0.0);
    }
    let steps = (m * n_max) as f64;
    report.row(ReportRow::info("up_step_frequency", ups as f64 / steps));
    report.row(ReportRow::info("mean_displacement_time", total_time / steps));
    Ok(())
}
