use crate::error::{LabError, Result};
use crate::lattice::{intersection_count_expect, kappa_quadrature, kappa_series};
use crate::replicates::try_map_replicates;
use crate::stats::MeanEstimate;
use crate::walk::{simulate_walk, WalkConfig};

use super::report::{Check, CsvRow, ExperimentReport, ReportRow};
use super::Ctx;

/// Value of κ in d = 3 that both routes must reproduce.
const KAPPA_3: f64 = 0.5164;

pub(crate) fn run(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let tol = ctx.cfg.tol("series_tolerance", 1e-4);
    let agree = ctx.cfg.tol("route_agreement", 2e-4);
    let z_max = ctx.cfg.tol("z_max", 3.0);
    let n = ctx.cfg.n_values_or(&[ctx.pick(100_000, 10_000)]);
    let m = ctx.cfg.replicates_or(ctx.pick(200, 50));
    for d in ctx.cfg.dimensions_or(&[3]) {
        if d < 3 {
            return Err(LabError::UnsupportedDimension { dim: d, reason: "κ is finite only for transient walks (d >= 3)" });
        }
        let series = kappa_series(d, tol)?;
        let quad = kappa_quadrature(d)?;
        if d == 3 {
            report.row(ReportRow::checked("kappa_series_d3", series, Check::Near { target: KAPPA_3, tol: agree }, 2));
            report.row(ReportRow::checked("kappa_quadrature_d3", quad, Check::Near { target: KAPPA_3, tol: agree }, 2));
        } else {
            report.row(ReportRow::info(format!("kappa_series_d{d}"), series));
            report.row(ReportRow::info(format!("kappa_quadrature_d{d}"), quad));
        }
        report.row(ReportRow::checked(format!("route_difference_d{d}"), series - quad, Check::AbsBelow(agree), 2));
        report.csv.push(CsvRow::aggregate(d, 0, "kappa_series", series));
        report.csv.push(CsvRow::aggregate(d, 0, "kappa_quadrature", quad));
        for &n in &n {
            let seed = ctx.seed;
            let ratios = try_map_replicates(m, |r| {
                let map = simulate_walk(&WalkConfig::new(d, n, seed).replicate(r), |_| 0.0)?;
                Ok(map.intersection_count() as f64 / n as f64)
            })?;
            for (r, v) in ratios.iter().enumerate() {
                report.csv.push(CsvRow::replicate(r as u64, d, n, "I_over_n", *v));
            }
            let est = MeanEstimate::from_values(&ratios)?;
            let predicted = intersection_count_expect(n as usize, d)?.value / n as f64;
            let z = est.z_score(predicted);
            report.row(ReportRow::info(format!("mean_I_over_n_d{d}_n{n}"), est.mean).with_ci(est.ci(3.0).0, est.ci(3.0).1));
            report.row(ReportRow::info(format!("truncated_series_d{d}_n{n}"), predicted));
            report.row(ReportRow::checked(format!("z_score_d{d}_n{n}"), z, Check::AbsBelow(z_max), 2));
            report.csv.push(CsvRow::aggregate(d, n, "mean_I_over_n", est.mean));
            report.csv.push(CsvRow::aggregate(d, n, "truncated_series", predicted));
        }
    }
    Ok(())
}
