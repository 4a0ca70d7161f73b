use crate::brownian::{brownian_lil, lil_constant, lil_trajectory, LilForm, LilTrajectory};
use crate::charges::{ChargeFeed, ChargeModel, DurationMode};
use crate::error::Result;
use crate::hamiltonian::{run_polymer, Checkpoints};
use crate::lattice::kappa_series;
use crate::walk::WalkConfig;

use super::report::{Check, CsvRow, ExperimentReport, ReportRow};
use super::Ctx;

fn record(report: &mut ExperimentReport, d: usize, label: &str, traj: &LilTrajectory) {
    for p in &traj.points {
        report.csv.push(CsvRow::aggregate(d, p.n, format!("lil_{label}"), p.statistic));
        report.csv.push(CsvRow::aggregate(d, p.n, format!("lil_running_min_{label}"), p.running_min));
    }
}

/// One long run per dimension; the running minimum of the LIL statistic
/// must land within a factor 5 of the predicted constant.
pub(crate) fn run(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let n = *ctx.cfg.n_values_or(&[ctx.pick(10_000_000, 1_000_000)]).last().unwrap();
    let model = ctx.cfg.model_or(ChargeModel::rademacher())?;
    let lo = ctx.cfg.tol("factor_lo", 0.2);
    let hi = ctx.cfg.tol("factor_hi", 5.0);
    let kappa = kappa_series(3, 1e-8)?;
    let cp = Checkpoints::default_geometric(n);
    for d in ctx.cfg.dimensions_or(&[1, 2, 3]) {
        model.validate_for_dimension(d)?;
        let mut feed = ChargeFeed::new(&model, DurationMode::Unit, ctx.seed, 0)?;
        let trace = run_polymer(&WalkConfig::new(d, n, ctx.seed), &mut feed, &cp)?.trace;
        let traj = lil_trajectory(&trace, d)?;
        let c = lil_constant(LilForm::for_dimension(d)?, Some(kappa))?;
        let min = traj.final_running_min();
        report.row(ReportRow::info(format!("predicted_constant_d{d}"), c));
        report.row(ReportRow::checked(format!("running_min_d{d}"), min, Check::Between(lo * c, hi * c), 10));
        record(report, d, "H", &traj);
    }
    let t_max = n;
    let traj = brownian_lil(t_max, cp.as_slice(), ctx.seed, 0)?;
    let c = lil_constant(LilForm::Brownian, None)?;
    let min = traj.final_running_min();
    report.row(ReportRow::info("predicted_constant_brownian", c));
    report.row(ReportRow::checked("running_min_brownian", min, Check::Between(lo * c, hi * c), 10));
    let mut tight = ReportRow::checked("running_min_brownian_factor2", min, Check::Between(0.5 * c, 2.0 * c), 10);
    tight.criterion = None;
    report.row(tight);
    record(report, 0, "brownian", &traj);
    Ok(())
}
