use rand::RngCore;

use crate::charges::{ChargeFeed, ChargeModel, ChargeStream, DurationMode};
use crate::error::Result;
use crate::hamiltonian::{hamiltonian_path, Checkpoints};
use crate::oracle::direct_sums;
use crate::replicates::try_map_replicates;
use crate::rng::{self, Purpose};
use crate::walk::{record_path, WalkConfig};

use super::report::{Check, CsvRow, ExperimentReport, ReportRow};
use super::Ctx;

const FIELDS: [&str; 8] = ["H", "I", "M", "N", "Xi1", "Xi2", "a", "b"];

fn rel_err(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1.0)
}

/// Random instances checked field by field against direct evaluation.
pub(crate) fn run(ctx: &Ctx<'_>, report: &mut ExperimentReport) -> Result<()> {
    let instances = ctx.cfg.replicates_or(ctx.pick(500, 100));
    let n_max = ctx.cfg.n_values.as_ref().and_then(|v| v.last().copied()).unwrap_or(ctx.pick(200, 60));
    let tol = ctx.cfg.tol("relative_error", 1e-9);
    let discrete = ChargeModel::discrete(&[(-2.0, 0.125), (0.0, 0.75), (2.0, 0.125)])?;
    let seed = ctx.seed;
    let errors = try_map_replicates(instances, |r| {
        let mut pick = rng::stream(seed, r, Purpose::Custom(1));
        let d = 1 + rng::below(pick.next_u64(), 3) as usize;
        let n = 1 + rng::below(pick.next_u64(), n_max);
        let model = if pick.next_u64() >> 63 == 0 { ChargeModel::rademacher() } else { discrete.clone() };
        let mode = if pick.next_u64() >> 63 == 0 { DurationMode::Unit } else { DurationMode::Embedded { grid_dt: 1e-2 } };
        let path = record_path(&WalkConfig::new(d, n, seed).replicate(r))?;
        let mut feed = ChargeFeed::new(&model, mode, seed, r)?;
        let charges = ChargeStream::from_pairs((0..n).map(|_| feed.next_pair()).collect())?;
        let trace = hamiltonian_path(&path, &charges, &Checkpoints::new(vec![]))?;
        let direct = direct_sums(&path, &charges)?;
        let dec = trace.decomposition;
        let errs = [
            rel_err(trace.last.h, direct.h),
            rel_err(dec.i_n as f64, direct.i as f64),
            rel_err(dec.m_n, direct.m),
            rel_err(dec.n_n, direct.n),
            rel_err(dec.xi1, direct.xi1),
            rel_err(dec.xi2, direct.xi2),
            rel_err(dec.a_n, direct.a),
            rel_err(dec.b_n, direct.b),
        ];
        let extra = rel_err(trace.last.xi, direct.xi).max(rel_err(trace.last.v, direct.v));
        Ok((d, n, errs, extra, dec.identity_residual(trace.last.xi)))
    })?;
    let mut worst = [0.0f64; 8];
    let mut worst_clock = 0.0f64;
    let mut worst_identity = 0.0f64;
    for (r, (d, n, errs, extra, ident)) in errors.iter().enumerate() {
        let max = errs.iter().cloned().fold(*extra, f64::max);
        report.csv.push(CsvRow::replicate(r as u64, *d, *n, "max_relative_error", max));
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(*e);
        }
        worst_clock = worst_clock.max(*extra);
        worst_identity = worst_identity.max(*ident);
    }
    report.row(ReportRow::info("instances", instances as f64));
    for (name, w) in FIELDS.iter().zip(worst) {
        report.row(ReportRow::checked(format!("max_rel_error_{name}"), w, Check::AbsBelow(tol), 1));
        report.csv.push(CsvRow::aggregate(0, n_max, format!("max_rel_error_{name}"), w));
    }
    report.row(ReportRow::checked("max_rel_error_V_Xi", worst_clock, Check::AbsBelow(tol), 1));
    report.row(ReportRow::checked("max_identity_residual", worst_identity, Check::AbsBelow(tol), 1));
    Ok(())
}
